"""Command-line frontend: transform, spectrum, convert-coeffs, gen-sbm,
eval-cluster.

Exit codes: 0 success, 1 computation error, 2 I/O or usage error. Errors
print a single machine-parsable line (E_IO / E_USAGE / E_COMPUTE prefix) on
stderr. The default thread count comes from GRAPHDIFFUSION_THREADS (0 means
automatic).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import coeffs as cf
from .cluster import GdcConfig, SbmSpec, eval_gdc_clustering, generate_sbm
from .engine import diffuse
from .errors import ComputeError, InputError
from .graph import (RandomWalk, SparseGraph, Symmetric, SymmetricSelfLoop,
                    TransitionMatrix, largest_connected_component,
                    load_edge_list, save_edge_list, transition_matrix)
from .sparsify import (PostProcess, TargetDegree, Threshold, TopK,
                       epsilon_for_degree, postprocess, sparsify)
from .spectral import SYMMETRIC, eigen, filter_response_curve, laplacian, spectrum_compare

TOOL_VERSION = "0.1.0"


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    input: str
    output: str
    transition: object
    spec: object
    mode: str  # 'exact' | 'series' | 'push'
    series_k: int | None
    eps_push: float | None
    rule: object
    post: PostProcess
    seed: int
    threads: int
    fmt: str = "edges"

    def items(self):
        """Flat key/value view used for the sidecar and the config hash."""
        kv = {
            "input": self.input,
            "output": self.output,
            "transition": _kind_name(self.transition),
            "w_loop": getattr(self.transition, "w_loop", ""),
            "method": _family_name(self.spec),
            "alpha": getattr(self.spec, "alpha", ""),
            "t": getattr(self.spec, "t", ""),
            "theta": ",".join(repr(v) for v in getattr(self.spec, "theta", ())),
            "mode": self.mode,
            "series_k": self.series_k if self.series_k is not None else "",
            "eps_push": self.eps_push if self.eps_push is not None else "",
            "sparsify": _rule_name(self.rule),
            "symmetrize": str(self.post.symmetrize).lower(),
            "unweighted": str(self.post.unweighted).lower(),
            "renorm": self.post.renorm or "none",
            "seed": self.seed,
            "threads": self.threads,
            "format": self.fmt,
        }
        return {k: str(v) for k, v in kv.items()}

    def config_hash(self):
        blob = "\n".join(f"{k}={v}" for k, v in sorted(self.items().items()))
        return hashlib.sha256(blob.encode()).hexdigest()


def _kind_name(kind):
    if isinstance(kind, RandomWalk):
        return "rw"
    if isinstance(kind, Symmetric):
        return "sym"
    if isinstance(kind, SymmetricSelfLoop):
        return "symloop"
    return str(kind)


def _family_name(spec):
    if isinstance(spec, cf.Ppr):
        return "ppr"
    if isinstance(spec, cf.Heat):
        return "heat"
    if isinstance(spec, cf.Explicit):
        return "explicit"
    return str(spec)


def _rule_name(rule):
    if isinstance(rule, TopK):
        return f"topk:{rule.k}"
    if isinstance(rule, Threshold):
        return f"eps:{rule.eps!r}"
    if isinstance(rule, TargetDegree):
        return f"degree:{rule.avg_degree!r}"
    return str(rule)


def _parse_rule(text):
    try:
        name, _, arg = text.partition(":")
        if name == "topk":
            return TopK(int(arg))
        if name == "eps":
            return Threshold(float(arg))
        if name == "degree":
            return TargetDegree(float(arg))
    except (ValueError, InputError) as exc:
        raise UsageError(f"bad sparsify rule {text!r}: {exc}") from exc
    raise UsageError(f"bad sparsify rule {text!r}; use topk:K, eps:E or degree:D")


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


_PIPELINE_KEYS = ("input", "output", "transition", "wloop", "method", "alpha",
                  "t", "theta_file", "mode", "series_k", "eps_push", "sparsify",
                  "symmetrize", "unweighted", "renorm", "seed", "threads",
                  "format")

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _as_bool(val, key):
    s = str(val).strip().lower()
    if s in _BOOL_TRUE:
        return True
    if s in _BOOL_FALSE:
        return False
    raise UsageError(f"bad boolean for {key}: {val!r}")


def _add_pipeline_flags(p):
    p.add_argument("--input", help="edge-list file to transform")
    p.add_argument("--output", help="destination path")
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--transition", choices=["rw", "sym", "symloop"])
    p.add_argument("--wloop", type=float, help="self-loop weight for symloop")
    p.add_argument("--method", choices=["ppr", "heat", "explicit"])
    p.add_argument("--alpha", type=float, help="teleport probability (ppr)")
    p.add_argument("--t", type=float, help="diffusion time (heat)")
    p.add_argument("--theta-file", help="one weight per line (explicit)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="closed-form solve")
    mode.add_argument("--series", type=int, metavar="K", help="truncated series")
    mode.add_argument("--push", type=float, metavar="EPS",
                      help="per-column push approximation")
    p.add_argument("--sparsify", help="topk:K, eps:E or degree:D")
    sym = p.add_mutually_exclusive_group()
    sym.add_argument("--symmetrize", dest="symmetrize", action="store_const", const=True)
    sym.add_argument("--no-symmetrize", dest="symmetrize", action="store_const", const=False)
    p.add_argument("--unweighted", action="store_const", const=True, default=None)
    p.add_argument("--renorm", choices=["sym", "rw", "none"])
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="0 = automatic")
    p.add_argument("--format", dest="fmt", choices=["edges", "npz"])


def _merged_value(ns_value, file_values, key, default):
    if ns_value is not None:
        return ns_value
    if key in file_values:
        return file_values[key]
    return default


def parse_config(ns):
    """Resolve flags plus optional config file into a PipelineConfig.

    Defaults without any flags: self-loop symmetric transition (w = 1),
    geometric diffusion with teleport 0.15 solved in closed form, top-64
    sparsification, symmetrization and random-walk renormalization.
    """
    file_values = _read_config_file(ns.config) if getattr(ns, "config", None) else {}
    for key in file_values:
        if key not in _PIPELINE_KEYS:
            raise UsageError(f"unknown config key {key!r}")

    def get(key, default=None):
        return _merged_value(getattr(ns, key, None), file_values, key, default)

    input_path = get("input")
    output_path = get("output")
    if not input_path or not output_path:
        raise UsageError("--input and --output are required")

    trans_name = get("transition", "symloop")
    wloop = get("wloop")
    if wloop is not None and trans_name != "symloop":
        raise UsageError("--wloop applies only to the symloop transition")
    if trans_name == "rw":
        transition = RandomWalk()
    elif trans_name == "sym":
        transition = Symmetric()
    elif trans_name == "symloop":
        transition = SymmetricSelfLoop(float(wloop) if wloop is not None else 1.0)
    else:
        raise UsageError(f"unknown transition {trans_name!r}")

    method = get("method", "ppr")
    alpha = get("alpha")
    t_val = get("t")
    theta_file = get("theta_file")
    if alpha is not None and t_val is not None:
        raise UsageError("--alpha and --t are mutually exclusive")
    if method == "ppr":
        if t_val is not None or theta_file:
            raise UsageError("--t/--theta-file conflict with method ppr")
        spec = cf.Ppr(float(alpha) if alpha is not None else 0.15)
    elif method == "heat":
        if alpha is not None or theta_file:
            raise UsageError("--alpha/--theta-file conflict with method heat")
        if t_val is None:
            raise UsageError("method heat requires --t")
        spec = cf.Heat(float(t_val))
    elif method == "explicit":
        if alpha is not None or t_val is not None:
            raise UsageError("--alpha/--t conflict with method explicit")
        if not theta_file:
            raise UsageError("method explicit requires --theta-file")
        spec = cf.Explicit(tuple(_read_vector(theta_file)))
    else:
        raise UsageError(f"unknown method {method!r}")

    mode = get("mode")
    series_k = None
    eps_push = None
    if getattr(ns, "series", None) is not None:
        mode, series_k = "series", int(ns.series)
    elif getattr(ns, "push", None) is not None:
        mode, eps_push = "push", float(ns.push)
    elif getattr(ns, "exact", False):
        mode = "exact"
    elif mode is None:
        mode = "exact"
    if mode == "series" and series_k is None:
        sk = get("series_k")
        series_k = int(sk) if sk is not None else None
    if mode == "push":
        if eps_push is None:
            ep = get("eps_push")
            if ep is None:
                raise UsageError("push mode requires an epsilon")
            eps_push = float(ep)
        if not isinstance(transition, RandomWalk):
            raise UsageError("push mode requires --transition rw")
    if mode not in ("exact", "series", "push"):
        raise UsageError(f"unknown mode {mode!r}")

    rule_text = get("sparsify", "topk:64")
    rule = _parse_rule(rule_text) if isinstance(rule_text, str) else rule_text

    symmetrize = get("symmetrize", True)
    if isinstance(symmetrize, str):
        symmetrize = _as_bool(symmetrize, "symmetrize")
    unweighted = get("unweighted", False)
    if isinstance(unweighted, str):
        unweighted = _as_bool(unweighted, "unweighted")
    renorm = get("renorm", "rw")
    if renorm == "none":
        renorm = None
    post = PostProcess(symmetrize=bool(symmetrize), unweighted=bool(unweighted),
                       renorm=renorm)

    seed = int(get("seed", 0))
    threads = get("threads")
    if threads is None:
        threads = int(os.environ.get("GRAPHDIFFUSION_THREADS", "0"))
    return PipelineConfig(input=str(input_path), output=str(output_path),
                          transition=transition, spec=spec, mode=mode,
                          series_k=series_k, eps_push=eps_push, rule=rule,
                          post=post, seed=seed, threads=int(threads),
                          fmt=get("fmt", file_values.get("format", "edges")))


def _read_vector(path):
    out = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(float(Fraction(line)) if "/" in line else float(line))
    if not out:
        raise InputError(f"{path}: no numbers found")
    return out


def _write_vector(path, values):
    with open(path, "w") as fh:
        for v in values:
            fh.write(f"{v}\n" if isinstance(v, Fraction) else f"{float(v)!r}\n")


def _is_identity_spec(spec):
    return isinstance(spec, cf.Explicit) and all(v == 0.0 for v in spec.theta[1:])


def run_pipeline(cfg):
    """Load, diffuse, sparsify, postprocess, export. Returns the metadata."""
    timings = {}
    t0 = time.perf_counter()
    g = load_edge_list(cfg.input, directed=False)
    g, index_map = largest_connected_component(g)
    timings["load"] = time.perf_counter() - t0

    if _is_identity_spec(cfg.spec):
        print("warning: diffusion weights are the identity; the output graph "
              "contains only self-loops", file=sys.stderr)

    t0 = time.perf_counter()
    t_matrix = transition_matrix(g, cfg.transition)
    timings["transition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    s = diffuse(t_matrix, cfg.spec, mode=cfg.mode, series_k=cfg.series_k,
                eps_push=cfg.eps_push, threads=cfg.threads)
    timings["diffuse"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rule = cfg.rule
    eps_resolved = ""
    if isinstance(rule, TargetDegree):
        eps = epsilon_for_degree(s, rule.avg_degree)
        eps_resolved = repr(eps)
        rule = Threshold(eps)
    elif isinstance(rule, Threshold):
        eps_resolved = repr(rule.eps)
    sparse_graph = sparsify(s, rule)
    timings["sparsify"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = postprocess(sparse_graph, cfg.post)
    timings["postprocess"] = time.perf_counter() - t0

    if isinstance(result, TransitionMatrix):
        out_graph = SparseGraph.from_scipy(result.matrix, directed=True,
                                           original_ids=result.source.original_ids,
                                           allow_loops=True)
    else:
        out_graph = result

    meta = dict(cfg.items())
    meta.update({
        "epsilon_resolved": eps_resolved,
        "nodes_input": str(int(index_map.size)),
        "nodes": str(out_graph.n),
        "lcc_dropped": str(int(np.sum(index_map < 0))),
        "config_hash": cfg.config_hash(),
        "tool_version": TOOL_VERSION,
    })
    for stage, secs in timings.items():
        meta[f"stage_seconds_{stage}"] = f"{secs:.6f}"
    meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")

    t0 = time.perf_counter()
    if cfg.fmt == "npz":
        sp.save_npz(cfg.output, out_graph.to_scipy())
        with open(cfg.output + ".meta", "w") as fh:
            for k, v in meta.items():
                fh.write(f"{k} = {v}\n")
    else:
        save_edge_list(cfg.output, out_graph, metadata=meta)
    meta["stage_seconds_export"] = f"{time.perf_counter() - t0:.6f}"
    return meta


def cmd_transform(ns):
    cfg = parse_config(ns)
    run_pipeline(cfg)
    return 0


def cmd_spectrum(ns):
    cfg = parse_config(ns)
    g = load_edge_list(cfg.input, directed=False)
    g, _ = largest_connected_component(g)
    before = eigen(laplacian(g, SYMMETRIC), source="input L_sym")

    t_matrix = transition_matrix(g, cfg.transition)
    s = diffuse(t_matrix, cfg.spec, mode=cfg.mode, series_k=cfg.series_k,
                eps_push=cfg.eps_push, threads=cfg.threads)
    rule = cfg.rule
    if isinstance(rule, TargetDegree):
        rule = Threshold(epsilon_for_degree(s, rule.avg_degree))
    result = postprocess(sparsify(s, rule), cfg.post)
    if isinstance(result, TransitionMatrix):
        if isinstance(result.kind, RandomWalk) and not result.source.directed:
            # I - T_rw of a symmetric graph shares its spectrum with the
            # symmetric normalized Laplacian of the same graph
            after = eigen(laplacian(result.source, SYMMETRIC),
                          source="output L_sym (similar to rw form)")
        else:
            lap = sp.identity(result.matrix.shape[0], format="csc") - result.matrix
            lap = (lap + lap.T) * 0.5
            after = eigen(lap, source="output Laplacian (symmetrized)")
    else:
        after = eigen(laplacian(result, SYMMETRIC), source="output L_sym")

    delta = spectrum_compare(before, after)
    with open(cfg.output, "w") as fh:
        fh.write("index,lambda_before,lambda_after,delta\n")
        bs = np.sort(before.eigenvalues)
        as_ = np.sort(after.eigenvalues)
        for i, (b, a, d) in enumerate(zip(bs, as_, delta.deltas)):
            fh.write(f"{i},{float(b)!r},{float(a)!r},{float(d)!r}\n")

    grid = np.linspace(0.0, 2.0, 201)
    curve = filter_response_curve(cfg.spec, grid)
    curve_path = cfg.output + ".response.csv"
    with open(curve_path, "w") as fh:
        fh.write("lambda_L,response\n")
        for lam, resp in curve:
            fh.write(f"{float(lam)!r},{float(resp)!r}\n")
    print(f"spectrum delta l2 = {delta.l2:.6g}; curves in {cfg.output} "
          f"and {curve_path}")
    return 0


def cmd_convert_coeffs(ns):
    vec = _read_vector(ns.input)
    if ns.mode == "exact":
        vec = [Fraction(v).limit_denominator(10 ** 12) for v in vec]
    if ns.direction == "theta-to-xi":
        out = cf.theta_to_xi(vec, mode=ns.mode)
    else:
        out = cf.xi_to_theta(vec, mode=ns.mode)
    _write_vector(ns.output, out)
    return 0


def cmd_gen_sbm(ns):
    blocks = tuple(int(b) for b in ns.blocks.split(","))
    spec = SbmSpec(blocks, ns.p_in, ns.p_out, seed=ns.seed)
    g, labels = generate_sbm(spec)
    save_edge_list(ns.output, g, metadata={
        "generator": "sbm",
        "blocks": ns.blocks,
        "p_in": repr(ns.p_in),
        "p_out": repr(ns.p_out),
        "gen_seed": str(ns.seed),
    })
    with open(ns.output + ".labels", "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")
    print(f"wrote {g.n} nodes, {g.edge_count} edges to {ns.output}")
    return 0


def cmd_eval_cluster(ns):
    blocks = tuple(int(b) for b in ns.blocks.split(","))
    sbm = SbmSpec(blocks, ns.p_in, ns.p_out, seed=ns.seed)
    gdc = GdcConfig(spec=cf.Ppr(ns.alpha), rule=TopK(ns.topk),
                    unweighted=ns.unweighted)
    report = eval_gdc_clustering(sbm, gdc=gdc, seeds=ns.seeds,
                                 num_clusters=ns.clusters, threads=ns.threads)
    if ns.output:
        with open(ns.output, "w") as fh:
            fh.write("seed,raw_accuracy,gdc_accuracy,delta\n")
            for i, (r, a) in enumerate(zip(report.raw_acc, report.gdc_acc)):
                fh.write(f"{sbm.seed + i},{float(r)!r},{float(a)!r},"
                         f"{float(a - r)!r}\n")
    print(f"raw   mean accuracy {report.raw_mean:.4f} "
          f"ci95 [{report.raw_ci[0]:.4f}, {report.raw_ci[1]:.4f}]")
    print(f"gdc   mean accuracy {report.gdc_mean:.4f} "
          f"ci95 [{report.gdc_ci[0]:.4f}, {report.gdc_ci[1]:.4f}]")
    print(f"delta mean {report.delta_mean:+.4f} "
          f"ci95 [{report.delta_ci[0]:+.4f}, {report.delta_ci[1]:+.4f}]")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphdiffusion",
        description="Transform graphs via sparsified generalized diffusion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="run the full diffusion pipeline")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("spectrum", help="compare spectra before/after the pipeline")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("convert-coeffs", help="convert weight vectors")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--direction", choices=["theta-to-xi", "xi-to-theta"],
                   required=True)
    p.add_argument("--mode", choices=["float", "exact"], default="float")
    p.set_defaults(func=cmd_convert_coeffs)

    p = sub.add_parser("gen-sbm", help="sample a planted-partition graph")
    p.add_argument("--blocks", required=True, help="comma-separated sizes")
    p.add_argument("--p-in", dest="p_in", type=float, required=True)
    p.add_argument("--p-out", dest="p_out", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("eval-cluster", help="paired clustering evaluation")
    p.add_argument("--blocks", required=True)
    p.add_argument("--p-in", dest="p_in", type=float, required=True)
    p.add_argument("--p-out", dest="p_out", type=float, required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=None)
    p.add_argument("--alpha", type=float, default=0.15)
    p.add_argument("--topk", type=int, default=64)
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("GRAPHDIFFUSION_THREADS", "0")))
    p.add_argument("--output", help="per-seed CSV report")
    p.set_defaults(func=cmd_eval_cluster)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"E_USAGE: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 2
    except (InputError, ComputeError) as exc:
        print(f"E_COMPUTE: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
