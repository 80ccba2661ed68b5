"""Laplacians, eigendecompositions, eigenvalue maps and polynomial filters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coeffs import Explicit, Heat, Ppr
from .errors import InputError
from .graph import RandomWalk, SparseGraph, Symmetric, TransitionMatrix

DENSE_EIGEN_CAP = 3000

UNNORMALIZED = "unnormalized"
RANDOM_WALK = "rw"
SYMMETRIC = "sym"


def laplacian(obj, kind=SYMMETRIC):
    """Graph Laplacian of a SparseGraph, or I - T of a TransitionMatrix.

    kinds: 'unnormalized' (D - A), 'rw' (I - A D^-1) and 'sym'
    (I - D^-1/2 A D^-1/2). The rw Laplacian is asymmetric; analyze it
    through the symmetric kind, which shares its spectrum.
    """
    if isinstance(obj, TransitionMatrix):
        return (sp.identity(obj.n, format="csc") - obj.matrix).tocsc()
    if not isinstance(obj, SparseGraph):
        raise InputError("laplacian expects a SparseGraph or TransitionMatrix")
    g = obj
    d = g.degrees()
    if kind == UNNORMALIZED:
        return (sp.diags(d, format="csc") - g.to_scipy()).tocsc()
    if np.any(d == 0):
        bad = int(np.flatnonzero(d == 0)[0])
        raise InputError(f"node {bad} has degree 0; normalized Laplacians "
                         "need positive degrees")
    rows = g.row_idx
    cols = g.column_of_entry()
    if kind == RANDOM_WALK:
        vals = g.values / d[cols]
    elif kind == SYMMETRIC:
        s = 1.0 / np.sqrt(d)
        vals = g.values * (s[rows] * s[cols])
    else:
        raise InputError(f"unknown Laplacian kind {kind!r}")
    t = sp.csc_matrix((vals, rows.copy(), g.col_ptr.copy()), shape=(g.n, g.n))
    return (sp.identity(g.n, format="csc") - t).tocsc()


@dataclass
class SpectrumReport:
    """Ascending eigenvalues of a symmetric matrix, optionally with vectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    source: str


def eigen(matrix, want_vectors=False, source="", cap=DENSE_EIGEN_CAP):
    """Dense symmetric eigendecomposition, ascending order.

    Asymmetric input is refused: random-walk normalized operators share
    their spectrum with the symmetric kind via the similarity transform
    D^1/2 T_rw D^-1/2, so analyze that instead. Raise cap explicitly to
    decompose matrices above the default size guard.
    """
    m = np.asarray(matrix.toarray() if sp.issparse(matrix) else matrix,
                   dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("eigen expects a square matrix")
    n = m.shape[0]
    if n > cap:
        raise InputError(f"matrix size {n} exceeds the dense eigensolver cap "
                         f"{cap}; pass cap={n} to override")
    scale = max(1.0, float(np.abs(m).max()) if n else 1.0)
    if n and float(np.abs(m - m.T).max()) > 1e-10 * scale:
        raise InputError("matrix is not symmetric; analyze random-walk "
                         "operators via their similar symmetric form")
    if want_vectors:
        w, u = np.linalg.eigh(m)
        return SpectrumReport(w, u, source)
    w = np.linalg.eigvalsh(m)
    return SpectrumReport(w, None, source)


def eigen_of_transition(t, want_vectors=False, cap=DENSE_EIGEN_CAP):
    """Spectrum of a TransitionMatrix; RW kinds go through T_sym."""
    if isinstance(t.kind, RandomWalk):
        s = np.sqrt(t.degrees)
        sim = sp.diags(1.0 / s) @ t.matrix @ sp.diags(s)
        sim = (sim + sim.T) * 0.5
        return eigen(sim, want_vectors, source="T_rw (via symmetric similar form)",
                     cap=cap)
    return eigen(t.matrix, want_vectors, source=f"{type(t.kind).__name__}", cap=cap)


def eigenvalue_map(spec, lam):
    """Eigenvalue of the diffusion operator at a transition eigenvalue lam.

    Closed forms: alpha / (1 - (1 - alpha) lam) for the geometric family and
    e^(t (lam - 1)) for heat; explicit weights use the finite power sum.
    """
    lam = float(lam)
    if isinstance(spec, Ppr):
        # denominator written as a + (1-a)(1-lam) so lam = 1 maps to 1.0
        # exactly; algebraically equal to 1 - (1-a) lam
        return spec.alpha / (spec.alpha + (1.0 - spec.alpha) * (1.0 - lam))
    if isinstance(spec, Heat):
        return float(np.exp(spec.t * (lam - 1.0)))
    if isinstance(spec, Explicit):
        acc = 0.0
        for th in reversed(spec.theta):
            acc = acc * lam + th
        return acc
    raise InputError(f"unknown diffusion spec {spec!r}")


def filter_response_curve(spec, laplacian_grid):
    """Response lambda_tilde over Laplacian eigenvalues in [0, 2].

    Returns an array of rows (lambda_L, response) with
    response = eigenvalue_map(spec, 1 - lambda_L). For the geometric and
    heat families this is strictly decreasing: a low-pass filter.
    """
    grid = np.asarray(laplacian_grid, dtype=np.float64)
    if grid.size and (grid.min() < 0.0 or grid.max() > 2.0):
        raise InputError("Laplacian grid values must lie in [0, 2]")
    resp = np.array([eigenvalue_map(spec, 1.0 - x) for x in grid])
    return np.column_stack([grid, resp])


def apply_poly_filter(xi, L, x):
    """Evaluate (sum_j xi_j L^j) x by Horner's rule; L^j is never formed."""
    xi = list(xi)
    x = np.asarray(x, dtype=np.float64)
    if L.shape[0] != L.shape[1] or L.shape[1] != x.shape[0]:
        raise InputError("dimension mismatch between filter operator and vector")
    y = xi[-1] * x
    for c in reversed(xi[:-1]):
        y = L @ y + c * x
    return y


@dataclass
class SpectrumDelta:
    """Sorted-order eigenvalue deviations between two spectra."""

    deltas: np.ndarray = field(repr=False)
    l2: float = 0.0
    max_abs: float = 0.0


def spectrum_compare(before, after):
    """Per-index deltas (after - before) of ascending eigenvalues.

    Pairing is by sorted order; eigenvector matching is not attempted.
    """
    a = np.sort(np.asarray(before.eigenvalues, dtype=np.float64))
    b = np.sort(np.asarray(after.eigenvalues, dtype=np.float64))
    if a.shape != b.shape:
        raise InputError(f"spectrum sizes differ: {a.size} vs {b.size}")
    deltas = b - a
    return SpectrumDelta(deltas=deltas,
                         l2=float(np.sqrt(np.sum(deltas ** 2))),
                         max_abs=float(np.max(np.abs(deltas))) if deltas.size else 0.0)
