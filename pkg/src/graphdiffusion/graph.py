"""Sparse graph container, connectivity helpers and transition matrices.

Graphs are stored column-major (compressed sparse column). All weights are
strictly positive, row indices are sorted within each column, and duplicate
coordinates are merged at load time. Undirected graphs store every edge in
both triangles so the matrix is exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import InputError


@dataclass(frozen=True)
class RandomWalk:
    """Column-stochastic normalization A D^-1."""


@dataclass(frozen=True)
class Symmetric:
    """Symmetric normalization D^-1/2 A D^-1/2."""


@dataclass(frozen=True)
class SymmetricSelfLoop:
    """Symmetric normalization of the self-loop adjusted adjacency.

    Builds (w I + D)^-1/2 (w I + A) (w I + D)^-1/2, equivalent to a lazy
    walk that stays put at node i with probability w / (w + D_ii).
    """

    w_loop: float = 1.0

    def __post_init__(self):
        if not self.w_loop > 0:
            raise InputError(f"self-loop weight must be positive, got {self.w_loop}")


TransitionKind = RandomWalk | Symmetric | SymmetricSelfLoop


class SparseGraph:
    """Immutable weighted graph in CSC form.

    Attributes:
        n: node count.
        col_ptr, row_idx, values: the CSC arrays (values > 0).
        directed: if False the stored matrix is exactly symmetric.
        original_ids: maps dense node id -> id in the source data.
    """

    __slots__ = ("n", "col_ptr", "row_idx", "values", "directed", "original_ids")

    def __init__(self, n, col_ptr, row_idx, values, directed,
                 original_ids=None, allow_loops=False):
        self.n = int(n)
        self.col_ptr = np.asarray(col_ptr, dtype=np.int64)
        self.row_idx = np.asarray(row_idx, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self.directed = bool(directed)
        if original_ids is None:
            original_ids = np.arange(self.n, dtype=np.int64)
        self.original_ids = np.asarray(original_ids, dtype=np.int64)
        self._validate(allow_loops)

    def _validate(self, allow_loops):
        if self.col_ptr.shape != (self.n + 1,):
            raise InputError("column pointer array has wrong length")
        if np.any(self.values <= 0):
            raise InputError("edge weights must be strictly positive")
        for j in range(self.n):
            rows = self.row_idx[self.col_ptr[j]:self.col_ptr[j + 1]]
            if rows.size > 1 and np.any(np.diff(rows) <= 0):
                raise InputError(f"rows not sorted or duplicated in column {j}")
        if not allow_loops:
            cols = self.column_of_entry()
            if np.any(self.row_idx == cols):
                raise InputError("self-loops are not allowed in a base adjacency")
        if not self.directed:
            m = self.to_scipy()
            if (m != m.T).nnz != 0:
                raise InputError("undirected graph must be stored symmetrically")

    @classmethod
    def from_scipy(cls, matrix, directed, original_ids=None, allow_loops=False):
        """Canonicalize a scipy sparse matrix into a SparseGraph."""
        m = sp.csc_matrix(matrix)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.indptr, m.indices, m.data, directed,
                   original_ids=original_ids, allow_loops=allow_loops)

    def to_scipy(self):
        return sp.csc_matrix((self.values, self.row_idx, self.col_ptr),
                             shape=(self.n, self.n))

    @property
    def nnz(self):
        return int(self.values.size)

    @property
    def edge_count(self):
        """Number of edges (undirected pairs counted once, loops once)."""
        if self.directed:
            return self.nnz
        loops = int(np.sum(self.row_idx == self.column_of_entry()))
        return (self.nnz - loops) // 2 + loops

    def column_of_entry(self):
        """Column index of every stored entry, aligned with row_idx."""
        return np.repeat(np.arange(self.n), np.diff(self.col_ptr))

    def degrees(self):
        """Weighted degree per node (column sums; row sums when symmetric)."""
        out = np.zeros(self.n)
        np.add.at(out, self.column_of_entry(), self.values)
        return out

    def in_degrees(self):
        """Weighted row sums; differs from degrees() only for directed graphs."""
        out = np.zeros(self.n)
        np.add.at(out, self.row_idx, self.values)
        return out

    def column(self, j):
        """(row indices, weights) of column j."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def same_structure(self, other):
        return (self.n == other.n
                and self.directed == other.directed
                and np.array_equal(self.col_ptr, other.col_ptr)
                and np.array_equal(self.row_idx, other.row_idx)
                and np.array_equal(self.values, other.values))


def load_graph(edges, n_hint=None, directed=False, allow_self_loops=False):
    """Build a SparseGraph from (src, dst[, weight]) tuples.

    Node ids are densified to 0..N-1 unless n_hint fixes the node count, in
    which case ids are used as-is. Repeated identical (src, dst) lines merge
    by weight summation. For undirected input an edge may be listed in one
    or both orientations; the stored weight of {i, j} is the larger of the
    two directed totals, so mirrored listings do not double their weight
    while genuinely repeated lines still accumulate.
    """
    src, dst, wgt = [], [], []
    for e in edges:
        if len(e) == 2:
            s, d = e
            w = 1.0
        else:
            s, d, w = e
        s, d, w = int(s), int(d), float(w)
        if s < 0 or d < 0:
            raise InputError(f"node ids must be non-negative, got ({s}, {d})")
        if w <= 0:
            raise InputError(f"edge weight must be positive, got {w} on ({s}, {d})")
        if s == d and not allow_self_loops:
            raise InputError(f"self-loop on node {s} rejected")
        src.append(s)
        dst.append(d)
        wgt.append(w)

    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    wgt = np.asarray(wgt, dtype=np.float64)

    if n_hint is not None:
        n = int(n_hint)
        if src.size and max(src.max(), dst.max()) >= n:
            raise InputError("node id exceeds n_hint")
        original_ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.unique(np.concatenate([src, dst])) if src.size else np.array([], dtype=np.int64)
        n = int(ids.size)
        lookup = {int(v): i for i, v in enumerate(ids)}
        src = np.array([lookup[int(v)] for v in src], dtype=np.int64)
        dst = np.array([lookup[int(v)] for v in dst], dtype=np.int64)
        original_ids = ids

    # Entries are (row, col) = (dst, src) so that column j holds the edges
    # leaving node j; for undirected graphs the distinction vanishes.
    m = sp.csc_matrix((wgt, (dst, src)), shape=(n, n))
    m.sum_duplicates()
    if not directed:
        m = m.maximum(m.T)
    return SparseGraph.from_scipy(m, directed, original_ids=original_ids,
                                  allow_loops=allow_self_loops)


def largest_connected_component(g):
    """Restrict g to its largest (weakly) connected component.

    Returns the subgraph and an index map old -> new with -1 for dropped
    nodes. Ties between equally sized components go to the one containing
    the smallest node id.
    """
    if g.n == 0:
        raise InputError("empty graph has no connected component")
    ncomp, labels = csgraph.connected_components(g.to_scipy(), directed=g.directed,
                                                 connection="weak")
    sizes = np.bincount(labels, minlength=ncomp)
    keep = int(np.argmax(sizes))
    mask = labels == keep
    index_map = np.full(g.n, -1, dtype=np.int64)
    index_map[mask] = np.arange(int(mask.sum()))
    sub = g.to_scipy()[mask][:, mask]
    return (SparseGraph.from_scipy(sub, g.directed,
                                   original_ids=g.original_ids[mask],
                                   allow_loops=True),
            index_map)


@dataclass(frozen=True)
class TransitionMatrix:
    """Degree-normalized adjacency tied to its source graph.

    matrix is CSC; degrees are the weighted degrees of the source graph
    (before any self-loop adjustment).
    """

    matrix: sp.csc_matrix
    kind: TransitionKind
    source: SparseGraph
    degrees: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]


def transition_matrix(g, kind):
    """Construct T_rw, T_sym or the self-loop adjusted symmetric variant."""
    d = g.degrees()
    zero = np.flatnonzero(d == 0)
    if isinstance(kind, (RandomWalk, Symmetric)) and zero.size:
        raise InputError(f"node {int(zero[0])} has degree 0; "
                         "extract the largest connected component first")

    rows = g.row_idx
    cols = g.column_of_entry()
    if isinstance(kind, RandomWalk):
        vals = g.values / d[cols]
        m = sp.csc_matrix((vals, rows.copy(), g.col_ptr.copy()), shape=(g.n, g.n))
    elif isinstance(kind, Symmetric):
        s = 1.0 / np.sqrt(d)
        # s[rows] * s[cols] is computed first so mirrored entries round
        # identically and the matrix is symmetric bit for bit.
        vals = g.values * (s[rows] * s[cols])
        m = sp.csc_matrix((vals, rows.copy(), g.col_ptr.copy()), shape=(g.n, g.n))
    elif isinstance(kind, SymmetricSelfLoop):
        w = float(kind.w_loop)
        s = 1.0 / np.sqrt(w + d)
        vals = g.values * (s[rows] * s[cols])
        off = sp.csc_matrix((vals, rows.copy(), g.col_ptr.copy()), shape=(g.n, g.n))
        diag = sp.diags(w * (s * s), format="csc")
        m = (off + diag).tocsc()
        m.sort_indices()
    else:
        raise InputError(f"unknown transition kind {kind!r}")
    return TransitionMatrix(matrix=m, kind=kind, source=g, degrees=d)


def save_edge_list(path, g, metadata=None):
    """Write g as whitespace-separated edge lines plus a .meta sidecar.

    Undirected graphs emit each edge once (upper triangle by stored order);
    directed graphs emit every entry. Weights use shortest-round-trip
    formatting so a reload reproduces the exact float values.
    """
    cols = g.column_of_entry()
    lines = []
    for r, c, v in zip(g.row_idx, cols, g.values):
        if not g.directed and r > c:
            continue
        # edge line is "src dst weight" with src = column (origin of mass)
        lines.append(f"{int(c)} {int(r)} {float(v)!r}\n")
    with open(path, "w") as fh:
        fh.writelines(lines)

    meta = {
        "nodes": g.n,
        "edges": g.edge_count,
        "directed": str(g.directed).lower(),
        "id_map": ",".join(str(int(i)) for i in g.original_ids),
    }
    if metadata:
        meta.update(metadata)
    with open(str(path) + ".meta", "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {v}\n")


def read_edge_list(path):
    """Parse an edge-list file into (src, dst, weight) tuples.

    Lines are whitespace separated, '#' starts a comment, weights default
    to 1.0.
    """
    edges = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 'src dst [weight]'")
            s, d = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
            edges.append((s, d, w))
    return edges


def load_edge_list(path, directed=False, allow_self_loops=False):
    return load_graph(read_edge_list(path), directed=directed,
                      allow_self_loops=allow_self_loops)
