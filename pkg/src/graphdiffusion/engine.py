"""Computation of the diffusion matrix: closed form, series and push modes.

Three routes to S = sum_k theta_k T^k:

* exact geometric diffusion solves (I - (1-a)T) s_j = a e_j for every
  column, densely (LU) at small sizes or by the stationary Richardson
  iteration above that, keeping memory at O(nnz + N * columns);
* truncated series accumulates Horner style, never materializing T^k;
* per-column push approximations stay local: mass is expanded only where
  the residual is large, with an explicit residual vector certifying the
  error, so the cost per column is bounded independently of graph size.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coeffs import DiffusionSpec, Heat, Ppr, theta_tail, theta_vector, truncation_k
from .errors import ComputeError, InputError
from .graph import RandomWalk, TransitionKind, TransitionMatrix

DENSE_SOLVE_CAP = 1500
# After threshold pushes finish, residual is drained until its total mass
# is below PUSH_L1_FACTOR * eps_push, tying the column's L1 error to eps.
PUSH_L1_FACTOR = 50.0


@dataclass
class DiffusionMatrix:
    """Columns of the diffusion operator with their generating recipe."""

    data: object  # dense ndarray or scipy CSC
    spec: DiffusionSpec | None
    kind: TransitionKind
    exactness: str  # 'exact', 'series:K', 'push:EPS'

    @property
    def n(self):
        return self.data.shape[0]

    def toarray(self):
        if sp.issparse(self.data):
            return self.data.toarray()
        return self.data

    def column(self, j):
        if sp.issparse(self.data):
            return np.asarray(self.data[:, [j]].todense()).ravel()
        return self.data[:, j]

    def is_sparse(self):
        return sp.issparse(self.data)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InputError(f"teleport probability must be in (0, 1), got {alpha}")


def diffuse_exact_ppr(T, alpha, mode="auto", tol=1e-10, max_iter=100_000):
    """Exact geometric diffusion a (I - (1-a) T)^-1.

    mode 'dense' factorizes densely (verification path, small graphs);
    'iterative' runs the Richardson iteration X <- a I + (1-a) T X whose
    error contracts by (1-a) per step. 'auto' picks dense below
    DENSE_SOLVE_CAP nodes. The per-column residual infinity norm is checked
    against tol either way.
    """
    _check_alpha(alpha)
    n = T.n
    m = T.matrix
    if mode == "auto":
        mode = "dense" if n <= DENSE_SOLVE_CAP else "iterative"

    if mode == "dense":
        a = np.eye(n) - (1.0 - alpha) * m.toarray()
        x = np.linalg.solve(a, alpha * np.eye(n))
    elif mode == "iterative":
        aye = alpha * np.eye(n)
        x = aye.copy()
        step = (1.0 - alpha)
        # entries of the residual shrink like a (1-a)^(k+1); iterate past the
        # analytic estimate, then confirm on the true residual
        est = int(np.ceil(np.log(tol / alpha) / np.log1p(-alpha))) + 2
        for _ in range(min(est, max_iter)):
            x = aye + step * (m @ x)
    else:
        raise InputError(f"unknown solve mode {mode!r}")

    resid = alpha * np.eye(n) - (x - (1.0 - alpha) * (m @ x))
    worst = float(np.abs(resid).max()) if n else 0.0
    if worst > tol:
        raise ComputeError(f"linear solve did not reach tolerance {tol:g}; "
                           f"worst column residual {worst:g}")
    return DiffusionMatrix(data=x, spec=Ppr(alpha), kind=T.kind, exactness="exact")


def diffuse_series(T, spec, K):
    """Truncated series sum_{k=0..K} theta_k T^k, accumulated Horner style."""
    if K < 0:
        raise InputError(f"series order must be non-negative, got {K}")
    th = theta_vector(spec, K)
    n = T.n
    if len(th) == 1 or all(v == 0.0 for v in th[1:]):
        # degenerate weights never touch T
        x = th[0] * np.eye(n)
        return DiffusionMatrix(data=x, spec=spec, kind=T.kind, exactness=f"series:{K}")
    m = T.matrix
    diag = np.arange(n)
    x = th[-1] * np.eye(n)
    for coef in reversed(th[:-1]):
        x = m @ x
        if coef != 0.0:
            x[diag, diag] += coef
    return DiffusionMatrix(data=x, spec=spec, kind=T.kind, exactness=f"series:{K}")


@dataclass
class PushColumn:
    """A localized diffusion column plus the accounting of its computation.

    indices/values hold the nonzero approximation. residual_l1 bounds the
    L1 distance to the exact column. touched counts threshold-phase push
    events, the quantity with a size-independent ceiling of
    1 / (alpha * eps * min_degree).
    """

    indices: np.ndarray
    values: np.ndarray
    residual_l1: float
    touched: int
    support: int
    rounds_threshold: int
    rounds_drain: int

    def dense(self, n):
        out = np.zeros(n)
        out[self.indices] = self.values
        return out


def _require_random_walk(T):
    if not isinstance(T.kind, RandomWalk):
        raise InputError("push approximations require the column-stochastic "
                         "random-walk transition matrix")


def diffuse_push_ppr(T, alpha, eps_push, column, l1_factor=PUSH_L1_FACTOR):
    """Approximate one geometric-diffusion column by residual pushing.

    Phase one repeatedly expands every node whose residual exceeds
    eps_push * degree, moving alpha of it into the answer and spreading the
    rest along the node's transition column; it ends with
    max_i r_i / degree_i < eps_push and work bounded independently of N.
    Phase two propagates the leftover residual mass (a plain damped matvec
    per round, no thresholds) until its total is at most
    l1_factor * eps_push, which caps the column's L1 error at that value.
    The identity exact = p + a (I - (1-a)T)^-1 r holds throughout.
    """
    _require_random_walk(T)
    _check_alpha(alpha)
    if not eps_push > 0:
        raise InputError(f"push tolerance must be positive, got {eps_push}")
    n = T.n
    if not 0 <= column < n:
        raise InputError(f"column {column} out of range for {n} nodes")
    m = T.matrix
    deg = T.degrees
    thresholds = eps_push * deg

    p = np.zeros(n)
    r = np.zeros(n)
    r[column] = 1.0
    touched = 0
    rounds_threshold = 0
    spread = 1.0 - alpha
    while True:
        active = np.flatnonzero(r >= thresholds)
        if active.size == 0:
            break
        rounds_threshold += 1
        touched += int(active.size)
        ra = r[active]
        p[active] += alpha * ra
        r[active] = 0.0
        r += spread * (m[:, active] @ ra)

    cap = l1_factor * eps_push
    rounds_drain = 0
    mass = float(r.sum())
    while mass > cap:
        rounds_drain += 1
        p += alpha * r
        r = spread * (m @ r)
        mass *= spread

    nz = np.flatnonzero(p)
    return PushColumn(indices=nz, values=p[nz], residual_l1=float(r.sum()),
                      touched=touched, support=int(nz.size),
                      rounds_threshold=rounds_threshold, rounds_drain=rounds_drain)


def diffuse_push_heat(T, t, eps_push, column):
    """Approximate one heat-kernel column by staged residual expansion.

    Stage k holds mass that still needs k more transition steps. Stages are
    expanded in order; before expanding, the smallest residual entries
    whose total fits the per-stage budget eps_push / (2 K) are dropped, and
    the stage count K is chosen so the undone analytic tail is below
    eps_push / 2. Every future reweighting factor is at most one, so the
    returned column is within eps_push (and a fortiori eps_push * e^t) of
    the exact column in L1.
    """
    _require_random_walk(T)
    spec = Heat(t)
    if not eps_push > 0:
        raise InputError(f"push tolerance must be positive, got {eps_push}")
    n = T.n
    if not 0 <= column < n:
        raise InputError(f"column {column} out of range for {n} nodes")
    m = T.matrix

    k_max = truncation_k(spec, eps_push / 2.0) + 1
    th = theta_vector(spec, k_max)
    budget = eps_push / (2.0 * max(1, k_max))

    x = np.zeros(n)
    r = np.zeros(n)
    r[column] = 1.0
    touched = 0
    dropped = 0.0
    for k in range(k_max):
        idx = np.flatnonzero(r)
        if idx.size == 0:
            break
        vals = r[idx]
        order = np.argsort(vals, kind="stable")
        cum = np.cumsum(vals[order])
        ndrop = int(np.searchsorted(cum, budget, side="right"))
        if ndrop:
            dropped += float(cum[ndrop - 1])
        keep = idx[order[ndrop:]]
        if keep.size == 0:
            r = np.zeros(n)
            continue
        kv = r[keep]
        touched += int(keep.size)
        x[keep] += th[k] * kv
        r = np.asarray(m[:, keep] @ kv)
    else:
        # absorb the final stage's own weight; its onward tail is the cut
        x += th[k_max] * r

    nz = np.flatnonzero(x)
    return PushColumn(indices=nz, values=x[nz],
                      residual_l1=float(dropped + theta_tail(spec, k_max - 1)),
                      touched=touched, support=int(nz.size),
                      rounds_threshold=k_max, rounds_drain=0)


def diffuse_push_matrix(T, spec, eps_push, threads=0):
    """All columns of a push approximation, assembled into CSC.

    Columns are independent; they are computed in a thread pool and written
    to disjoint slots, so the result does not depend on scheduling.
    """
    n = T.n
    if isinstance(spec, Ppr):
        def one(j):
            return diffuse_push_ppr(T, spec.alpha, eps_push, j)
    elif isinstance(spec, Heat):
        def one(j):
            return diffuse_push_heat(T, spec.t, eps_push, j)
    else:
        raise InputError("push mode supports the geometric and heat families only")

    workers = threads if threads and threads > 0 else None
    if workers == 1:
        cols = [one(j) for j in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(one, range(n)))

    indptr = np.zeros(n + 1, dtype=np.int64)
    for j, c in enumerate(cols):
        indptr[j + 1] = indptr[j] + c.indices.size
    indices = np.concatenate([c.indices for c in cols]) if n else np.array([], dtype=np.int64)
    data = np.concatenate([c.values for c in cols]) if n else np.array([])
    mat = sp.csc_matrix((data, indices, indptr), shape=(n, n))
    return DiffusionMatrix(data=mat, spec=spec, kind=T.kind,
                           exactness=f"push:{eps_push:g}")


def diffuse(T, spec, mode="exact", series_k=None, eps_push=None,
            tail_tol=1e-12, threads=0):
    """Dispatch to the exact, series or push computation of the diffusion.

    'exact' requires the geometric family (other specs fall back to a
    series truncated at tail_tol). 'series' uses series_k or derives it
    from tail_tol. 'push' requires eps_push and a random-walk transition.
    """
    if mode == "exact":
        if isinstance(spec, Ppr):
            return diffuse_exact_ppr(T, spec.alpha)
        k = truncation_k(spec, tail_tol)
        return diffuse_series(T, spec, k)
    if mode == "series":
        k = series_k if series_k is not None else truncation_k(spec, tail_tol)
        return diffuse_series(T, spec, k)
    if mode == "push":
        if eps_push is None:
            raise InputError("push mode needs eps_push")
        return diffuse_push_matrix(T, spec, eps_push, threads=threads)
    raise InputError(f"unknown diffusion mode {mode!r}")
