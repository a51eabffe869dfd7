"""Incomplete-Cholesky engine.

The grounded normalised Laplacian ``Lv`` is factored as ``R R^T`` with a
threshold drop rule, then the columns of ``S = R^{-1}`` are built right to
left from a sliding window of already-sparsified columns.  ``||S[:, u]||^2``
estimates the grounded inverse diagonal that the pivot reformulation needs.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .apprwc import DiagEstimates, app_rwc
from .graph import Graph
from .linalg import normalized_laplacian, submatrix_remove

logger = logging.getLogger(__name__)

# relative slack on the sparsification budget, absorbs summation roundoff
_MASS_SLACK = 1e-12


class ICholBreakdown(np.linalg.LinAlgError):
    pass


@dataclass
class CholFactor:
    """Lower-triangular incomplete factor ``R`` (CSC, diagonal first in each column)."""

    R: sp.csc_matrix
    dropped: int
    shift: float = 0.0

    @property
    def dimension(self) -> int:
        return self.R.shape[0]

    @property
    def nnz(self) -> int:
        return self.R.nnz


@dataclass
class SparseColumn:
    """Column ``owner`` of an approximate inverse factor, indices ascending."""

    owner: int
    indices: np.ndarray
    values: np.ndarray
    discarded: float = 0.0

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def sq_norm(self) -> float:
        return float(self.values @ self.values)

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.values
        return out


@dataclass
class FastCholParams:
    delta: float = 1e-4
    eps_p: float | None = None
    window: float | None = None
    zeta: int | None = None
    theta: float | None = None
    ordering: str = "degree"

    def resolved(self, n: int, epsilon: float) -> "FastCholParams":
        """Fill unset fields: ``zeta = window = ceil(log2 n)``, ``eps_p = epsilon``."""
        log_n = max(1, math.ceil(math.log2(max(n, 2))))
        out = FastCholParams(**asdict(self))
        if out.eps_p is None:
            out.eps_p = epsilon
        if out.window is None:
            out.window = log_n
        if out.zeta is None:
            out.zeta = log_n
        out.validate()
        return out

    def validate(self):
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")
        if self.eps_p is not None and not 0 <= self.eps_p < 1:
            raise ValueError("eps_p must lie in [0, 1)")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1")
        if self.zeta is not None and self.zeta < 0:
            raise ValueError("zeta must be >= 0")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"unknown ordering {self.ordering!r}")


# --------------------------------------------------------------------------
# incomplete Cholesky


def ichol(Lv, delta: float, *, max_retries: int = 5, initial_shift: float = 1e-8) -> CholFactor:
    """Threshold incomplete Cholesky of an SPD matrix.

    An entry ``(i, j)`` of the partially eliminated matrix is dropped when
    ``|a_ij| < delta * sqrt(|A_ii| |A_jj|)``.  ``A - R R^T`` then consists of
    exactly the dropped values.  On a non-positive pivot the factorisation is
    retried on ``A + alpha I`` with ``alpha`` doubling from ``initial_shift``.
    """
    A = sp.csr_matrix(Lv)
    A.sort_indices()
    diag = A.diagonal().astype(float)
    shift = 0.0
    for attempt in range(max_retries + 1):
        colptr, rows, vals, dropped, failed_at = _ichol_kernel(
            A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data.astype(float),
            diag, float(delta), shift,
        )
        if failed_at < 0:
            n = A.shape[0]
            R = sp.csc_matrix((vals, rows, colptr), shape=(n, n))
            return CholFactor(R, int(dropped), shift)
        if attempt == max_retries:
            break
        shift = initial_shift if shift == 0.0 else 2.0 * shift
        logger.warning("ichol breakdown at column %d; retrying with shift %.3g", failed_at, shift)
    raise ICholBreakdown(f"non-positive pivot at column {failed_at} after {max_retries} shifted retries")


@nb.njit(cache=True)
def _grow_int(a, need):
    if need <= len(a):
        return a
    out = np.empty(max(need, 2 * len(a)), dtype=a.dtype)
    out[: len(a)] = a
    return out


@nb.njit(cache=True)
def _grow_float(a, need):
    if need <= len(a):
        return a
    out = np.empty(max(need, 2 * len(a)), dtype=a.dtype)
    out[: len(a)] = a
    return out


@nb.njit(cache=True)
def _ichol_kernel(indptr, indices, data, diag, delta, shift):
    # Left-looking column factorisation.  head[r] chains the finished columns
    # whose next unconsumed row is r; cur[k] points at that entry of column k.
    n = len(indptr) - 1
    cap = max(16, 4 * len(data))
    r_idx = np.empty(cap, dtype=np.int64)
    r_val = np.empty(cap, dtype=np.float64)
    colptr = np.zeros(n + 1, dtype=np.int64)
    w = np.zeros(n)
    mark = np.full(n, -1, dtype=np.int64)
    pattern = np.empty(n, dtype=np.int64)
    head = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    cur = np.zeros(n, dtype=np.int64)
    nz = 0
    dropped = 0
    for j in range(n):
        npat = 0
        mark[j] = j
        w[j] = shift
        pattern[npat] = j
        npat += 1
        for p in range(indptr[j], indptr[j + 1]):
            i = indices[p]
            if i < j:
                continue
            if mark[i] != j:
                mark[i] = j
                w[i] = 0.0
                pattern[npat] = i
                npat += 1
            w[i] += data[p]
        k = head[j]
        head[j] = -1
        while k != -1:
            next_k = nxt[k]
            p0 = cur[k]
            rjk = r_val[p0]
            for p in range(p0, colptr[k + 1]):
                i = r_idx[p]
                if mark[i] != j:
                    mark[i] = j
                    w[i] = 0.0
                    pattern[npat] = i
                    npat += 1
                w[i] -= rjk * r_val[p]
            p0 += 1
            cur[k] = p0
            if p0 < colptr[k + 1]:
                row = r_idx[p0]
                nxt[k] = head[row]
                head[row] = k
            k = next_k

        pivot = w[j]
        if not pivot > 0.0:
            return colptr, r_idx[:nz], r_val[:nz], dropped, j
        rjj = np.sqrt(pivot)
        rows = np.sort(pattern[:npat])
        r_idx = _grow_int(r_idx, nz + npat)
        r_val = _grow_float(r_val, nz + npat)
        r_idx[nz] = j
        r_val[nz] = rjj
        nz += 1
        for t in range(npat):
            i = rows[t]
            if i == j:
                continue
            val = w[i]
            if val == 0.0:
                continue
            if abs(val) < delta * np.sqrt(abs(diag[i]) * abs(diag[j])):
                dropped += 1
                continue
            r_idx[nz] = i
            r_val[nz] = val / rjj
            nz += 1
        colptr[j + 1] = nz
        if colptr[j] + 1 < nz:
            cur[j] = colptr[j] + 1
            row = r_idx[cur[j]]
            nxt[j] = head[row]
            head[row] = j
    return colptr, r_idx[:nz], r_val[:nz], dropped, -1


# --------------------------------------------------------------------------
# sparse inverse columns


@nb.njit(cache=True)
def _sparsify_order(idx, val, eps_p, zeta):
    """Positions (into idx/val) of the entries kept and the discarded mass share.

    Discards the smallest magnitudes while their total stays within the
    budget.  Among equal magnitudes at the cut the larger indices go first,
    so the kept set matches a stable descending sort with small indices first.
    """
    nnz = len(idx)
    if nnz <= zeta:
        return np.arange(nnz), 0.0
    mags = np.abs(val)
    total = mags.sum()
    budget = eps_p * total * (1.0 + _MASS_SLACK)
    order = np.argsort(mags)
    tail = 0.0
    cut = 0
    while cut < nnz and tail + mags[order[cut]] <= budget:
        tail += mags[order[cut]]
        cut += 1
    if cut == 0:
        return np.arange(nnz), 0.0
    keep = np.ones(nnz, dtype=np.bool_)
    edge = mags[order[cut - 1]]
    n_edge = 0
    for t in range(cut):
        if mags[order[t]] < edge:
            keep[order[t]] = False
        else:
            n_edge += 1
    ties = np.flatnonzero(mags == edge)
    tie_order = np.argsort(-idx[ties], kind="mergesort")
    for t in range(n_edge):
        keep[ties[tie_order[t]]] = False
    return np.flatnonzero(keep), (tail / total if total > 0 else 0.0)


def sparsify_column(col: SparseColumn, eps_p: float, zeta: int) -> SparseColumn:
    """Keep the fewest largest-magnitude entries whose discarded 1-norm share is <= ``eps_p``.

    Columns with at most ``zeta`` non-zeros are returned unchanged.  Ties in
    magnitude keep the smaller index first.
    """
    keep, discarded = _sparsify_order(col.indices, col.values, float(eps_p), int(zeta))
    keep = np.sort(col.indices[keep].copy())
    lookup = dict(zip(col.indices.tolist(), col.values.tolist()))
    return SparseColumn(col.owner, keep, [lookup[i] for i in keep.tolist()], discarded)


def invert_column_step(R: CholFactor, u: int, columns: dict[int, SparseColumn], window: float) -> SparseColumn:
    """Window-restricted column of ``R^{-1}``.

    ``S*[:, u] = e_u / R_uu - sum_i (R_iu / R_uu) S~[:, i]`` over
    ``u < i <= u + window`` with ``R_iu != 0``; ``columns`` holds ``S~[:, i]``.
    """
    Rc = R.R
    start, stop = Rc.indptr[u], Rc.indptr[u + 1]
    rows, vals = Rc.indices[start:stop], Rc.data[start:stop]
    r_uu = vals[rows == u][0]
    acc = {u: 1.0 / r_uu}
    for i, r_iu in zip(rows.tolist(), vals.tolist()):
        if i == u or i > u + window:
            continue
        coef = -r_iu / r_uu
        col = columns[i]
        for k, s in zip(col.indices.tolist(), col.values.tolist()):
            acc[k] = acc.get(k, 0.0) + coef * s
    idx = np.array(sorted(acc), dtype=np.int64)
    return SparseColumn(u, idx, [acc[k] for k in idx.tolist()])


@nb.njit(cache=True)
def _inverse_columns_kernel(colptr, r_idx, r_val, deg, d_max, n_nodes, w0, zeta, eps_p, keep_star):
    n = len(colptr) - 1
    cap = max(16, 8 * n)
    s_idx = np.empty(cap, dtype=np.int64)
    s_val = np.empty(cap, dtype=np.float64)
    start = np.zeros(n, dtype=np.int64)
    end = np.zeros(n, dtype=np.int64)
    star_cap = 16 if not keep_star else cap
    t_idx = np.empty(star_cap, dtype=np.int64)
    t_val = np.empty(star_cap, dtype=np.float64)
    t_start = np.zeros(n, dtype=np.int64)
    t_end = np.zeros(n, dtype=np.int64)
    tau = np.zeros(n)
    star_nnz = np.zeros(n, dtype=np.int64)
    acc = np.zeros(n)
    mark = np.full(n, -1, dtype=np.int64)
    pattern = np.empty(n, dtype=np.int64)
    nz = 0
    tz = 0
    ws = w0
    for u in range(n - 1, -1, -1):
        ws = min(ws * (1.0 + deg[u] / d_max), n_nodes)
        p_diag = colptr[u]
        r_uu = r_val[p_diag]
        npat = 1
        pattern[0] = u
        mark[u] = u
        acc[u] = 1.0 / r_uu
        for p in range(p_diag + 1, colptr[u + 1]):
            i = r_idx[p]
            if i > u + ws:
                break
            coef = -r_val[p] / r_uu
            for q in range(start[i], end[i]):
                row = s_idx[q]
                if mark[row] != u:
                    mark[row] = u
                    acc[row] = 0.0
                    pattern[npat] = row
                    npat += 1
                acc[row] += coef * s_val[q]
        idx = pattern[:npat].copy()
        val = np.empty(npat)
        for t in range(npat):
            val[t] = acc[idx[t]]
        star_nnz[u] = npat
        if keep_star:
            t_idx = _grow_int(t_idx, tz + npat)
            t_val = _grow_float(t_val, tz + npat)
            t_start[u] = tz
            for t in range(npat):
                t_idx[tz] = idx[t]
                t_val[tz] = val[t]
                tz += 1
            t_end[u] = tz
        keep, _ = _sparsify_order(idx, val, eps_p, zeta)
        s_idx = _grow_int(s_idx, nz + len(keep))
        s_val = _grow_float(s_val, nz + len(keep))
        start[u] = nz
        sq = 0.0
        for t in range(len(keep)):
            s_idx[nz] = idx[keep[t]]
            x = val[keep[t]]
            s_val[nz] = x
            sq += x * x
            nz += 1
        end[u] = nz
        tau[u] = sq
    return (tau, start, end, s_idx[:nz], s_val[:nz], star_nnz,
            t_start, t_end, t_idx[:tz], t_val[:tz], ws)


@dataclass
class InverseColumns:
    """Output of the right-to-left pass over ``R``."""

    tau: np.ndarray
    columns: sp.csc_matrix
    star: sp.csc_matrix | None
    star_nnz: np.ndarray
    final_window: float


def _to_csc(n, start, end, idx, val):
    lengths = end - start
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    take = np.concatenate([np.arange(s, e) for s, e in zip(start, end)]) if n else np.zeros(0, np.int64)
    M = sp.csc_matrix((val[take], idx[take], indptr), shape=(n, n))
    M.sort_indices()
    return M


def inverse_columns(R: CholFactor, degrees, d_max: int, n_nodes: int, window: float,
                    zeta: int, eps_p: float, keep_star: bool = False) -> InverseColumns:
    """Sparse approximation of ``R^{-1}`` and the squared column norms.

    ``degrees`` are the graph degrees of the rows of ``R``; the window grows as
    ``w <- min(w (1 + d_u / d_max), n_nodes)`` before each column.
    """
    Rc = sp.csc_matrix(R.R)
    Rc.sort_indices()
    n = Rc.shape[0]
    out = _inverse_columns_kernel(
        Rc.indptr.astype(np.int64), Rc.indices.astype(np.int64), Rc.data.astype(float),
        np.asarray(degrees, dtype=float), float(d_max), float(n_nodes), float(window),
        int(zeta), float(eps_p), bool(keep_star),
    )
    tau, start, end, s_idx, s_val, star_nnz, t_start, t_end, t_idx, t_val, ws = out
    cols = _to_csc(n, start, end, s_idx, s_val)
    star = _to_csc(n, t_start, t_end, t_idx, t_val) if keep_star else None
    return InverseColumns(tau, cols, star, star_nnz, float(ws))


# --------------------------------------------------------------------------
# engine


ORDERINGS = ("natural", "rcm", "degree")


def grounded_system(g: Graph, v: int, ordering: str = "degree"):
    """``Lv`` in elimination order, the node of each row, and that node's degree."""
    Lv, nodes = submatrix_remove(normalized_laplacian(g), v)
    if ordering == "natural":
        return Lv, nodes
    if ordering == "rcm":
        perm = reverse_cuthill_mckee(Lv, symmetric_mode=True).astype(np.int64)
    else:
        # low degree first, hubs last: hubs eliminated early fill their whole neighbourhood
        perm = np.argsort(g.degrees[nodes], kind="stable")
    Lv = Lv[perm][:, perm].tocsr()
    return Lv, nodes[perm]


def fastchol(g: Graph, v: int, params: FastCholParams | None = None, epsilon: float = 0.1):
    """Centrality via incomplete Cholesky and windowed sparse inversion.

    Unset parameters default to ``delta=1e-4``, ``zeta = window = ceil(log2 n)``,
    ``eps_p = epsilon`` and the sampling engine's solver accuracy for ``epsilon``.
    """
    from .fastwalk import theta_for_graph

    start_time = time.perf_counter()
    p = (params or FastCholParams()).resolved(g.n, epsilon)
    theta = p.theta if p.theta is not None else theta_for_graph(g, epsilon)
    Lv, nodes = grounded_system(g, v, p.ordering)
    R = ichol(Lv, p.delta)
    inv = inverse_columns(R, g.degrees[nodes], g.d_max, g.n, p.window, p.zeta, p.eps_p)
    values = np.empty(g.n - 1)
    rank = np.searchsorted(np.delete(np.arange(g.n), v), nodes)
    values[rank] = inv.tau
    result = app_rwc(g, v, theta, DiagEstimates(values, v, "fastchol"))
    result.engine = "fastchol"
    result.params.update({
        "epsilon": epsilon,
        "theta": theta,
        "delta": p.delta,
        "eps_p": p.eps_p,
        "window": p.window,
        "zeta": p.zeta,
        "ordering": p.ordering,
        "dropped": R.dropped,
        "shift": R.shift,
        "nnz_R": R.nnz,
        "nnz_S": int(inv.columns.nnz),
        "final_window": inv.final_window,
    })
    result.elapsed = time.perf_counter() - start_time
    return result
