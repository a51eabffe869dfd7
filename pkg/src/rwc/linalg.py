"""Laplacian operators, a deflated PCG Laplacian solver and dense pseudo-inverses."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .graph import Graph

logger = logging.getLogger(__name__)

DENSE_CAP = 5000
KAPPA_GUARD = 10.0


class DenseCapExceeded(ValueError):
    pass


@dataclass
class SolverReport:
    iterations: int
    residual: float
    converged: bool
    target: float = 0.0
    projected: bool = False

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "target": self.target,
        }


class SolverError(RuntimeError):
    """PCG did not reach its residual target; carries the best iterate."""

    def __init__(self, message, x, report: SolverReport):
        super().__init__(message)
        self.x = x
        self.report = report


def laplacian(g: Graph) -> sp.csr_matrix:
    n = g.n
    adj = sp.csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(n, n))
    return (sp.diags(g.degrees.astype(float)) - adj).tocsr()


def normalized_laplacian(g: Graph) -> sp.csr_matrix:
    if (g.degrees == 0).any():
        raise ValueError("normalized Laplacian needs every degree >= 1")
    n = g.n
    rows = np.repeat(np.arange(n), g.degrees)
    inv_sqrt = 1.0 / np.sqrt(g.degrees)
    off = -inv_sqrt[rows] * inv_sqrt[g.indices]
    adj = sp.csr_matrix((off, g.indices, g.indptr), shape=(n, n))
    return (sp.identity(n, format="csr") + adj).tocsr()


def submatrix_remove(M, v: int):
    """Delete row and column ``v``; returns ``(submatrix, index_map)``."""
    n = M.shape[0]
    if n < 2:
        raise ValueError("cannot remove a node from a 1x1 matrix")
    keep = np.delete(np.arange(n), v)
    if sp.issparse(M):
        sub = M.tocsr()[keep][:, keep].tocsr()
        sub.sort_indices()
    else:
        sub = np.asarray(M)[np.ix_(keep, keep)]
    return sub, keep


def lap_solve(L, b, theta: float, *, guard: float = KAPPA_GUARD, max_iter: int | None = None):
    """Solve ``L g = b`` for a connected-graph Laplacian ``L``.

    Jacobi-preconditioned CG restricted to the complement of the all-ones
    vector.  Stops once ``||L g - b|| / ||b|| <= theta / guard`` (checked on the
    true residual).  ``b`` is projected onto ``1^perp`` first.
    Returns ``(g, SolverReport)``; raises :class:`SolverError` on hitting the
    iteration cap ``20 sqrt(n) + 1000``.
    """
    L = sp.csr_matrix(L)
    n = L.shape[0]
    b = np.array(b, dtype=float)
    drift = abs(b.sum())
    projected = drift > 1e-10 * max(1.0, np.abs(b).sum())
    if projected:
        logger.warning("right-hand side not orthogonal to ones (|sum|=%.3g); projecting", drift)
    b -= b.mean()
    bnorm = np.linalg.norm(b)
    target = theta / guard
    if bnorm == 0.0:
        return np.zeros(n), SolverReport(0, 0.0, True, target, projected)
    if max_iter is None:
        max_iter = int(20 * math.sqrt(n) + 1000)

    inv_diag = 1.0 / L.diagonal()
    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    z -= z.mean()
    p = z.copy()
    rz = r @ z
    best_x, best_res = x.copy(), 1.0
    res = 1.0
    it = 0
    while it < max_iter:
        it += 1
        q = L @ p
        alpha = rz / (p @ q)
        x += alpha * p
        if it % 50 == 0:
            r = b - L @ x
        else:
            r -= alpha * q
        res = np.linalg.norm(r) / bnorm
        if res <= target:
            r = b - L @ x
            res = np.linalg.norm(r) / bnorm
            if res <= target:
                break
        if res < best_res:
            best_x, best_res = x.copy(), res
        z = inv_diag * r
        z -= z.mean()
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        best_x -= best_x.mean()
        report = SolverReport(it, best_res, False, target, projected)
        raise SolverError(
            f"PCG stalled at relative residual {best_res:.3g} > {target:.3g} after {it} iterations",
            best_x,
            report,
        )
    x -= x.mean()
    return x, SolverReport(it, float(res), True, target, projected)


def _spd_inverse(A: np.ndarray) -> np.ndarray:
    """Inverse of a dense SPD matrix via Cholesky (potrf + potri)."""
    c, lower = sla.cho_factor(A, lower=True, overwrite_a=False, check_finite=False)
    inv, info = sla.lapack.dpotri(c, lower=True)
    if info != 0:
        raise np.linalg.LinAlgError(f"dpotri failed with info={info}")
    inv = np.tril(inv)
    inv += np.tril(inv, -1).T
    return inv


def check_dense_cap(n: int, cap: int | None) -> None:
    cap = DENSE_CAP if cap is None else cap
    if n > cap:
        raise DenseCapExceeded(
            f"n={n} exceeds the dense cap of {cap}; use the fastchol or fastwalk engine"
        )


def pinv_dense(M, kind: str = "laplacian", *, degrees=None, cap: int | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a connected (normalised) Laplacian.

    Uses the rank-one shift ``(M + phi phi^T)^{-1} - phi phi^T`` with the unit
    null vector ``phi``: ``1/sqrt(n)`` for ``kind="laplacian"`` and
    ``sqrt(d)/sqrt(2m)`` for ``kind="normalized"`` (``degrees`` required).
    """
    n = M.shape[0]
    check_dense_cap(n, cap)
    A = M.toarray() if sp.issparse(M) else np.array(M, dtype=float)
    if kind == "laplacian":
        phi = np.full(n, 1.0 / math.sqrt(n))
    elif kind == "normalized":
        if degrees is None:
            raise ValueError("normalized pseudo-inverse needs the degree vector")
        d = np.asarray(degrees, dtype=float)
        phi = np.sqrt(d / d.sum())
    else:
        raise ValueError(f"unknown kind {kind!r}")
    outer = np.outer(phi, phi)
    A += outer
    out = _spd_inverse(A)
    out -= outer
    return out


def rank_one_project(g: Graph, x: np.ndarray) -> np.ndarray:
    """Apply ``I - (1/2m) D^{1/2} 1 1^T D^{1/2}`` without forming it."""
    s = np.sqrt(g.degrees)
    return x - s * (s @ x) / (2.0 * g.m)


def bridge_vector(g: Graph, v: int, theta: float, L=None):
    """Approximate column ``v`` of the normalised-Laplacian pseudo-inverse.

    One Laplacian solve against ``D^{1/2} P e_v`` followed by ``P D^{1/2}``,
    where ``P`` is the rank-one projection above.  Returns ``(y, SolverReport)``.
    """
    s = np.sqrt(g.degrees.astype(float))
    e_v = np.zeros(g.n)
    e_v[v] = 1.0
    b = s * rank_one_project(g, e_v)
    L = laplacian(g) if L is None else L
    z, report = lap_solve(L, b, theta)
    y = rank_one_project(g, s * z)
    return y, report
