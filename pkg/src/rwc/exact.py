"""Dense ground truth: exact centrality, hitting times and diag of the grounded inverse.

Everything here is O(n^3) and guarded by the dense cap.
"""

from __future__ import annotations

import time

import numpy as np

from .graph import Graph, stationary_distribution
from .linalg import _spd_inverse, check_dense_cap, normalized_laplacian, pinv_dense
from .result import CentralityResult


def normalized_pinv(g: Graph, cap: int | None = None) -> np.ndarray:
    check_dense_cap(g.n, cap)
    return pinv_dense(normalized_laplacian(g), "normalized", degrees=g.degrees, cap=cap)


def exact_rwc(g: Graph, cap: int | None = None) -> CentralityResult:
    """``H_u = (Lpinv)_uu / pi_u`` from the dense normalised-Laplacian pseudo-inverse."""
    start = time.perf_counter()
    check_dense_cap(g.n, cap)
    diag = np.diag(normalized_pinv(g, cap)).copy()
    scores = diag / stationary_distribution(g)
    return CentralityResult(
        scores, "exact", g.labels, {"bipartite": g.is_bipartite}, time.perf_counter() - start
    )


def _transition_dense(g: Graph) -> np.ndarray:
    P = np.zeros((g.n, g.n))
    rows = np.repeat(np.arange(g.n), g.degrees)
    P[rows, g.indices] = 1.0 / g.degrees[rows]
    return P


def hitting_times_to(g: Graph, j: int, cap: int | None = None) -> np.ndarray:
    """Expected first-passage times ``H_ij`` to ``j`` from every ``i`` (``H_jj = 0``).

    Solves ``(I - P_j) h = 1`` on ``V \\ {j}``.
    """
    check_dense_cap(g.n, cap)
    keep = np.delete(np.arange(g.n), j)
    P = _transition_dense(g)[np.ix_(keep, keep)]
    h = np.linalg.solve(np.eye(g.n - 1) - P, np.ones(g.n - 1))
    out = np.zeros(g.n)
    out[keep] = h
    return out


def exact_hitting_time(g: Graph, i: int, j: int, cap: int | None = None) -> float:
    if i == j:
        raise ValueError("hitting time needs distinct endpoints")
    return float(hitting_times_to(g, j, cap)[i])


def grounded_normalized_inverse(g: Graph, v: int, cap: int | None = None) -> np.ndarray:
    """Dense inverse of the normalised Laplacian with row/column ``v`` removed."""
    check_dense_cap(g.n, cap)
    keep = np.delete(np.arange(g.n), v)
    Lv = normalized_laplacian(g)[keep][:, keep].toarray()
    return _spd_inverse(Lv)


def exact_diag_Lv_inv(g: Graph, v: int, cap: int | None = None) -> np.ndarray:
    """Diagonal of the grounded inverse, ordered as ``V \\ {v}`` ascending."""
    return np.diag(grounded_normalized_inverse(g, v, cap)).copy()
