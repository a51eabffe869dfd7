"""Pivot reformulation: centrality of every node from one pivot column and a grounded diagonal."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .graph import Graph, stationary_distribution
from .linalg import bridge_vector
from .result import CentralityResult

logger = logging.getLogger(__name__)

SCORE_FLOOR = 1.0


@dataclass
class DiagEstimates:
    """Estimates of the grounded inverse diagonal on ``V \\ {pivot}`` (ascending order)."""

    values: np.ndarray
    pivot: int
    provenance: str = "exact"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def full(self, n: int) -> np.ndarray:
        """Length-``n`` vector with zero at the pivot."""
        if len(self.values) != n - 1:
            raise ValueError(f"expected {n - 1} diagonal entries, got {len(self.values)}")
        out = np.zeros(n)
        out[np.arange(n) != self.pivot] = self.values
        return out


def assemble_score(pi_u, d_u, d_v, diag_u, y_v, y_u):
    """One node's score from the pivot reformulation.

    With ``diag_u = 0`` and ``u = v`` this collapses to ``y_v / pi_v``.
    Works elementwise on arrays.
    """
    ratio = np.sqrt(np.divide(d_u, d_v))
    return (diag_u - (np.divide(d_u, d_v)) * y_v + 2.0 * ratio * y_u) / pi_u


def app_rwc(
    g: Graph,
    v: int,
    theta: float,
    diag: DiagEstimates,
    *,
    floor: float = SCORE_FLOOR,
    L=None,
) -> CentralityResult:
    """Centrality for all nodes with a single Laplacian solve.

    Non-positive assembled scores (only possible under loose diagonal
    estimates) are replaced by ``floor`` and counted in ``params["clamped"]``.
    """
    if diag.pivot != v:
        raise ValueError(f"diagonal estimates are for pivot {diag.pivot}, not {v}")
    start = time.perf_counter()
    tau = diag.full(g.n)
    y, report = bridge_vector(g, v, theta, L=L)
    d = g.degrees.astype(float)
    pi = stationary_distribution(g)
    scores = assemble_score(pi, d, d[v], tau, y[v], y)
    scores[v] = y[v] / pi[v]

    bad = ~(scores > 0)
    clamped = int(bad.sum())
    if clamped:
        logger.warning("%d assembled scores were non-positive; clamped to %g", clamped, floor)
        scores[bad] = floor
    params = {
        "pivot": int(g.labels[v]),
        "theta": theta,
        "solver": report.as_dict(),
        "clamped": clamped,
        "diag_provenance": diag.provenance,
        "bipartite": g.is_bipartite,
    }
    return CentralityResult(scores, "apprwc", g.labels, params, time.perf_counter() - start)
