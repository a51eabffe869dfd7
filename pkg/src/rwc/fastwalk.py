"""Spanning-tree sampling engine.

Wilson's algorithm rooted at the pivot ``v`` visits each other node ``u`` a
random number of times whose mean is the grounded inverse diagonal
``(Lv^{-1})_uu``.  Averaging visit counts over ``l`` independent trees gives
the diagonal the pivot reformulation needs.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .apprwc import DiagEstimates, app_rwc
from .graph import Graph, diameter

MAX_STEPS_PER_SAMPLE = 10**9
# eccentricity sweeps before settling for the certified diameter upper bound
DIAMETER_SWEEPS = 32


class SamplingError(RuntimeError):
    pass


class SpectralRadiusError(RuntimeError):
    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


# --------------------------------------------------------------------------
# sample plan


def theta_for(epsilon: float, diam: float, d_max: float, m: float, n: float) -> float:
    """Solver accuracy that keeps the pivot-column error within ``epsilon / 2``."""
    if min(epsilon, diam, d_max, m, n) <= 0:
        raise ValueError("theta_for needs positive arguments")
    spread = (1.0 + d_max * (1.0 + n) / (2.0 * m)) ** 2
    return epsilon / (2.0 * diam * d_max * spread * math.sqrt(m * n * diam))


def diameter_bound(g: Graph, max_bfs: int | None = DIAMETER_SWEEPS) -> tuple[int, bool]:
    """Diameter, or an upper bound on it when the sweep budget runs out.

    An upper bound only shrinks theta, so accuracy is never lost.
    """
    diam, exact = diameter(g, max_bfs=max_bfs)
    return max(int(diam), 1), exact


def theta_for_graph(g: Graph, epsilon: float) -> float:
    diam, _ = diameter_bound(g)
    return theta_for(epsilon, diam, g.d_max, g.m, g.n)


def log_argument(n: int, m: int, d_minus_v_norm: float) -> float:
    """``m / (n sqrt(n - 1)) * ||d_{-v}||_2``, the argument of the walk-length logarithm."""
    return m / (n * math.sqrt(n - 1)) * d_minus_v_norm


def sample_size(n: int, m: int, d_minus_v_norm: float, lam: float | None, epsilon: float):
    """Number of spanning trees for additive accuracy ``epsilon / 2`` on the diagonal.

    ``l = 2 eps^-2 log(2n) log^2(arg) / log^2(lambda)`` clamped to at least 1.
    When ``lambda <= 0`` (or unknown) or ``arg >= 1`` the ratio is undefined and
    the plain Hoeffding count ``ceil(2 eps^-2 log 2n)`` is used instead.
    Returns ``(l, degenerate)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    base = 2.0 * math.log(2 * n) / epsilon**2
    arg = log_argument(n, m, d_minus_v_norm)
    if lam is None or not 0.0 < lam < 1.0 or arg >= 1.0:
        return max(1, math.ceil(base)), True
    ratio = (math.log(arg) / math.log(lam)) ** 2
    return max(1, math.ceil(base * ratio)), False


def walk_length_bound(n: int, m: int, d_minus_v_norm: float, lam: float) -> float:
    """Walk length ``t`` beyond which a trapped walk survives with probability below ``1/n``.

    ``t = log(m / (n sqrt(n-1) ||d_{-v}||)) / log(lambda)``; infinite when
    ``lambda >= 1`` and zero when ``lambda <= 0``.
    """
    if lam <= 0.0:
        return 0.0
    if lam >= 1.0:
        return math.inf
    return math.log(m / (n * math.sqrt(n - 1) * d_minus_v_norm)) / math.log(lam)


def spectral_radius_Pv(g: Graph, v: int, tol: float = 1e-6, max_iter: int = 200_000) -> float:
    """Largest absolute eigenvalue of the transition matrix restricted to ``V \\ {v}``.

    ``P_v`` is similar to the symmetric non-negative ``S = Dv^{-1/2} Av Dv^{-1/2}``
    whose spectral radius is its Perron root.  Removing ``v`` may split the
    graph, so each piece is handled separately: power iteration runs on the
    aperiodic ``(I + S) / 2`` from a positive start and stops once the
    Collatz-Wielandt ratios bracket the root within ``2 tol``.
    """
    if g.n < 2:
        raise ValueError("need at least two nodes")
    keep = np.delete(np.arange(g.n), v)
    n = g.n
    inv_sqrt = 1.0 / np.sqrt(g.degrees.astype(float))
    rows = np.repeat(np.arange(n), g.degrees)
    A = sp.csr_matrix((inv_sqrt[rows] * inv_sqrt[g.indices], g.indices, g.indptr), shape=(n, n))
    S = A[keep][:, keep].tocsr()
    if S.nnz == 0:
        return 0.0
    ncomp, comp = connected_components(S, directed=False)
    best = 0.0
    for c in range(ncomp):
        members = np.flatnonzero(comp == c)
        if len(members) == 1:
            continue
        block = S[members][:, members]
        best = max(best, _perron_root(block, g.degrees[keep[members]], tol, max_iter))
    return best


def _perron_root(S, degrees, tol, max_iter):
    x = np.sqrt(degrees.astype(float))
    x /= np.linalg.norm(x)
    lo, hi = 0.0, 1.0
    rq = 0.0
    for _ in range(max_iter):
        y = 0.5 * (x + S @ x)
        ratios = y / x
        lo, hi = max(lo, 2.0 * ratios.min() - 1.0), min(hi, 2.0 * ratios.max() - 1.0)
        rq = 2.0 * (x @ y) - 1.0
        x = y / np.linalg.norm(y)
        if hi - lo <= 2.0 * tol:
            return float(min(max(rq, lo), hi))
        if x.min() <= 0.0:
            break
    raise SpectralRadiusError(
        f"power iteration did not bracket the spectral radius to {tol} (bracket [{lo:.6g}, {hi:.6g}])",
        float(min(max(rq, lo), hi)),
    )


@dataclass
class SamplePlan:
    l: int
    lam: float | None
    t_cap: float | None
    theta: float
    delta_estimate: int
    delta_exact: bool
    degenerate: bool
    seed: int

    def as_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out


def plan_samples(g: Graph, v: int, epsilon: float, seed: int = 0, *, lam: float | None = None,
                 compute_lambda: bool = False, samples: int | None = None) -> SamplePlan:
    """Sample count and solver accuracy for ``epsilon``.

    The spectral radius is only computed when the log argument is below one
    (otherwise it cannot affect ``l``) or when ``compute_lambda`` is set.
    """
    d_minus_v = np.delete(g.degrees, v).astype(float)
    d_norm = float(np.linalg.norm(d_minus_v))
    arg = log_argument(g.n, g.m, d_norm)
    if lam is None and (arg < 1.0 or compute_lambda):
        lam = spectral_radius_Pv(g, v)
    l, degenerate = sample_size(g.n, g.m, d_norm, lam, epsilon)
    if samples is not None:
        l = int(samples)
    t_cap = None
    if lam is not None and 0.0 < lam < 1.0:
        t_cap = math.log(arg) / math.log(lam)
    diam, exact = diameter_bound(g)
    theta = theta_for(epsilon, diam, g.d_max, g.m, g.n)
    return SamplePlan(l, lam, t_cap, theta, int(diam), exact, degenerate, int(seed))


# --------------------------------------------------------------------------
# Wilson sampler


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@nb.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def _stream_state(seed, sample):
    # independent splitmix64 stream per (seed, sample index)
    return _mix64(np.uint64(seed) * _GOLDEN + _mix64(np.uint64(sample) + _GOLDEN))


@nb.njit(cache=True, nogil=True)
def _wilson_kernel(indptr, indices, root, seed, first, count, seg_cap, max_steps):
    n = len(indptr) - 1
    counts = np.zeros(n, dtype=np.int64)
    in_tree = np.zeros(n, dtype=np.bool_)
    nxt = np.full(n, -1, dtype=np.int64)
    long_segments = 0
    segments = 0
    for s in range(first, first + count):
        state = _stream_state(seed, s)
        in_tree[:] = False
        in_tree[root] = True
        nxt[:] = -1
        steps = 0
        for j in range(n):
            if in_tree[j]:
                continue
            counts[j] += 1
            u = j
            seg = 0
            while True:
                state += _GOLDEN
                z = _mix64(state)
                deg = indptr[u + 1] - indptr[u]
                pick = np.int64(((z >> np.uint64(32)) * np.uint64(deg)) >> np.uint64(32))
                w = indices[indptr[u] + pick]
                nxt[u] = w
                u = w
                seg += 1
                if in_tree[u]:
                    break
                counts[u] += 1
            steps += seg
            segments += 1
            if seg_cap >= 0 and seg > seg_cap:
                long_segments += 1
            if steps > max_steps:
                return counts, nxt, long_segments, segments, False
            u = j
            while not in_tree[u]:
                in_tree[u] = True
                u = nxt[u]
    return counts, nxt, long_segments, segments, True


@dataclass
class VisitCounts:
    """Integer visit totals per node (pivot entry stays 0) and the number of samples."""

    totals: np.ndarray
    samples: int = 0
    pivot: int = -1
    long_segments: int = 0
    segments: int = 0

    def merge(self, other: "VisitCounts") -> "VisitCounts":
        if other.pivot != self.pivot:
            raise ValueError("cannot merge counts for different pivots")
        return VisitCounts(
            self.totals + other.totals,
            self.samples + other.samples,
            self.pivot,
            self.long_segments + other.long_segments,
            self.segments + other.segments,
        )

    def mean(self) -> np.ndarray:
        """Mean visits on ``V \\ {pivot}``, ascending node order."""
        return np.delete(self.totals, self.pivot) / self.samples


def sample_visits(g: Graph, v: int, samples: int, seed: int = 0, *, first: int = 0,
                  workers: int = 1, seg_cap: float | None = None) -> VisitCounts:
    """Run Wilson samples ``first .. first + samples - 1`` and total their visit counts.

    Each sample draws from its own stream keyed by ``(seed, sample index)`` so
    totals do not depend on ``workers``.
    """
    cap = -1 if seg_cap is None or not math.isfinite(seg_cap) else int(math.floor(seg_cap))

    def run(lo, cnt):
        counts, _, long_seg, segs, ok = _wilson_kernel(
            g.indptr, g.indices, v, seed, lo, cnt, cap, MAX_STEPS_PER_SAMPLE * max(cnt, 1)
        )
        if not ok:
            raise SamplingError("step cap exceeded while sampling spanning trees")
        return VisitCounts(counts, cnt, v, long_seg, segs)

    if workers <= 1 or samples < 2 * workers:
        return run(first, samples)
    bounds = np.linspace(first, first + samples, workers + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ab: run(int(ab[0]), int(ab[1] - ab[0])), zip(bounds[:-1], bounds[1:])))
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def wilson_sample(g: Graph, v: int, seed: int = 0, index: int = 0, return_tree: bool = False):
    """Visit counts on ``V \\ {v}`` for one spanning tree rooted at ``v``.

    With ``return_tree`` the parent array of the sampled tree (``-1`` at the
    root) is returned as well.
    """
    counts, nxt, _, _, ok = _wilson_kernel(g.indptr, g.indices, v, seed, index, 1, -1, MAX_STEPS_PER_SAMPLE)
    if not ok:
        raise SamplingError("step cap exceeded while sampling a spanning tree")
    visits = np.delete(counts, v)
    if return_tree:
        parent = nxt.copy()
        parent[v] = -1
        return visits, parent
    return visits


def fastwalk(g: Graph, v: int, epsilon: float, seed: int = 0, *, workers: int = 1,
             samples: int | None = None, plan: SamplePlan | None = None):
    """Centrality from averaged Wilson visit counts plus one Laplacian solve."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    start = time.perf_counter()
    plan = plan or plan_samples(g, v, epsilon, seed, samples=samples)
    visits = sample_visits(g, v, plan.l, plan.seed, workers=workers)
    result = app_rwc(g, v, plan.theta, DiagEstimates(visits.mean(), v, "fastwalk"))
    result.engine = "fastwalk"
    result.params.update({"epsilon": epsilon, "plan": plan.as_dict()})
    result.elapsed = time.perf_counter() - start
    return result
