"""Undirected simple graphs in CSR form, edge-list ingestion and basic queries."""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from typing import IO, Iterable

import numba as nb
import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for unreadable edge-list input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class LoadStats:
    lines: int = 0
    comments: int = 0
    self_loops: int = 0
    duplicates: int = 0


@dataclass(eq=False)
class Graph:
    """Immutable undirected graph.

    ``indices[indptr[u]:indptr[u + 1]]`` is the sorted neighbour list of ``u``;
    every edge is stored in both rows.  ``labels[u]`` is the original label of
    dense node ``u``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray
    stats: LoadStats = field(default_factory=LoadStats)

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        self.degrees = np.diff(self.indptr)
        for arr in (self.indptr, self.indices, self.labels, self.degrees):
            arr.setflags(write=False)
        self._bipartite = None

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array with ``u < v`` in each row."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    @property
    def is_bipartite(self) -> bool:
        if self._bipartite is None:
            self._bipartite = bool(_two_colourable(self.indptr, self.indices))
        return self._bipartite

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def from_edges(edges, labels: np.ndarray | None = None, stats: LoadStats | None = None) -> Graph:
    """Build a simple undirected graph from an ``(k, 2)`` array of endpoints.

    Endpoints are arbitrary non-negative integers unless ``labels`` is given,
    in which case they must already be dense indices into ``labels``.
    Self-loops and repeated edges are dropped and counted in ``stats``.
    """
    stats = stats if stats is not None else LoadStats()
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if labels is None:
        labels, inverse = np.unique(edges.ravel(), return_inverse=True)
        edges = inverse.reshape(-1, 2)
    n = len(labels)

    loops = edges[:, 0] == edges[:, 1]
    stats.self_loops += int(loops.sum())
    edges = np.sort(edges[~loops], axis=1)
    unique = np.unique(edges, axis=0) if len(edges) else edges
    stats.duplicates += len(edges) - len(unique)

    src = np.concatenate([unique[:, 0], unique[:, 1]])
    dst = np.concatenate([unique[:, 1], unique[:, 0]])
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(indptr, dst[order], labels, stats)


def load_edge_list(source: str | os.PathLike | bytes | IO) -> Graph:
    """Parse a whitespace-separated edge list (SNAP dialect).

    ``source`` may be a path, raw bytes, or an open text/binary stream.
    Lines starting with ``#`` are comments; blank lines are ignored.
    """
    if isinstance(source, (bytes, bytearray)):
        stream = io.StringIO(source.decode())
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return load_edge_list(fh)
    else:
        stream = source

    stats = LoadStats()
    pairs: list[tuple[int, int]] = []
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode()
        stats.lines += 1
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            stats.comments += 1
            continue
        tokens = text.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 2 fields, got {len(tokens)}: {text!r}", lineno)
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphFormatError(f"non-integer node label in {text!r}", lineno) from None
        if a < 0 or b < 0:
            raise GraphFormatError(f"negative node label in {text!r}", lineno)
        pairs.append((a, b))

    if not pairs:
        raise GraphFormatError("no edges in input")
    g = from_edges(np.array(pairs, dtype=np.int64), stats=stats)
    if stats.self_loops or stats.duplicates:
        logger.info("dropped %d self-loops and %d duplicate edges", stats.self_loops, stats.duplicates)
    return g


def write_label_map(g: Graph, path_or_stream) -> None:
    """Write the ``original,dense`` relabelling as two-column CSV."""
    if isinstance(path_or_stream, (str, os.PathLike)):
        with open(path_or_stream, "w", newline="") as fh:
            return write_label_map(g, fh)
    path_or_stream.write("original,dense\n")
    for dense, original in enumerate(g.labels):
        path_or_stream.write(f"{original},{dense}\n")


def connected_components(g: Graph) -> np.ndarray:
    """Component id per node; ids are assigned in order of smallest member index."""
    return _components(g.indptr, g.indices)


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> tuple[Graph, np.ndarray]:
    """Subgraph on ``nodes`` (kept in ascending order) and the new-to-old index map."""
    keep = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = g.edges()
    e = remap[e]
    e = e[(e[:, 0] >= 0) & (e[:, 1] >= 0)]
    sub = from_edges(e, labels=g.labels[keep], stats=LoadStats(**vars(g.stats)))
    return sub, keep


def largest_connected_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on the largest component, densely relabelled.

    Among equally large components the one holding the smallest original label
    wins.  Returns ``(subgraph, index_map)`` with ``index_map[new] = old``.
    """
    comp = connected_components(g)
    ncomp = int(comp.max()) + 1 if g.n else 0
    if ncomp <= 1:
        return g, np.arange(g.n, dtype=np.int64)
    sizes = np.bincount(comp, minlength=ncomp)
    min_label = np.full(ncomp, np.iinfo(np.int64).max)
    np.minimum.at(min_label, comp, g.labels)
    best = np.lexsort((min_label, -sizes))[0]
    return induced_subgraph(g, np.flatnonzero(comp == best))


def stationary_distribution(g: Graph) -> np.ndarray:
    return g.degrees / (2.0 * g.m)


def max_degree_node(g: Graph) -> int:
    # argmax returns the first maximum, i.e. the smallest index on ties
    return int(np.argmax(g.degrees))


def random_neighbor(g: Graph, u: int, rng: np.random.Generator) -> int:
    deg = g.degrees[u]
    if deg == 0:
        raise ValueError(f"node {u} is isolated")
    return int(g.indices[g.indptr[u] + rng.integers(deg)])


def label_to_index(g: Graph, label: int) -> int:
    hit = np.flatnonzero(g.labels == label)
    if len(hit) == 0:
        raise KeyError(f"label {label} not in graph")
    return int(hit[0])


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable nodes get -1."""
    return _bfs(g.indptr, g.indices, source)


def diameter(g: Graph, max_bfs: int | None = None) -> tuple[int, bool]:
    """Diameter of a connected graph by eccentricity bounding.

    Exact unless ``max_bfs`` sweeps run out first, in which case the current
    upper bound is reported.  Returns ``(value, exact)``.
    """
    n = g.n
    if n <= 1:
        return 0, True
    budget = max_bfs
    lower = np.zeros(n, dtype=np.int64)
    upper = np.full(n, n, dtype=np.int64)
    candidates = np.ones(n, dtype=bool)
    current = max_degree_node(g)
    high = True
    sweeps = 0
    maxlower = 0
    while candidates.any():
        if budget is not None and sweeps >= budget:
            return int(max(maxlower, upper[candidates].max())), False
        dist = bfs_distances(g, current)
        if (dist < 0).any():
            raise ValueError("graph is not connected")
        sweeps += 1
        ecc = int(dist.max())
        c = candidates
        lower[c] = np.maximum(lower[c], np.maximum(dist[c], ecc - dist[c]))
        upper[c] = np.minimum(upper[c], ecc + dist[c])
        maxlower = max(maxlower, int(lower[c].max()))
        # a node whose eccentricity cannot exceed the best lower bound is done
        ruled_out = c & ((upper <= maxlower) | (lower == upper))
        candidates &= ~ruled_out
        if not candidates.any():
            break
        idx = np.flatnonzero(candidates)
        current = int(idx[np.argmax(upper[idx])] if high else idx[np.argmin(lower[idx])])
        high = not high
    return maxlower, True


@nb.njit(cache=True)
def _bfs(indptr, indices, source):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        for p in range(indptr[u], indptr[u + 1]):
            w = indices[p]
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue[tail] = w
                tail += 1
    return dist


@nb.njit(cache=True)
def _components(indptr, indices):
    n = len(indptr) - 1
    comp = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    cid = 0
    for s in range(n):
        if comp[s] >= 0:
            continue
        comp[s] = cid
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if comp[w] < 0:
                    comp[w] = cid
                    queue[tail] = w
                    tail += 1
        cid += 1
    return comp


@nb.njit(cache=True)
def _two_colourable(indptr, indices):
    n = len(indptr) - 1
    colour = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        if colour[s] >= 0:
            continue
        colour[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for p in range(indptr[u], indptr[u + 1]):
                w = indices[p]
                if colour[w] < 0:
                    colour[w] = 1 - colour[u]
                    queue[tail] = w
                    tail += 1
                elif colour[w] == colour[u]:
                    return False
    return True
