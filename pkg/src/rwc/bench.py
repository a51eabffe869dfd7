"""Benchmark harness: run engines against a reference and tabulate time and accuracy."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import multiprocessing as mp
import os
import resource
import time
import traceback
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from .apprwc import DiagEstimates, app_rwc
from .exact import exact_diag_Lv_inv, exact_rwc
from .fastchol import FastCholParams, fastchol
from .fastwalk import fastwalk, theta_for_graph
from .graph import Graph, from_edges, label_to_index, largest_connected_component, load_edge_list, max_degree_node
from .linalg import DENSE_CAP
from .metrics import compare
from .result import CentralityResult

logger = logging.getLogger(__name__)

ENGINES = ("exact", "apprwc", "fastchol", "fastwalk")
BENCH_SCHEMA = "rwc.bench/1"
DEFAULT_TIMEOUT = 3600.0
REFERENCE_EPSILON = 1e-4
ROW_FIELDS = (
    "engine", "epsilon", "seed", "delta", "eps_p", "window", "zeta",
    "status", "seconds", "mean_relative_error", "kendall_tau", "peak_mem_mb_est", "error",
)


@dataclass
class RunConfig:
    input: str | None = None
    engine: str = "fastwalk"
    epsilon: float = 0.1
    fastchol: FastCholParams = field(default_factory=FastCholParams)
    pivot: int | None = None  # original label
    seed: int = 0
    output: str | None = None
    fmt: str = "csv"
    workers: int = 1
    samples: int | None = None
    theta: float | None = None
    dense_cap: int = DENSE_CAP

    def validate(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINES)}")
        if self.engine != "exact" and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {self.fmt!r}")
        self.fastchol.validate()


def prepare_graph(source) -> tuple[Graph, Graph]:
    """Loaded graph and its largest connected component (relabelled densely)."""
    full = load_edge_list(source) if not isinstance(source, Graph) else source
    lcc, _ = largest_connected_component(full)
    if lcc.n < 2:
        raise ValueError("largest connected component has fewer than two nodes")
    return full, lcc


def pick_pivot(g: Graph, label: int | None) -> int:
    """Dense index of the pivot: the given original label, else the maximum-degree node."""
    return max_degree_node(g) if label is None else label_to_index(g, label)


def run_engine(g: Graph, cfg: RunConfig) -> CentralityResult:
    cfg.validate()
    start = time.perf_counter()
    if cfg.engine == "exact":
        result = exact_rwc(g, cfg.dense_cap)
    else:
        v = pick_pivot(g, cfg.pivot)
        if cfg.engine == "fastwalk":
            result = fastwalk(g, v, cfg.epsilon, cfg.seed, workers=cfg.workers, samples=cfg.samples)
        elif cfg.engine == "fastchol":
            params = replace(cfg.fastchol, theta=cfg.theta if cfg.theta is not None else cfg.fastchol.theta)
            result = fastchol(g, v, params, epsilon=cfg.epsilon)
        else:
            theta = cfg.theta if cfg.theta is not None else theta_for_graph(g, cfg.epsilon)
            diag = DiagEstimates(exact_diag_Lv_inv(g, v, cfg.dense_cap), v, "exact")
            result = app_rwc(g, v, theta, diag)
            result.params["epsilon"] = cfg.epsilon
    result.elapsed = time.perf_counter() - start
    return result


def warm_up():
    """Compile the numerical kernels once so timed rows exclude JIT work."""
    g = from_edges(np.array([[0, 1], [1, 2], [2, 0], [2, 3]]))
    for engine in ENGINES:
        run_engine(g, RunConfig(engine=engine, samples=2))


# --------------------------------------------------------------------------
# rows


@dataclass
class BenchRow:
    engine: str
    epsilon: float | None
    seed: int
    delta: float | None = None
    eps_p: float | None = None
    window: float | None = None
    zeta: int | None = None
    status: str = "ok"
    seconds: float = math.nan
    mean_relative_error: float = math.nan
    kendall_tau: float = math.nan
    peak_mem_mb_est: float = math.nan
    error: str = ""


@dataclass
class BenchReport:
    rows: list[BenchRow]
    meta: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in self.rows:
            writer.writerow(["" if _missing(getattr(row, f)) else _fmt(getattr(row, f)) for f in ROW_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        data = {
            "schema": BENCH_SCHEMA,
            "meta": self.meta,
            "rows": [{k: (None if _missing(v) else v) for k, v in asdict(r).items()} for r in self.rows],
        }
        return json.dumps(data, indent=2, sort_keys=True)


def _missing(x):
    return x is None or (isinstance(x, float) and math.isnan(x))


def _fmt(x):
    return repr(x) if isinstance(x, float) else str(x)


def _rss_mb() -> float:
    with open("/proc/self/statm") as fh:
        pages = int(fh.read().split()[1])
    return pages * os.sysconf("SC_PAGE_SIZE") / 2**20


def _child(conn, g, cfg):
    try:
        base = _rss_mb()
        result = run_engine(g, cfg)
        peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
        conn.send(("ok", result, max(0.0, peak - base)))
    except BaseException as exc:  # reported to the parent as a failed row
        conn.send(("failed", f"{type(exc).__name__}: {exc}", traceback.format_exc()))
    finally:
        conn.close()


def timed_run(g: Graph, cfg: RunConfig, timeout: float | None = DEFAULT_TIMEOUT):
    """Run one engine in a forked worker.  Returns ``(status, result_or_message, mem_mb)``."""
    if timeout is None or "fork" not in mp.get_all_start_methods():
        try:
            return "ok", run_engine(g, cfg), math.nan
        except Exception as exc:
            return "failed", f"{type(exc).__name__}: {exc}", math.nan
    ctx = mp.get_context("fork")
    parent, child = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_child, args=(child, g, cfg))
    proc.start()
    child.close()
    if not parent.poll(timeout):
        proc.kill()
        proc.join()
        return "timeout", f"no result within {timeout:g} s", math.nan
    try:
        status, payload, extra = parent.recv()
    except EOFError:
        proc.join()
        return "failed", f"worker exited with code {proc.exitcode}", math.nan
    proc.join()
    if status == "ok":
        return status, payload, extra
    logger.debug("row failed:\n%s", extra)
    return status, payload, math.nan


def reference_config(g: Graph, base: RunConfig) -> RunConfig:
    """Exact oracle when the graph fits the dense cap, else FastWalk at a tight epsilon."""
    if g.n <= base.dense_cap:
        return replace(base, engine="exact")
    return replace(base, engine="fastwalk", epsilon=REFERENCE_EPSILON, samples=None)


def bench(g: Graph, configs: list[RunConfig], *, reference: RunConfig | None = None,
          timeout: float | None = DEFAULT_TIMEOUT, meta: dict | None = None) -> BenchReport:
    """Run each config on ``g`` and score it against the reference."""
    meta = dict(meta or {})
    meta.update({"n": g.n, "m": g.m})
    if not configs:
        return BenchReport([], meta)
    warm_up()
    ref_cfg = reference or reference_config(g, configs[0])
    status, ref, _ = timed_run(g, ref_cfg, timeout)
    meta["reference"] = {"engine": ref_cfg.engine, "epsilon": ref_cfg.epsilon, "status": status}
    if status != "ok":
        meta["reference"]["error"] = ref
        ref = None
    rows = []
    for cfg in configs:
        fc = cfg.fastchol
        row = BenchRow(cfg.engine, None if cfg.engine == "exact" else cfg.epsilon, cfg.seed)
        if cfg.engine == "fastchol":
            resolved = fc.resolved(g.n, cfg.epsilon)
            row.delta, row.eps_p, row.window, row.zeta = resolved.delta, resolved.eps_p, resolved.window, resolved.zeta
        status, out, mem = timed_run(g, cfg, timeout)
        row.status = status
        if status == "ok":
            row.seconds = out.elapsed
            row.peak_mem_mb_est = mem
            if ref is not None:
                cmp = compare(ref, out)
                row.mean_relative_error, row.kendall_tau = cmp.mean_relative_error, cmp.kendall_tau
        else:
            row.error = out
        rows.append(row)
    return BenchReport(rows, meta)


# --------------------------------------------------------------------------
# sweep grids

GRID_KEYS = {"engine", "epsilon", "seed", "delta", "eps_p", "window", "zeta"}


def expand_grid(grid: dict, base: RunConfig) -> list[RunConfig]:
    """Cartesian product of the listed values; an empty grid (or empty list) yields no configs."""
    unknown = set(grid) - GRID_KEYS
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    if not grid:
        return []
    keys = sorted(grid)
    values = [v if isinstance(v, list) else [v] for v in (grid[k] for k in keys)]
    configs = []
    for combo in itertools.product(*values):
        point = dict(zip(keys, combo))
        fc = replace(base.fastchol, **{k: point[k] for k in ("delta", "eps_p", "window", "zeta") if k in point})
        cfg = replace(base, fastchol=fc, **{k: point[k] for k in ("engine", "epsilon", "seed") if k in point})
        cfg.validate()
        configs.append(cfg)
    return configs
