"""``rwc compute|compare|sweep``.

compute
    Scores for every node of the input's largest connected component.  CSV
    output has columns ``node,score`` (original labels); JSON follows the
    ``rwc.result/1`` schema.
compare / sweep
    One row per run with columns ``engine, epsilon, seed, delta, eps_p,
    window, zeta, status, seconds, mean_relative_error, kendall_tau,
    peak_mem_mb_est, error``.  JSON follows the ``rwc.bench/1`` schema.

Failures print a single JSON object ``{"error": ..., "message": ...}`` on
stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import (
    DEFAULT_TIMEOUT,
    ENGINES,
    BenchReport,
    RunConfig,
    bench,
    expand_grid,
    prepare_graph,
    reference_config,
    run_engine,
)
from .fastchol import ORDERINGS, FastCholParams
from .graph import GraphFormatError, write_label_map
from .linalg import DENSE_CAP

EXIT_INPUT = 2
EXIT_RUNTIME = 1


class CliError(Exception):
    def __init__(self, kind, message, code=EXIT_RUNTIME, **extra):
        super().__init__(message)
        self.kind, self.code, self.extra = kind, code, extra


def _add_common(p):
    p.add_argument("--input", required=True, help="edge list: one 'u v' pair per line, '#' comments")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--pivot", type=int, default=None, help="pivot node (original label); default max degree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=1e-4, help="ichol drop tolerance")
    p.add_argument("--eps-p", type=float, default=None, help="sparsification mass threshold (default epsilon)")
    p.add_argument("--window", type=float, default=None, help="base window size (default ceil(log2 n))")
    p.add_argument("--zeta", type=int, default=None, help="sparsity trigger (default ceil(log2 n))")
    p.add_argument("--ordering", choices=ORDERINGS, default="degree")
    p.add_argument("--theta", type=float, default=None, help="override the solver accuracy")
    p.add_argument("--samples", type=int, default=None, help="override the spanning-tree count")
    p.add_argument("--parallel-samples", type=int, default=1, metavar="N", help="FastWalk worker threads")
    p.add_argument("--dense-cap", type=int, default=DENSE_CAP)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="write here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwc", description="Random walk centrality (mean hitting time to a node).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="score every node with one engine")
    _add_common(p)
    p.add_argument("--engine", choices=ENGINES, default="fastwalk")
    p.add_argument("--label-map", default=None, help="also write the original,dense label map CSV")

    p = sub.add_parser("compare", help="time engines and score them against a reference")
    _add_common(p)
    p.add_argument("--engine", choices=ENGINES, action="append", help="repeatable; default fastchol and fastwalk")
    p.add_argument("--epsilons", type=float, nargs="+", default=None, help="one row per value (default --epsilon)")
    p.add_argument("--seeds", type=int, nargs="+", default=None, help="one row per seed (default --seed)")
    p.add_argument("--reference", choices=("auto",) + ENGINES, default="auto")
    p.add_argument("--reference-epsilon", type=float, default=None)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per row (0 disables)")

    p = sub.add_parser("sweep", help="one row per point of a parameter grid")
    _add_common(p)
    p.add_argument("--engine", choices=ENGINES, default="fastchol")
    p.add_argument("--grid", required=True,
                   help="JSON object (or path to one) mapping engine/epsilon/seed/delta/eps_p/window/zeta to lists")
    p.add_argument("--reference", choices=("auto",) + ENGINES, default="auto")
    p.add_argument("--reference-epsilon", type=float, default=None)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    return parser


def config_from_args(args, engine=None) -> RunConfig:
    cfg = RunConfig(
        input=args.input,
        engine=engine or args.engine,
        epsilon=args.epsilon,
        fastchol=FastCholParams(delta=args.delta, eps_p=args.eps_p, window=args.window,
                                zeta=args.zeta, ordering=args.ordering),
        pivot=args.pivot,
        seed=args.seed,
        output=args.output,
        fmt=args.format,
        workers=args.parallel_samples,
        samples=args.samples,
        theta=args.theta,
        dense_cap=args.dense_cap,
    )
    cfg.validate()
    return cfg


def _load(path):
    try:
        return prepare_graph(path)
    except FileNotFoundError as exc:
        raise CliError("InputNotFound", str(exc), EXIT_INPUT) from exc
    except GraphFormatError as exc:
        raise CliError("GraphFormatError", str(exc), EXIT_INPUT, line=exc.line) from exc


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_compute(cfg: RunConfig, label_map: str | None = None):
    _, g = _load(cfg.input)
    try:
        result = run_engine(g, cfg)
    except KeyError as exc:
        raise CliError("UnknownPivot", str(exc.args[0]), EXIT_INPUT) from exc
    if label_map:
        write_label_map(g, label_map)
    _emit(result.to_csv() if cfg.fmt == "csv" else result.to_json() + "\n", cfg.output)
    return result, 0


def _reference(args, g, base):
    if args.reference == "auto":
        ref = reference_config(g, base)
    else:
        ref = replace(base, engine=args.reference)
    if args.reference_epsilon is not None:
        ref = replace(ref, epsilon=args.reference_epsilon)
    return ref


def _write_report(report: BenchReport, base: RunConfig):
    _emit(report.to_csv() if base.fmt == "csv" else report.to_json() + "\n", base.output)


def cmd_compare(args) -> tuple[BenchReport, int]:
    _, g = _load(args.input)
    base = config_from_args(args, engine="fastwalk")
    engines = args.engine or ["fastchol", "fastwalk"]
    epsilons = args.epsilons or [args.epsilon]
    seeds = args.seeds or [args.seed]
    configs = [replace(base, engine=e, epsilon=eps, seed=s) for e in engines for eps in epsilons for s in seeds]
    report = bench(g, configs, reference=_reference(args, g, base), timeout=args.timeout or None,
                   meta={"command": "compare", "input": str(args.input)})
    _write_report(report, base)
    return report, 0


def _parse_grid(text):
    path = Path(text)
    raw = path.read_text() if not text.lstrip().startswith("{") and path.exists() else text
    try:
        grid = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError("GridError", f"grid is not valid JSON: {exc}", EXIT_INPUT) from exc
    if not isinstance(grid, dict):
        raise CliError("GridError", "grid must be a JSON object", EXIT_INPUT)
    return grid


def cmd_sweep(args) -> tuple[BenchReport, int]:
    grid = _parse_grid(args.grid)
    base = config_from_args(args)
    try:
        configs = expand_grid(grid, base)
    except (TypeError, ValueError) as exc:
        raise CliError("GridError", str(exc), EXIT_INPUT) from exc
    if not configs:
        report = BenchReport([], {"command": "sweep", "grid": grid})
        _write_report(report, base)
        return report, 0
    _, g = _load(args.input)
    report = bench(g, configs, reference=_reference(args, g, base), timeout=args.timeout or None,
                   meta={"command": "sweep", "input": str(args.input), "grid": grid})
    _write_report(report, base)
    return report, 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compute":
            _, code = cmd_compute(config_from_args(args), args.label_map)
        elif args.command == "compare":
            _, code = cmd_compare(args)
        else:
            _, code = cmd_sweep(args)
        return code
    except CliError as exc:
        _fail(exc.kind, str(exc), **exc.extra)
        return exc.code
    except ValueError as exc:
        _fail(type(exc).__name__, str(exc))
        return EXIT_INPUT
    except Exception as exc:
        _fail(type(exc).__name__, str(exc))
        return EXIT_RUNTIME


def _fail(kind, message, **extra):
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
