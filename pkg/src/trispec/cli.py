"""Command line front end: ``trispec analytic|solve|metrics|stats|converge|report``.

Stages exchange CSV files (and the binary eigenpair archive), so every table
or figure is one pipeline invocation.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

from . import convergence, fem, metrics, stats
from .errors import (
    FormatError,
    InvalidParameterError,
    MeshMismatchError,
    SolverError,
    TrispecError,
)

log = logging.getLogger("trispec")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4
EXIT_IO = 5
EXIT_OTHER = 1


@dataclass
class RunConfig:
    a: float = 1.0
    ndiv: int = 64
    order: int = 2
    count: int = 100
    metrics: list = field(default_factory=lambda: ["y_volume", "prop_left"])
    split: float | None = None
    eps: list = field(default_factory=lambda: [0.01])
    out: Path | None = None

    def validate(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise InvalidParameterError(f"--a must be positive, got {self.a}")
        if self.ndiv < 3:
            raise InvalidParameterError(f"--ndiv must be at least 3, got {self.ndiv}")
        if self.order not in (1, 2):
            raise InvalidParameterError(f"--order must be 1 or 2, got {self.order}")
        if self.count < 1:
            raise InvalidParameterError(f"--count must be at least 1, got {self.count}")
        if any(not e > 0 for e in self.eps):
            raise InvalidParameterError(f"--eps values must be positive, got {self.eps}")
        if self.split is not None and not (0 < self.split < self.a):
            raise InvalidParameterError(f"--split must lie in (0, a), got {self.split}")
        return self


def _eps_list(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trispec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *names):
        if "a" in names:
            p.add_argument("--a", type=float, default=1.0, help="horizontal leg of the triangle")
        if "ndiv" in names:
            p.add_argument("--ndiv", type=int, default=64, help="mesh divisions per leg")
        if "order" in names:
            p.add_argument("--order", type=int, default=2, choices=(1, 2))
        if "count" in names:
            p.add_argument("--count", type=int, default=100, help="number of eigenfunctions")
        if "split" in names:
            p.add_argument("--split", type=float, default=None,
                           help="split point on the bottom side (default a/2)")
        if "eps" in names:
            p.add_argument("--eps", type=_eps_list, default=[0.01], help="comma separated tolerances")
        if "in" in names:
            p.add_argument("--in", dest="inp", type=Path, required=True)
        p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("analytic", help="metrics table of closed-form isosceles modes")
    common(p, "count", "split")
    p = sub.add_parser("solve", help="FEM eigen-solve, writes an eigenpair archive")
    common(p, "a", "ndiv", "order", "count")
    p = sub.add_parser("metrics", help="metrics table from an eigenpair archive")
    common(p, "in", "split")
    p.add_argument("--flux", choices=("recovered", "trace"), default="recovered")
    p = sub.add_parser("stats", help="running exceedance percentages and summary means")
    common(p, "in", "eps", "a")
    p.add_argument("--metric", default="y_volume")
    p.add_argument("--center", type=float, default=0.5)
    p = sub.add_parser("converge", help="nested-mesh convergence table")
    common(p, "a", "ndiv", "order", "count")
    p.add_argument("--levels", type=int, default=3)
    p = sub.add_parser("report", help="summary/exceedance CSVs plus SVG figures")
    common(p, "in", "eps", "a")
    return parser


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + "_summary.csv")


def cmd_analytic(args):
    RunConfig(count=args.count, split=args.split).validate()
    rows = metrics.analytic_metrics(args.count, args.split)
    metrics.write_metrics_csv(rows, args.out)
    log.info("wrote %d rows to %s", len(rows), args.out)


def cmd_solve(args):
    cfg = RunConfig(a=args.a, ndiv=args.ndiv, order=args.order, count=args.count).validate()
    run = fem.solve_run(cfg.a, cfg.ndiv, cfg.order, cfg.count)
    fem.write_archive(run, args.out)
    log.info("lambda_1 = %.10g, lambda_%d = %.10g", run.pairs[0].lam, cfg.count, run.pairs[-1].lam)


def cmd_metrics(args):
    run = fem.read_archive(args.inp)
    if args.split is not None:
        RunConfig(a=run.triangle.a, split=args.split).validate()
    from .handles import FemEigenfunction

    clusters = run.clusters()
    handles = [FemEigenfunction(p, run.space, flux=args.flux) for p in run.pairs]
    rows = metrics.metrics_for_handles(handles, clusters, args.split)
    metrics.write_metrics_csv(rows, args.out)


def _stats_outputs(rows, args, metric, center):
    cfg = RunConfig(a=args.a, eps=args.eps).validate()
    values = metrics.column(rows, metric)
    series = stats.stats_series(values, center, cfg.eps)
    summary = stats.summarize(rows, ["x_volume", "y_volume", "prop_left", "weighted_x_F3"])
    return cfg, series, summary


def cmd_stats(args):
    rows = metrics.read_metrics_csv(args.inp)
    if args.metric not in metrics.METRICS_HEADER[1:10]:
        raise InvalidParameterError(f"unknown metric {args.metric!r}")
    cfg, series, summary = _stats_outputs(rows, args, args.metric, args.center)
    stats.write_exceedance_csv(args.out, series)
    stats.write_summary_csv(_summary_path(args.out), cfg.a, len(rows), summary)
    for eps, pct in series.exceedance.items():
        print(f"{args.metric}: eps={eps:g} final exceedance {pct[-1]:.2f}%")
    for name, mean in summary.items():
        print(f"{name}: mean {mean:.6f}")


def cmd_converge(args):
    cfg = RunConfig(a=args.a, ndiv=args.ndiv, order=args.order, count=args.count).validate()
    _, reports = convergence.convergence_study(cfg.a, cfg.ndiv, args.levels, cfg.order, cfg.count)
    convergence.write_convergence_csv(args.out, reports)
    for r in reports:
        print(f"{r.ndiv_coarse:>4} -> {r.ndiv_fine:<4} max_eigendiff {r.max_eigendiff:.6g}"
              f"  l2_running_avg {r.l2_running_avg:.6g}")


def cmd_report(args):
    from .plotting import emit_plot

    rows = metrics.read_metrics_csv(args.inp)
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise TrispecError(f"cannot create {out}: {exc}") from exc
    cfg, series, summary = _stats_outputs(rows, args, "y_volume", 0.5)
    stats.write_summary_csv(out / "summary.csv", cfg.a, len(rows), summary)
    stats.write_exceedance_csv(out / "exceedance.csv", series)
    pl = metrics.column(rows, "prop_left")
    bands = [0.5] + [0.5 * (1 + s * 2 / (j * math.pi)) for j, s in ((1, 1), (3, -1), (5, 1))]
    emit_plot(pl, out / "prop_left.svg", ylabel="proportion bottom left", hlines=bands)
    emit_plot(metrics.column(rows, "y_volume"), out / "y_volume.svg", ylabel="y volume integral",
              hlines=[0.5])
    emit_plot(metrics.column(rows, "weighted_x_F3"), out / "weighted_x_F3.svg",
              ylabel="weighted hypotenuse integral")
    emit_plot([series.running_avg, stats.running_average(pl)], out / "running_average.svg",
              kind="line", ylabel="running average", hlines=[0.5], labels=["y volume", "prop left"])
    eps = sorted(series.exceedance)
    emit_plot([series.exceedance[e] for e in eps], out / "exceedance.svg", kind="line",
              ylabel="% with |y volume - 1/2| > eps", labels=[f"eps={e:g}" for e in eps])
    print(f"wrote report for {len(rows)} eigenfunctions to {out}")


COMMANDS = {
    "analytic": cmd_analytic,
    "solve": cmd_solve,
    "metrics": cmd_metrics,
    "stats": cmd_stats,
    "converge": cmd_converge,
    "report": cmd_report,
}


def _thread_limit():
    raw = os.environ.get("TRISPEC_THREADS")
    if raw is None:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InvalidParameterError(f"TRISPEC_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            COMMANDS[args.command](args)
    except InvalidParameterError as exc:
        print(f"trispec: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"trispec: solver failure ({exc.achieved} eigenpairs converged): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FormatError, MeshMismatchError, OSError) as exc:
        print(f"trispec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TrispecError as exc:
        print(f"trispec: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
