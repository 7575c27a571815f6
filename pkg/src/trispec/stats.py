"""Running statistics over eigenvalue-ordered metric sequences."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidParameterError
from .metrics import column

__all__ = [
    "StatsSeries",
    "running_average",
    "running_percentage",
    "stats_series",
    "summarize",
    "write_summary_csv",
    "read_summary_csv",
    "write_exceedance_csv",
    "read_exceedance_csv",
]


def running_average(values) -> np.ndarray:
    """Prefix means ``a_j = (1/j) sum_{k<=j} v_k``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidParameterError("running_average needs a nonempty sequence")
    return np.cumsum(v) / np.arange(1, v.size + 1)


def running_percentage(values, center: float, eps: float) -> np.ndarray:
    """Prefix percentage of entries with ``|v - center| > eps``."""
    if not eps > 0:
        raise InvalidParameterError(f"eps must be positive, got {eps!r}")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.zeros(0)
    hits = np.abs(v - center) > eps
    return 100.0 * np.cumsum(hits) / np.arange(1, v.size + 1)


@dataclass
class StatsSeries:
    values: np.ndarray
    running_avg: np.ndarray
    exceedance: dict = field(default_factory=dict)


def stats_series(values, center: float = 0.5, eps_list=()) -> StatsSeries:
    v = np.asarray(values, dtype=float)
    return StatsSeries(
        values=v,
        running_avg=running_average(v),
        exceedance={float(e): running_percentage(v, center, e) for e in eps_list},
    )


def summarize(rows, metrics, num: int | None = None) -> dict:
    """Mean of each metric over the first ``num`` rows (all rows by default)."""
    rows = list(rows)[:num] if num is not None else list(rows)
    if not metrics:
        return {}
    if not rows:
        raise InvalidParameterError("cannot summarize an empty metrics table")
    return {m: float(running_average(column(rows, m))[-1]) for m in metrics}


def write_summary_csv(path, triangle_a: float, num_eigs: int, summary: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["triangle_a", "num_eigs", "metric", "mean"])
        for metric, mean in summary.items():
            w.writerow([repr(float(triangle_a)), num_eigs, metric, repr(float(mean))])


def read_summary_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ["triangle_a", "num_eigs", "metric", "mean"]:
            raise FormatError(f"{path}: unexpected summary header")
        return [(float(a), int(n), m, float(v)) for a, n, m, v in reader]


def write_exceedance_csv(path, series: StatsSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eps", "percentage"])
        for eps, pct in series.exceedance.items():
            for k, p in enumerate(pct, start=1):
                w.writerow([k, repr(eps), repr(float(p))])


def read_exceedance_csv(path) -> dict:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ["index", "eps", "percentage"]:
            raise FormatError(f"{path}: unexpected exceedance header")
        for k, eps, p in reader:
            out.setdefault(float(eps), []).append(float(p))
    return {e: np.array(v) for e, v in out.items()}
