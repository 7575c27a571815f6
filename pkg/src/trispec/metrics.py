"""Boundary and interior energy measurements of normalized eigenfunctions.

Every function takes an eigenfunction handle (see :mod:`trispec.handles`) so
the same code measures closed-form and finite element eigenfunctions.
Quantities are semiclassical: derivatives carry a factor ``h = lam**-0.5``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .domain import Region, SideTag, StripSpec, make_triangle
from .errors import FormatError, InvalidParameterError

__all__ = [
    "EigenMetrics",
    "CutoffSpec",
    "volume_energy",
    "side_neumann",
    "partial_neumann",
    "prop_left",
    "weighted_boundary",
    "spatial_mass",
    "rellich_cutoff_check",
    "compute_metrics",
    "metrics_for_run",
    "write_metrics_csv",
    "read_metrics_csv",
    "METRICS_HEADER",
]


def volume_energy(u, direction: str) -> float:
    """``int |h d_direction u|^2 dV`` with direction ``"x"`` or ``"y"``."""
    if direction not in ("x", "y"):
        raise InvalidParameterError(f"direction must be 'x' or 'y', got {direction!r}")
    return u.h ** 2 * u.gradient_energy(direction)


def side_neumann(u, side: SideTag) -> float:
    """``int_side |h d_nu u|^2 dS``."""
    return u.h ** 2 * u.integrate_boundary(lambda s, dnu: dnu * dnu, SideTag(side))


def partial_neumann(u, side: SideTag, lo: float, hi: float) -> float:
    """Neumann mass on the part of ``side`` whose coordinate lies in ``[lo, hi]``.

    F2 and F3 are parametrized by x, F1 by y (distance from the right-angle
    corner in both leg cases).
    """
    side = SideTag(side)
    s0, s1 = u.triangle.side_extent(side)
    if lo > hi:
        raise InvalidParameterError(f"inverted bounds [{lo}, {hi}]")
    if lo < s0 - 1e-14 or hi > s1 + 1e-14:
        raise InvalidParameterError(f"bounds [{lo}, {hi}] leave the side extent [{s0}, {s1}]")
    lo, hi = max(lo, s0), min(hi, s1)
    if lo == hi:
        return 0.0
    return u.h ** 2 * u.integrate_boundary(lambda s, dnu: dnu * dnu, side, lo, hi)


def prop_left(u, split: float | None = None, side: SideTag = SideTag.F2) -> float:
    """Fraction of the Neumann mass of ``side`` on ``[0, split]`` (default half the side)."""
    s0, s1 = u.triangle.side_extent(side)
    split = 0.5 * (s0 + s1) if split is None else split
    total = partial_neumann(u, side, s0, s1)
    return partial_neumann(u, side, s0, split) / total


def _weight_fn(weight, tri):
    if callable(weight):
        return weight, tuple(getattr(weight, "breakpoints", ()))
    if weight == "x":
        return (lambda x: x), ()
    if weight == "1-x/a":
        return (lambda x: 1.0 - x / tri.a), ()
    if weight in (1, 1.0, "1"):
        return (lambda x: np.ones_like(x)), ()
    raise InvalidParameterError(f"unknown weight {weight!r}")


def weighted_boundary(u, weight="x", side: SideTag = SideTag.F3) -> float:
    """``gamma^{-1} int_F3 w(x) |h d_nu u|^2 dS``.

    ``weight`` is ``"x"``, ``"1-x/a"``, ``1`` or a callable of x; a
    :class:`CutoffSpec` bound to the triangle works as a callable.
    """
    if SideTag(side) is not SideTag.F3:
        raise InvalidParameterError("weighted boundary integrals are defined on F3 only")
    tri = u.triangle
    w, breaks = _weight_fn(weight, tri)
    val = u.integrate_boundary(lambda s, dnu: w(s) * dnu * dnu, SideTag.F3, breakpoints=breaks)
    return u.h ** 2 * val / tri.gamma


def spatial_mass(u, region=None) -> float:
    """``int_region |u|^2 dV``."""
    return u.integrate_volume(lambda x, y, v, vx, vy: v * v, region)


def _smoothstep(t):
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_dd(t):
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


def _smoothstep_int(t):
    return t ** 4 * (2.5 + t * (-3.0 + t))


@dataclass(frozen=True)
class CutoffSpec:
    """Monotone cutoff ``chi`` rising from 0 to 1 across a strip.

    ``chi' `` ramps up with a quintic smoothstep on ``[beta - delta^2, beta]``,
    is constant on ``[beta, beta + delta]`` and ramps down on
    ``[beta + delta, beta + delta + delta^2]``.  The plateau slope is
    ``1/(delta + delta^2)`` so that ``chi`` reaches exactly 1; this is
    ``1/delta`` up to an O(1) correction.
    """

    beta: float
    delta: float
    a: float

    def __post_init__(self):
        StripSpec(self.beta, self.delta).validate(make_triangle(self.a))

    @property
    def slope(self) -> float:
        return 1.0 / (self.delta + self.delta ** 2)

    @property
    def breakpoints(self):
        b, d = self.beta, self.delta
        return (b - d * d, b, b + d, b + d + d * d)

    def _pieces(self, x):
        x0, x1, x2, x3 = self.breakpoints
        d2 = self.delta ** 2
        x = np.asarray(x, dtype=float)
        up = (x > x0) & (x < x1)
        flat = (x >= x1) & (x <= x2)
        down = (x > x2) & (x < x3)
        t_up = np.clip((x - x0) / d2, 0.0, 1.0)
        t_dn = np.clip((x3 - x) / d2, 0.0, 1.0)
        return x, up, flat, down, t_up, t_dn, x1, x3, d2

    def __call__(self, x):
        x, up, flat, down, t_up, t_dn, x1, x3, d2 = self._pieces(x)
        c = self.slope
        half = 0.5 * c * d2
        out = np.where(x >= x3, 1.0, 0.0)
        out = np.where(up, c * d2 * _smoothstep_int(t_up), out)
        out = np.where(flat, half + c * (x - x1), out)
        out = np.where(down, 1.0 - c * d2 * _smoothstep_int(t_dn), out)
        return out

    def derivative(self, x):
        x, up, flat, down, t_up, t_dn, *_ = self._pieces(x)
        c = self.slope
        out = np.zeros_like(x)
        out = np.where(up, c * _smoothstep(t_up), out)
        out = np.where(flat, c, out)
        out = np.where(down, c * _smoothstep(t_dn), out)
        return out

    def third_derivative(self, x):
        x, up, flat, down, t_up, t_dn, *_, d2 = self._pieces(x)
        c = self.slope
        out = np.zeros_like(x)
        out = np.where(up, c * _smoothstep_dd(t_up) / d2 ** 2, out)
        out = np.where(down, c * _smoothstep_dd(t_dn) / d2 ** 2, out)
        return out


def rellich_cutoff_check(u, spec: CutoffSpec):
    """Both sides of the commutator identity for ``X = chi(x) d_x``.

    Returns ``(lhs, rhs, residual)`` with ``lhs = 2 int chi' |h u_x|^2 dV``,
    ``rhs = gamma^{-1} int_F3 chi |h d_nu u|^2 dS`` and their difference,
    which is ``O(h)`` as h -> 0.
    """
    if not isinstance(spec, CutoffSpec):
        raise InvalidParameterError("rellich_cutoff_check needs a CutoffSpec")
    tri = u.triangle
    if abs(spec.a - tri.a) > 1e-14:
        raise InvalidParameterError(f"cutoff built for a={spec.a}, triangle has a={tri.a}")
    x0, *_, x3 = spec.breakpoints
    lhs = 2.0 * u.h ** 2 * u.integrate_volume(
        lambda x, y, v, vx, vy: spec.derivative(x) * vx * vx,
        Region(x0, x3),
        breakpoints=spec.breakpoints,
    )
    rhs = weighted_boundary(u, spec)
    return lhs, rhs, lhs - rhs


METRICS_HEADER = [
    "index", "lambda", "h", "x_volume", "y_volume", "neumann_F1", "neumann_F2",
    "neumann_F3", "prop_left", "weighted_x_F3", "cluster_id", "basis_dependent",
]


@dataclass(frozen=True)
class EigenMetrics:
    index: int
    lam: float
    h: float
    x_volume: float
    y_volume: float
    neumann_F1: float
    neumann_F2: float
    neumann_F3: float
    prop_left: float
    weighted_x_F3: float
    cluster_id: int
    basis_dependent: bool

    def row(self):
        vals = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                vals.append("1" if v else "0")
            elif isinstance(v, int):
                vals.append(str(v))
            else:
                vals.append(repr(float(v)))
        return vals


def compute_metrics(u, index: int, cluster_id: int = 0, basis_dependent: bool = False,
                    split: float | None = None) -> EigenMetrics:
    """All per-eigenfunction quantities for one handle."""
    return EigenMetrics(
        index=index,
        lam=float(u.lam),
        h=float(u.h),
        x_volume=volume_energy(u, "x"),
        y_volume=volume_energy(u, "y"),
        neumann_F1=side_neumann(u, SideTag.F1),
        neumann_F2=side_neumann(u, SideTag.F2),
        neumann_F3=side_neumann(u, SideTag.F3),
        prop_left=prop_left(u, split),
        weighted_x_F3=weighted_boundary(u, "x"),
        cluster_id=int(cluster_id),
        basis_dependent=bool(basis_dependent),
    )


def metrics_for_handles(handles, clusters, split=None):
    """Metrics rows for a lambda-ascending list of handles and their cluster ids."""
    clusters = np.asarray(clusters)
    ids, sizes = np.unique(clusters, return_counts=True)
    size_of = dict(zip(ids.tolist(), sizes.tolist()))
    return [
        compute_metrics(u, k + 1, int(c), size_of[int(c)] > 1, split)
        for k, (u, c) in enumerate(zip(handles, clusters))
    ]


def metrics_for_run(run, split=None, rel_gap: float = 1e-6):
    """Metrics for every eigenpair of a FEM :class:`~trispec.fem.EigenRun`."""
    from .handles import FemEigenfunction

    clusters = run.clusters(rel_gap)
    handles = [FemEigenfunction(p, run.space) for p in run.pairs]
    return metrics_for_handles(handles, clusters, split)


def analytic_metrics(count: int, split=None):
    """Metrics of the first ``count`` closed-form modes of the isosceles triangle."""
    from .analytic import enumerate_modes
    from .handles import AnalyticEigenfunction

    modes = enumerate_modes(count)
    handles = [AnalyticEigenfunction(mode) for mode, _, _ in modes]
    return metrics_for_handles(handles, [c for *_, c in modes], split)


def write_metrics_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow(r.row())


def read_metrics_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != METRICS_HEADER:
            raise FormatError(f"{path}: unexpected metrics header {header}")
        rows = []
        for rec in reader:
            try:
                rows.append(EigenMetrics(
                    int(rec[0]), *(float(v) for v in rec[1:10]), int(rec[10]), rec[11] == "1"
                ))
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}: bad row {rec}") from exc
    return rows


def column(rows, name: str) -> np.ndarray:
    """One metric across rows; ``"lambda"`` maps to the ``lam`` field."""
    attr = "lam" if name == "lambda" else name
    return np.array([getattr(r, attr) for r in rows], dtype=float)
