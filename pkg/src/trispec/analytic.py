"""Closed-form Dirichlet eigenfunctions of the right isosceles triangle.

On ``T = {0 <= x <= 1, 0 <= y <= 1 - x}`` every Dirichlet eigenfunction is

    u_mn = c sin(n pi x) sin(m pi y) + d sin(m pi x) sin(n pi y),  m != n,

with ``c = d`` when m and n have opposite parity, ``c = -d`` otherwise, and
``c^2 = d^2 = 4`` for unit L2 norm.  The eigenvalue is ``pi^2 (m^2 + n^2)``.
We always take ``c = +2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidModeError, InvalidParameterError

__all__ = [
    "ModeIndex",
    "AnalyticEigenvalue",
    "enumerate_modes",
    "eval_mode",
    "eval_mode_laplacian",
    "exact_Il",
    "exact_Ir",
    "asymptotic_Il_limit",
    "square_mode_x_energy",
]


@dataclass(frozen=True)
class ModeIndex:
    m: int
    n: int
    c: float
    d: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidModeError(f"mode indices must be positive, got ({self.m}, {self.n})")
        if self.m == self.n:
            raise InvalidModeError(f"m == n = {self.m} gives the zero function")
        if self.c * self.c != 4.0 or self.d * self.d != 4.0:
            raise InvalidModeError("coefficients must satisfy c^2 = d^2 = 4")
        same = (self.m - self.n) % 2 == 0
        if (self.c == self.d) == same:
            raise InvalidModeError(f"coefficient signs violate the parity rule for ({self.m}, {self.n})")

    @classmethod
    def canonical(cls, m: int, n: int) -> "ModeIndex":
        m, n = int(m), int(n)
        d = -2.0 if (m - n) % 2 == 0 else 2.0
        return cls(m, n, 2.0, d)

    @property
    def eigenvalue(self) -> "AnalyticEigenvalue":
        return AnalyticEigenvalue.of(self.m, self.n)


@dataclass(frozen=True)
class AnalyticEigenvalue:
    lam: float
    h: float

    @classmethod
    def of(cls, m: int, n: int) -> "AnalyticEigenvalue":
        lam = math.pi ** 2 * (m * m + n * n)
        return cls(lam, 1.0 / math.sqrt(lam))


def enumerate_modes(count: int):
    """First ``count`` modes ordered by eigenvalue.

    Returns a list of ``(ModeIndex, AnalyticEigenvalue, cluster_id)``; modes
    sharing ``m^2 + n^2`` share a cluster id.  Within a cluster the order is
    by increasing m, and every representative has m < n.
    """
    if count < 1:
        raise InvalidParameterError(f"count must be >= 1, got {count}")
    # pairs m < n with m^2 + n^2 <= R^2 number about pi R^2 / 8
    radius = int(math.sqrt(8.0 * count / math.pi)) + 4
    while True:
        keys = [
            (m * m + n * n, m, n)
            for n in range(2, radius + 1)
            for m in range(1, n)
            if m * m + n * n <= radius * radius
        ]
        if len(keys) > count:
            break
        radius *= 2
    keys.sort()
    out = []
    cluster, last = -1, None
    for s, m, n in keys[:count]:
        if s != last:
            cluster += 1
            last = s
        out.append((ModeIndex.canonical(m, n), AnalyticEigenvalue.of(m, n), cluster))
    return out


def eval_mode(mode: ModeIndex, x, y):
    """Value and gradient ``(u, (u_x, u_y))`` of the mode at ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n, c, d = mode.m, mode.n, mode.c, mode.d
    p = math.pi
    snx, cnx = np.sin(n * p * x), np.cos(n * p * x)
    smx, cmx = np.sin(m * p * x), np.cos(m * p * x)
    sny, cny = np.sin(n * p * y), np.cos(n * p * y)
    smy, cmy = np.sin(m * p * y), np.cos(m * p * y)
    u = c * snx * smy + d * smx * sny
    ux = p * (c * n * cnx * smy + d * m * cmx * sny)
    uy = p * (c * m * snx * cmy + d * n * smx * cny)
    return u, (ux, uy)


def eval_mode_laplacian(mode: ModeIndex, x, y):
    """``u_xx + u_yy`` from the analytic second derivatives."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n, c, d = mode.m, mode.n, mode.c, mode.d
    p = math.pi
    t1 = c * np.sin(n * p * x) * np.sin(m * p * y)
    t2 = d * np.sin(m * p * x) * np.sin(n * p * y)
    uxx = -(p * p) * (n * n * t1 + m * m * t2)
    uyy = -(p * p) * (m * m * t1 + n * n * t2)
    return uxx + uyy


def exact_Il(mode) -> float:
    """Share of the bottom-side Neumann mass on ``0 <= x <= 1/2``.

    ``mode`` may be a :class:`ModeIndex` or an ``(m, n)`` pair (canonical
    coefficients are then used).
    """
    if not isinstance(mode, ModeIndex):
        m, n = mode
        if m == n:
            raise InvalidModeError(f"m == n = {m} gives the zero function")
        mode = ModeIndex.canonical(m, n)
    # the value is symmetric in (m, n); fix the order so it is bitwise symmetric too
    m, n = min(mode.m, mode.n), max(mode.m, mode.n)
    cd = mode.c * mode.d
    if (m + n) % 2 == 0:
        return 0.5
    h2 = 1.0 / (math.pi ** 2 * (m * m + n * n))
    diff = math.sin(0.5 * math.pi * (n - m)) / (n - m)
    tot = math.sin(0.5 * math.pi * (n + m)) / (n + m)
    return 0.5 * (1.0 + h2 * cd * math.pi * n * m * (diff - tot))


def exact_Ir(mode) -> float:
    return 1.0 - exact_Il(mode)


def asymptotic_Il_limit(j: int) -> float:
    """Limit of ``exact_Il(m, m + j)`` as m grows, for odd j."""
    if int(j) != j or j < 1 or j % 2 == 0:
        raise InvalidParameterError(f"j must be an odd positive integer, got {j!r}")
    sign = 1.0 if j % 4 == 1 else -1.0
    return 0.5 * (1.0 + sign * 2.0 / (j * math.pi))


def square_mode_x_energy(m: int, n: int) -> float:
    """``int |h d_x u|^2`` for ``u = (2/pi) sin(mx) sin(ny)`` on ``[0, pi]^2``."""
    if m < 1 or n < 1:
        raise InvalidParameterError(f"square mode indices must be positive, got ({m}, {n})")
    return m * m / (m * m + n * n)
