"""Gauss-type quadrature rules used throughout the package."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_rule(lo: float, hi: float, width: float, order: int = 8, breakpoints=()):
    """Composite Gauss-Legendre rule on [lo, hi].

    Panels are no wider than ``width``; any ``breakpoints`` inside the
    interval become panel boundaries so that piecewise integrands are
    integrated panel by panel.
    """
    if hi <= lo:
        return np.empty(0), np.empty(0)
    cuts = sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})
    xg, wg = gauss_legendre(order)
    xs, ws = [], []
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        npan = max(1, math.ceil((c1 - c0) / width - 1e-12))
        edges = np.linspace(c0, c1, npan + 1)
        h = np.diff(edges)[:, None]
        xs.append((edges[:-1, None] + h * xg).ravel())
        ws.append((h * wg).ravel())
    return np.concatenate(xs), np.concatenate(ws)


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed (Duffy) Gauss rule on the reference triangle (0,0),(1,0),(0,1).

    Exact for polynomials of total degree ``degree``.  Returns reference
    coordinates ``(xi, eta)`` and weights summing to 1/2.
    """
    n = degree // 2 + 1
    g, wg = gauss_legendre(n + 1)
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(wg, wg, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    w = (wu * wv * (1.0 - u)).ravel()
    return xi, eta, w
