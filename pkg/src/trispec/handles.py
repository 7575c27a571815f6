"""Uniform access to analytic and finite element eigenfunctions.

A handle knows its eigenvalue and how to integrate expressions of
``(u, u_x, u_y)`` over a strip of the domain and expressions of the normal
derivative along a side.  The metrics module only talks to handles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import analytic
from .domain import Region, RightTriangle, SideTag, make_triangle
from .errors import InvalidParameterError
from .fem import EigenPair, FemSpace
from .quadrature import gauss_legendre, panel_rule, triangle_rule

__all__ = ["AnalyticEigenfunction", "FemEigenfunction", "SquareMode", "Rectangle"]

# Gauss points per quarter-wavelength panel: 6 already resolves the volume
# integrands to rounding level, boundary integrals are cheap enough for 8
_GL_VOLUME = 6
_GL_ORDER = 8
_CHUNK = 400_000


def _cuts(lo, hi, breakpoints):
    return sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})


class AnalyticEigenfunction:
    """Closed-form eigenfunction ``u_mn`` on the right isosceles triangle."""

    def __init__(self, mode, cluster_id=None):
        if not isinstance(mode, analytic.ModeIndex):
            mode = analytic.ModeIndex.canonical(*mode)
        self.mode = mode
        self.cluster_id = cluster_id
        self.triangle = make_triangle(1.0)
        ev = mode.eigenvalue
        self.lam, self.h = ev.lam, ev.h
        self._width = 1.0 / (4 * max(mode.m, mode.n))
        self._energy = None

    def eval(self, x, y):
        return analytic.eval_mode(self.mode, x, y)

    def integrate_volume(self, f, region: Region | None = None, breakpoints=()):
        tri = self.triangle
        region = Region.whole(tri) if region is None else region
        region.validate(tri)
        xs, wx = panel_rule(region.x_lo, region.x_hi, self._width, _GL_VOLUME, breakpoints)
        ts, wt = panel_rule(0.0, 1.0, self._width, _GL_VOLUME)
        step = max(1, _CHUNK // max(len(ts), 1))
        total = 0.0
        for k in range(0, len(xs), step):
            x = xs[k:k + step, None]
            jac = 1.0 - x / tri.a
            y = jac * ts[None, :]
            x = np.broadcast_to(x, y.shape)
            u, (ux, uy) = self.eval(x, y)
            w = wx[k:k + step, None] * wt[None, :] * jac
            total += float(np.sum(w * f(x, y, u, ux, uy)))
        return total

    def gradient_energy(self, direction: str) -> float:
        # both directions come out of one pass over the quadrature grid
        if self._energy is None:
            self._energy = self._joint_energy()
        return self._energy[0 if direction == "x" else 1]

    def _joint_energy(self):
        ex = ey = 0.0
        tri = self.triangle
        xs, wx = panel_rule(0.0, tri.a, self._width, _GL_VOLUME)
        ts, wt = panel_rule(0.0, 1.0, self._width, _GL_VOLUME)
        step = max(1, _CHUNK // max(len(ts), 1))
        for k in range(0, len(xs), step):
            x = xs[k:k + step, None]
            jac = 1.0 - x / tri.a
            y = jac * ts[None, :]
            _, (ux, uy) = self.eval(np.broadcast_to(x, y.shape), y)
            w = wx[k:k + step, None] * wt[None, :] * jac
            ex += float(np.sum(w * ux * ux))
            ey += float(np.sum(w * uy * uy))
        return ex, ey

    def integrate_boundary(self, f, side: SideTag, lo=None, hi=None, breakpoints=()):
        tri = self.triangle
        s0, s1 = tri.side_extent(side)
        lo = s0 if lo is None else lo
        hi = s1 if hi is None else hi
        s, w = panel_rule(lo, hi, self._width, _GL_ORDER, breakpoints)
        x, y = tri.side_point(side, s)
        _, (ux, uy) = self.eval(x, y)
        nx, ny = tri.outward_normal(side)
        dnu = nx * ux + ny * uy
        return float(np.sum(w * tri.arclength_factor(side) * f(s, dnu)))


@dataclass(frozen=True)
class Rectangle:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    @property
    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)


class SquareMode:
    """``u = (2/pi) sin(m x) sin(n y)`` on ``[0, pi]^2``, with ``h^2 = 1/(m^2 + n^2)``."""

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise InvalidParameterError(f"square mode indices must be positive, got ({m}, {n})")
        self.m, self.n = m, n
        self.lam = float(m * m + n * n)
        self.h = 1.0 / math.sqrt(self.lam)
        self.area = math.pi ** 2
        self._width = math.pi / (4 * max(m, n))

    def eval(self, x, y):
        c = 2.0 / math.pi
        sx, cx = np.sin(self.m * x), np.cos(self.m * x)
        sy, cy = np.sin(self.n * y), np.cos(self.n * y)
        return c * sx * sy, (c * self.m * cx * sy, c * self.n * sx * cy)

    def integrate_volume(self, f, region: Rectangle | None = None, breakpoints=()):
        r = Rectangle(0.0, math.pi, 0.0, math.pi) if region is None else region
        if not (0 <= r.x_lo <= r.x_hi <= math.pi and 0 <= r.y_lo <= r.y_hi <= math.pi):
            raise InvalidParameterError(f"rectangle {r} is not inside [0, pi]^2")
        xs, wx = panel_rule(r.x_lo, r.x_hi, self._width, _GL_ORDER, breakpoints)
        ys, wy = panel_rule(r.y_lo, r.y_hi, self._width, _GL_ORDER)
        x, y = np.meshgrid(xs, ys, indexing="ij")
        u, (ux, uy) = self.eval(x, y)
        return float(np.sum(np.outer(wx, wy) * f(x, y, u, ux, uy)))

    def gradient_energy(self, direction: str) -> float:
        idx = 0 if direction == "x" else 1
        return self.integrate_volume(lambda x, y, u, ux, uy: (ux, uy)[idx] ** 2)


def _clip_strip(poly, lo, hi):
    """Clip a convex polygon (list of points) to ``lo <= x <= hi``."""
    for bound, keep in ((lo, lambda x: x >= lo), (hi, lambda x: x <= hi)):
        out = []
        n = len(poly)
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            pin, qin = keep(p[0]), keep(q[0])
            if pin:
                out.append(p)
            if pin != qin:
                t = (bound - p[0]) / (q[0] - p[0])
                out.append((bound, p[1] + t * (q[1] - p[1])))
        poly = out
        if not poly:
            break
    return poly


class FemEigenfunction:
    """Discrete eigenfunction on a :class:`FemSpace`.

    ``flux`` selects how the normal derivative on the boundary is obtained:
    ``"recovered"`` (default) solves for the boundary flux that balances the
    discrete residual ``K u - lam M u`` on each side, with the flux pinned to
    zero at the corners; ``"trace"`` takes the gradient of the adjacent
    element directly.
    """

    def __init__(self, pair: EigenPair, space: FemSpace, cluster_id=None, flux: str = "recovered"):
        if flux not in ("recovered", "trace"):
            raise InvalidParameterError(f"flux must be 'recovered' or 'trace', got {flux!r}")
        self.pair = pair
        self.space = space
        self.triangle: RightTriangle = space.mesh.triangle
        self.lam, self.h = pair.lam, pair.h
        self.cluster_id = cluster_id
        self.flux = flux
        self.u = space.full_vector(pair.coefficients)
        self._residual = None
        self._side_flux = {}

    def _flux_dofs(self, side: SideTag):
        if side not in self._side_flux:
            system = _flux_system(self.space, side)
            if self._residual is None:
                self._residual = self.space.K @ self.u - self.lam * (self.space.M @ self.u)
            self._side_flux[side] = scipy.linalg.cho_solve(system.factor, self._residual[system.dofs])
        return self._side_flux[side]

    def eval(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        elem, bary = self.space.mesh.locate(x, y)
        V, Gx, Gy = self.space.point_operators(elem, bary[:, 1], bary[:, 2])
        return V @ self.u, (Gx @ self.u, Gy @ self.u)

    # quadrature rules are cached on the space and shared by all modes
    def _volume_rule(self, lo, hi):
        key = ("vol", lo, hi)
        cache = self.space._cache
        if key not in cache:
            cache[key] = _strip_rule(self.space, lo, hi)
        return cache[key]

    def integrate_volume(self, f, region: Region | None = None, breakpoints=()):
        tri = self.triangle
        region = Region.whole(tri) if region is None else region
        region.validate(tri)
        cuts = _cuts(region.x_lo, region.x_hi, breakpoints)
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            x, y, w, V, Gx, Gy = self._volume_rule(lo, hi)
            if w.size:
                total += float(np.sum(w * f(x, y, V @ self.u, Gx @ self.u, Gy @ self.u)))
        return total

    def gradient_energy(self, direction: str) -> float:
        mat = self.space.kx if direction == "x" else self.space.ky
        return float(self.u @ (mat @ self.u))

    def integrate_boundary(self, f, side: SideTag, lo=None, hi=None, breakpoints=()):
        tri = self.triangle
        s0, s1 = tri.side_extent(side)
        lo = s0 if lo is None else lo
        hi = s1 if hi is None else hi
        side = SideTag(side)
        key = ("bnd", self.flux, side, lo, hi, tuple(sorted(breakpoints)))
        cache = self.space._cache
        if key not in cache:
            build = _boundary_rule if self.flux == "trace" else _recovered_rule
            cache[key] = build(self.space, side, lo, hi, breakpoints)
        s, w, D = cache[key]
        if self.flux == "trace":
            dnu = D @ self.u
        else:
            dnu = D @ self._flux_dofs(side)
        return float(np.sum(w * f(s, dnu)))


def _strip_rule(space: FemSpace, lo, hi, degree: int = 8):
    """Element quadrature restricted to ``lo <= x <= hi``.

    Elements cut by the strip edges are clipped and fan-triangulated; the
    rule is exact for piecewise polynomials of ``degree`` on each piece.
    """
    mesh = space.mesh
    xi, eta, wr = triangle_rule(degree)
    p = mesh.nodes[mesh.elements]
    xmin = p[:, :, 0].min(axis=1)
    xmax = p[:, :, 0].max(axis=1)
    inside = np.flatnonzero((xmin >= lo) & (xmax <= hi))
    cut = np.flatnonzero((xmax > lo) & (xmin < hi) & ~((xmin >= lo) & (xmax <= hi)))
    tris = [p[inside]]
    parents = [inside]
    sub, par = [], []
    for e in cut:
        poly = _clip_strip([tuple(v) for v in p[e]], lo, hi)
        for k in range(1, len(poly) - 1):
            sub.append((poly[0], poly[k], poly[k + 1]))
            par.append(e)
    if sub:
        tris.append(np.array(sub, dtype=float))
        parents.append(np.array(par, dtype=np.int64))
    T = np.concatenate(tris)
    parent = np.concatenate(parents)
    d1 = T[:, 1] - T[:, 0]
    d2 = T[:, 2] - T[:, 0]
    det = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    x = (T[:, 0, 0, None] + d1[:, 0, None] * xi + d2[:, 0, None] * eta).ravel()
    y = (T[:, 0, 1, None] + d1[:, 1, None] * xi + d2[:, 1, None] * eta).ravel()
    w = (det[:, None] * wr[None, :]).ravel()
    keep = w > 0
    elem = np.repeat(parent, len(wr))[keep]
    x, y, w = x[keep], y[keep], w[keep]
    rx, ry = space.to_reference(elem, x, y)
    V, Gx, Gy = space.point_operators(elem, rx, ry)
    return x, y, w, V, Gx, Gy


def _edge_elements(mesh):
    """Element index adjacent to each boundary edge."""
    t = mesh.elements
    nn = len(mesh.nodes)
    lookup = {}
    for loc in ((0, 1), (1, 2), (2, 0)):
        a = t[:, loc[0]]
        b = t[:, loc[1]]
        for e, key in enumerate(np.minimum(a, b) * nn + np.maximum(a, b)):
            lookup[int(key)] = e
    be = mesh.boundary_edges
    keys = np.minimum(be[:, 0], be[:, 1]) * nn + np.maximum(be[:, 0], be[:, 1])
    return np.array([lookup[int(k)] for k in keys], dtype=np.int64)


def _boundary_rule(space: FemSpace, side: SideTag, lo, hi, breakpoints, order: int = 6):
    """Gauss points on the part of ``side`` with coordinate in ``[lo, hi]``.

    The normal derivative is the trace of the gradient of the element that
    owns each boundary edge.
    """
    mesh = space.mesh
    tri = mesh.triangle
    if "edge_elements" not in space._cache:
        space._cache["edge_elements"] = _edge_elements(mesh)
    owner = space._cache["edge_elements"]
    coord = 1 if side is SideTag.F1 else 0
    g, wg = gauss_legendre(order)
    ss, ws, es = [], [], []
    for k, tag in enumerate(mesh.boundary_tags):
        if tag is not side:
            continue
        i, j = mesh.boundary_edges[k]
        a, b = sorted((mesh.nodes[i, coord], mesh.nodes[j, coord]))
        if min(b, hi) <= max(a, lo):
            continue
        cuts = _cuts(max(a, lo), min(b, hi), [c for c in (lo, hi, *breakpoints) if a < c < b])
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            if c1 <= c0:
                continue
            ss.append(c0 + (c1 - c0) * g)
            ws.append((c1 - c0) * wg)
            es.append(np.full(order, owner[k]))
    if not ss:
        return np.empty(0), np.empty(0), np.zeros((0, space.ndof))
    s = np.concatenate(ss)
    w = np.concatenate(ws) * tri.arclength_factor(side)
    elem = np.concatenate(es)
    x, y = tri.side_point(side, s)
    rx, ry = space.to_reference(elem, x, y)
    _, Gx, Gy = space.point_operators(elem, rx, ry)
    nx, ny = tri.outward_normal(side)
    D = (nx * Gx + ny * Gy).tocsr()
    return s, w, D


@dataclass(frozen=True, eq=False)
class _FluxSystem:
    dofs: np.ndarray      # global dofs carrying flux unknowns (corners excluded)
    factor: tuple         # Cholesky factor of the boundary mass matrix
    edges: list           # (local dof slots, s_start, s_end) per side edge


def _edge_shape(order, t):
    """1D Lagrange shape functions on [0, 1]: start, end (, midpoint)."""
    if order == 1:
        return np.column_stack([1.0 - t, t])
    return np.column_stack([(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)])


def _flux_system(space: FemSpace, side: SideTag) -> _FluxSystem:
    key = ("flux", side)
    if key in space._cache:
        return space._cache[key]
    mesh = space.mesh
    tri = mesh.triangle
    coord = 1 if side is SideTag.F1 else 0
    tags = mesh.boundary_tags
    # corners: nodes shared by edges of two different sides
    owners = {}
    for (i, j), tag in zip(mesh.boundary_edges, tags):
        owners.setdefault(int(i), set()).add(tag)
        owners.setdefault(int(j), set()).add(tag)
    corners = {n for n, t in owners.items() if len(t) > 1}
    raw = []
    for k, tag in enumerate(tags):
        if tag is not side:
            continue
        i, j = (int(v) for v in mesh.boundary_edges[k])
        dofs = [i, j] if space.order == 1 else [i, j, int(space.boundary_mid_dofs[k])]
        raw.append((dofs, mesh.nodes[i, coord], mesh.nodes[j, coord]))
    free = sorted({d for dofs, _, _ in raw for d in dofs if d not in corners})
    slot = {d: n for n, d in enumerate(free)}
    g, wg = gauss_legendre(4)
    S = np.zeros((len(free), len(free)))
    edges = []
    factor = tri.arclength_factor(side)
    for dofs, s0, s1 in raw:
        phi = _edge_shape(space.order, g)
        loc = abs(s1 - s0) * factor * (phi.T * wg) @ phi
        slots = [slot.get(d, -1) for d in dofs]
        for p, sp_ in enumerate(slots):
            for q, sq in enumerate(slots):
                if sp_ >= 0 and sq >= 0:
                    S[sp_, sq] += loc[p, q]
        edges.append((slots, s0, s1))
    system = _FluxSystem(np.array(free, dtype=np.int64), scipy.linalg.cho_factor(S), edges)
    space._cache[key] = system
    return system


def _recovered_rule(space: FemSpace, side: SideTag, lo, hi, breakpoints, order: int = 6):
    """Gauss points on ``side`` in ``[lo, hi]`` and the map from flux dofs to values."""
    system = _flux_system(space, side)
    tri = space.mesh.triangle
    g, wg = gauss_legendre(order)
    ss, ws, rows = [], [], []
    nfree = len(system.dofs)
    for slots, s0, s1 in system.edges:
        a, b = min(s0, s1), max(s0, s1)
        if min(b, hi) <= max(a, lo):
            continue
        cuts = _cuts(max(a, lo), min(b, hi), [c for c in breakpoints if a < c < b])
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            s = c0 + (c1 - c0) * g
            phi = _edge_shape(space.order, (s - s0) / (s1 - s0))
            B = np.zeros((order, nfree))
            for p, sl in enumerate(slots):
                if sl >= 0:
                    B[:, sl] += phi[:, p]
            ss.append(s)
            ws.append((c1 - c0) * wg)
            rows.append(B)
    if not ss:
        return np.empty(0), np.empty(0), np.zeros((0, nfree))
    w = np.concatenate(ws) * tri.arclength_factor(side)
    return np.concatenate(ss), w, np.vstack(rows)
