"""Right-triangle domains and structured, side-tagged triangulations.

The triangle has vertices (0, 0), (a, 0) and (0, 1).  Its sides are

* ``F1``: the vertical leg ``x = 0`` (length 1),
* ``F2``: the horizontal leg ``y = 0`` (length a),
* ``F3``: the hypotenuse ``x/a + y = 1`` (length gamma = sqrt(1 + a^2)).

Meshes place nodes at ``(i*a/ndiv, j/ndiv)`` with ``i + j <= ndiv`` and split
every grid cell along its anti-diagonal, so the hypotenuse is resolved exactly
and uniform refinement is nested.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError

__all__ = [
    "SideTag",
    "RightTriangle",
    "Mesh",
    "Region",
    "StripSpec",
    "make_triangle",
    "generate_mesh",
    "refine",
    "region_area",
    "write_mesh",
    "read_mesh",
]


class SideTag(str, enum.Enum):
    F1 = "F1"
    F2 = "F2"
    F3 = "F3"


@dataclass(frozen=True)
class RightTriangle:
    """Right triangle with legs 1 (vertical) and ``a`` (horizontal)."""

    a: float

    def __post_init__(self):
        if not (isinstance(self.a, (int, float)) and math.isfinite(self.a) and self.a > 0):
            raise InvalidParameterError(f"triangle leg a must be positive and finite, got {self.a!r}")

    @property
    def gamma(self) -> float:
        return math.sqrt(1.0 + self.a * self.a)

    @property
    def area(self) -> float:
        return self.a / 2.0

    def side_length(self, side: SideTag) -> float:
        side = SideTag(side)
        if side is SideTag.F1:
            return 1.0
        if side is SideTag.F2:
            return self.a
        return self.gamma

    def side_extent(self, side: SideTag) -> tuple[float, float]:
        """Range of the coordinate that parametrizes ``side``.

        F1 is parametrized by y, F2 and F3 by x.
        """
        return (0.0, 1.0) if SideTag(side) is SideTag.F1 else (0.0, self.a)

    def side_point(self, side: SideTag, s):
        """Map the side coordinate ``s`` to points ``(x, y)`` on ``side``."""
        s = np.asarray(s, dtype=float)
        side = SideTag(side)
        if side is SideTag.F1:
            return np.zeros_like(s), s
        if side is SideTag.F2:
            return s, np.zeros_like(s)
        return s, 1.0 - s / self.a

    def arclength_factor(self, side: SideTag) -> float:
        """dS per unit of the side coordinate."""
        return self.gamma / self.a if SideTag(side) is SideTag.F3 else 1.0

    def outward_normal(self, side: SideTag) -> tuple[float, float]:
        side = SideTag(side)
        if side is SideTag.F1:
            return (-1.0, 0.0)
        if side is SideTag.F2:
            return (0.0, -1.0)
        return (1.0 / self.gamma, self.a / self.gamma)


def make_triangle(a: float) -> RightTriangle:
    return RightTriangle(float(a))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation of a :class:`RightTriangle`.

    Attributes
    ----------
    triangle : RightTriangle
    nodes : (N, 2) float array
    elements : (E, 3) int array, counterclockwise
    boundary_edges : (B, 2) int array of node pairs
    boundary_tags : tuple of SideTag, one per boundary edge
    ndiv : int
        Number of divisions per leg.
    """

    triangle: RightTriangle
    nodes: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    ndiv: int
    _cells: np.ndarray = field(default=None, repr=False)

    @property
    def a(self) -> float:
        return self.triangle.a

    def element_areas(self) -> np.ndarray:
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def side_edges(self, side: SideTag) -> np.ndarray:
        side = SideTag(side)
        mask = np.array([t is side for t in self.boundary_tags], dtype=bool)
        return self.boundary_edges[mask]

    def _cell_table(self) -> np.ndarray:
        if self._cells is None:
            n = self.ndiv
            table = np.full((n, n, 2), -1, dtype=np.int64)
            c = self.nodes[self.elements].mean(axis=1)
            s = c[:, 0] * n / self.a
            t = c[:, 1] * n
            i = np.floor(s).astype(np.int64)
            j = np.floor(t).astype(np.int64)
            upper = ((s - i) + (t - j) > 1.0).astype(np.int64)
            table[i, j, upper] = np.arange(len(self.elements))
            object.__setattr__(self, "_cells", table)
        return self._cells

    def locate(self, x, y, tol: float = 1e-10):
        """Find the element containing each point.

        Returns
        -------
        elem : int array
        bary : (P, 3) barycentric coordinates within ``elem``

        Raises
        ------
        InvalidParameterError
            If any point lies outside the closed triangle.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = self.ndiv
        table = self._cell_table()
        s = x * n / self.a
        t = y * n
        i = np.clip(np.floor(s), 0, n - 1).astype(np.int64)
        j = np.clip(np.floor(t), 0, n - 1).astype(np.int64)
        over = i + j - (n - 1)
        over = np.maximum(over, 0)
        # pull cells back inside the staircase for points on the hypotenuse
        shift_i = np.minimum(over, i)
        i -= shift_i
        j -= over - shift_i
        upper = ((s - i) + (t - j) > 1.0) & (i + j <= n - 2)
        elem = table[i, j, upper.astype(np.int64)]
        p = self.nodes[self.elements[elem]]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        rx = x - p[:, 0, 0]
        ry = y - p[:, 0, 1]
        l1 = (rx * d2[:, 1] - ry * d2[:, 0]) / det
        l2 = (d1[:, 0] * ry - d1[:, 1] * rx) / det
        bary = np.column_stack([1.0 - l1 - l2, l1, l2])
        if np.any(bary < -tol):
            bad = int(np.argmax((bary < -tol).any(axis=1)))
            raise InvalidParameterError(f"point ({x[bad]!r}, {y[bad]!r}) lies outside the triangle")
        return elem, bary


def generate_mesh(tri: RightTriangle, ndiv: int) -> Mesh:
    """Structured mesh with ``ndiv`` divisions per leg."""
    if int(ndiv) != ndiv or ndiv < 1:
        raise InvalidParameterError(f"ndiv must be a positive integer, got {ndiv!r}")
    n = int(ndiv)
    a = tri.a
    index = -np.ones((n + 1, n + 1), dtype=np.int64)
    nodes = []
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[i, j] = len(nodes)
            nodes.append((i * a / n, j / n))
    elements = []
    for j in range(n):
        for i in range(n - j):
            elements.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j <= n - 2:
                elements.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    edges, tags = [], []
    for i in range(n):
        edges.append((index[i, 0], index[i + 1, 0]))
        tags.append(SideTag.F2)
    for i in range(n, 0, -1):
        edges.append((index[i, n - i], index[i - 1, n - i + 1]))
        tags.append(SideTag.F3)
    for j in range(n, 0, -1):
        edges.append((index[0, j], index[0, j - 1]))
        tags.append(SideTag.F1)
    return Mesh(
        triangle=tri,
        nodes=np.array(nodes, dtype=float),
        elements=np.array(elements, dtype=np.int64),
        boundary_edges=np.array(edges, dtype=np.int64),
        boundary_tags=tuple(tags),
        ndiv=n,
    )


def refine(mesh: Mesh) -> Mesh:
    """Uniform midpoint subdivision.

    The coarse nodes keep their indices, so they form a prefix of the fine
    node list; edge midpoints are appended after them.
    """
    t = mesh.elements
    nn = len(mesh.nodes)
    pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    pairs.sort(axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])
    ne = len(t)
    m01 = nn + inv[:ne]
    m12 = nn + inv[ne:2 * ne]
    m20 = nn + inv[2 * ne:]
    elements = np.concatenate([
        np.column_stack([t[:, 0], m01, m20]),
        np.column_stack([m01, t[:, 1], m12]),
        np.column_stack([m20, m12, t[:, 2]]),
        np.column_stack([m01, m12, m20]),
    ])
    lookup = {(int(p), int(q)): nn + k for k, (p, q) in enumerate(uniq)}
    edges, tags = [], []
    for (p, q), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        m = lookup[(min(p, q), max(p, q))]
        edges += [(p, m), (m, q)]
        tags += [tag, tag]
    return Mesh(
        triangle=mesh.triangle,
        nodes=nodes,
        elements=elements,
        boundary_edges=np.array(edges, dtype=np.int64),
        boundary_tags=tuple(tags),
        ndiv=2 * mesh.ndiv,
    )


@dataclass(frozen=True)
class Region:
    """Vertical strip ``x_lo <= x <= x_hi`` intersected with the triangle."""

    x_lo: float
    x_hi: float

    @classmethod
    def whole(cls, tri: RightTriangle) -> "Region":
        return cls(0.0, tri.a)

    def validate(self, tri: RightTriangle) -> None:
        if not (0.0 <= self.x_lo <= self.x_hi <= tri.a):
            raise InvalidParameterError(
                f"region [{self.x_lo}, {self.x_hi}] is not inside [0, {tri.a}]"
            )


@dataclass(frozen=True)
class StripSpec:
    """Strip ``beta - delta^2 <= x <= beta + delta + delta^2``."""

    beta: float
    delta: float

    @property
    def x_lo(self) -> float:
        return self.beta - self.delta ** 2

    @property
    def x_hi(self) -> float:
        return self.beta + self.delta + self.delta ** 2

    def validate(self, tri: RightTriangle) -> None:
        if not (self.delta > 0 and 0.0 < self.x_lo < self.x_hi < tri.a):
            raise InvalidParameterError(
                f"strip beta={self.beta}, delta={self.delta} does not fit inside (0, {tri.a})"
            )

    def region(self, tri: RightTriangle) -> Region:
        self.validate(tri)
        return Region(self.x_lo, self.x_hi)


def region_area(tri: RightTriangle, region) -> float:
    """Exact area of a strip region (trapezoid rule is exact here)."""
    if isinstance(region, StripSpec):
        region = region.region(tri)
    region.validate(tri)
    a = tri.a
    lo, hi = region.x_lo, region.x_hi
    return ((1.0 - lo / a) + (1.0 - hi / a)) * (hi - lo) / 2.0


def write_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.ndiv} {mesh.a!r}", f"nodes {len(mesh.nodes)}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.nodes]
    lines.append(f"elements {len(mesh.elements)}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.elements]
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [f"{i} {j} {tag.value}" for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_mesh(path) -> Mesh:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        ndiv_s, a_s = lines[0].split()
        pos = 1

        def block(name):
            nonlocal pos
            key, count = lines[pos].split()
            if key != name:
                raise FormatError(f"expected section {name!r}, found {key!r}")
            rows = [ln.split() for ln in lines[pos + 1:pos + 1 + int(count)]]
            pos += 1 + int(count)
            return rows

        nodes = np.array(block("nodes"), dtype=float).reshape(-1, 2)
        elements = np.array(block("elements"), dtype=np.int64).reshape(-1, 3)
        bnd = block("boundary")
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed mesh file {path}: {exc}") from exc
    return Mesh(
        triangle=make_triangle(float(a_s)),
        nodes=nodes,
        elements=elements,
        boundary_edges=np.array([(int(i), int(j)) for i, j, _ in bnd], dtype=np.int64).reshape(-1, 2),
        boundary_tags=tuple(SideTag(tag) for _, _, tag in bnd),
        ndiv=int(ndiv_s),
    )
