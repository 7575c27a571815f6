"""Lagrange finite elements for the Dirichlet Laplacian on a triangle mesh.

``assemble`` builds stiffness and mass matrices for P1 or P2 elements with
exact (polynomial) quadrature, ``reduce_dirichlet`` drops the boundary
degrees of freedom and ``solve_eigs`` computes the low end of the spectrum of
``K u = lam M u`` by windowed shift-invert Lanczos.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .domain import Mesh, RightTriangle, generate_mesh, make_triangle
from .errors import AssemblyError, FormatError, InvalidParameterError, SolverError
from .quadrature import triangle_rule

log = logging.getLogger(__name__)

ARCHIVE_MAGIC = "TRISPEC-EIG v1"

__all__ = [
    "FemSpace",
    "EigenPair",
    "EigenRun",
    "assemble",
    "reduce_dirichlet",
    "solve_eigs",
    "eval_fem",
    "cluster_ids",
    "solve_run",
    "write_archive",
    "read_archive",
]


def reference_basis(order: int, xi, eta):
    """Shape functions on the reference triangle.

    Returns values ``(P, nb)`` and reference gradients ``(P, nb, 2)``.
    Local P2 ordering: three vertices, then edges 01, 12, 20.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    l0 = 1.0 - xi - eta
    lam = (l0, xi, eta)
    dlam = (np.array([-1.0, -1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    P = xi.shape[0]
    if order == 1:
        vals = np.column_stack(lam)
        grads = np.broadcast_to(np.array(dlam), (P, 3, 2)).copy()
        return vals, grads
    if order != 2:
        raise InvalidParameterError(f"element order must be 1 or 2, got {order!r}")
    vals = np.empty((P, 6))
    grads = np.empty((P, 6, 2))
    for i in range(3):
        vals[:, i] = lam[i] * (2.0 * lam[i] - 1.0)
        grads[:, i, :] = (4.0 * lam[i] - 1.0)[:, None] * dlam[i]
    for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        vals[:, 3 + k] = 4.0 * lam[i] * lam[j]
        grads[:, 3 + k, :] = 4.0 * (lam[j][:, None] * dlam[i] + lam[i][:, None] * dlam[j])
    return vals, grads


@dataclass(eq=False)
class FemSpace:
    """Degrees of freedom of a Lagrange space on ``mesh``.

    Attributes
    ----------
    order : int
    mesh : Mesh
    coords : (ndof, 2) dof coordinates
    element_dofs : (E, nb) global dof numbers per element
    boundary_dofs, interior_dofs : sorted int arrays partitioning all dofs
    """

    order: int
    mesh: Mesh
    coords: np.ndarray
    element_dofs: np.ndarray
    boundary_dofs: np.ndarray
    interior_dofs: np.ndarray
    boundary_mid_dofs: np.ndarray | None = None
    kx: sp.csr_matrix = None
    ky: sp.csr_matrix = None
    K: sp.csr_matrix = None
    M: sp.csr_matrix = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ndof(self) -> int:
        return len(self.coords)

    def jacobians(self, elem=None):
        """Affine maps of the elements: origin, Jacobian, determinant."""
        t = self.mesh.elements if elem is None else self.mesh.elements[elem]
        p = self.mesh.nodes[t]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        return p[:, 0], J, det

    def full_vector(self, interior_coefs) -> np.ndarray:
        u = np.zeros(self.ndof)
        u[self.interior_dofs] = interior_coefs
        return u

    def point_operators(self, elem, xi, eta):
        """Sparse maps from a full dof vector to value, d/dx and d/dy at points.

        Point ``k`` lies in element ``elem[k]`` at reference coordinates
        ``(xi[k], eta[k])``.
        """
        elem = np.asarray(elem, dtype=np.int64)
        vals, rgrad = reference_basis(self.order, xi, eta)
        _, J, det = self.jacobians(elem)
        # J^{-T} applied to reference gradients
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1] / det
        inv[:, 1, 1] = J[:, 0, 0] / det
        inv[:, 0, 1] = -J[:, 0, 1] / det
        inv[:, 1, 0] = -J[:, 1, 0] / det
        pgrad = np.einsum("pba,pnb->pna", inv, rgrad)
        P, nb = vals.shape
        rows = np.repeat(np.arange(P), nb)
        cols = self.element_dofs[elem].ravel()
        shape = (P, self.ndof)
        V = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=shape)
        Gx = sp.csr_matrix((pgrad[:, :, 0].ravel(), (rows, cols)), shape=shape)
        Gy = sp.csr_matrix((pgrad[:, :, 1].ravel(), (rows, cols)), shape=shape)
        return V, Gx, Gy

    def to_reference(self, elem, x, y):
        origin, J, det = self.jacobians(elem)
        rx = np.asarray(x) - origin[:, 0]
        ry = np.asarray(y) - origin[:, 1]
        xi = (J[:, 1, 1] * rx - J[:, 0, 1] * ry) / det
        eta = (-J[:, 1, 0] * rx + J[:, 0, 0] * ry) / det
        return xi, eta


def _build_space(mesh: Mesh, order: int) -> FemSpace:
    if order not in (1, 2):
        raise InvalidParameterError(f"element order must be 1 or 2, got {order!r}")
    nn = len(mesh.nodes)
    bnodes = np.unique(mesh.boundary_edges)
    if order == 1:
        coords = mesh.nodes.copy()
        edofs = mesh.elements.copy()
        bdofs = bnodes
        bmid = None
    else:
        t = mesh.elements
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs.sort(axis=1)
        uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        ne = len(t)
        edofs = np.column_stack([t, nn + inv[:ne], nn + inv[ne:2 * ne], nn + inv[2 * ne:]])
        coords = np.vstack([mesh.nodes, 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])])
        be = np.sort(mesh.boundary_edges, axis=1)
        key = uniq[:, 0] * nn + uniq[:, 1]
        pos = np.searchsorted(key, be[:, 0] * nn + be[:, 1])
        bmid = nn + pos
        bdofs = np.union1d(bnodes, bmid)
    interior = np.setdiff1d(np.arange(len(coords)), bdofs)
    return FemSpace(order, mesh, coords, edofs, bdofs, interior, bmid)


def assemble(mesh: Mesh, order: int = 2):
    """Stiffness ``K``, mass ``M`` and the dof layout for ``mesh``.

    The directional parts ``Kx`` (d/dx products) and ``Ky`` are kept on the
    returned space; ``K = Kx + Ky``.
    """
    space = _build_space(mesh, order)
    _, J, det = space.jacobians()
    bad = np.flatnonzero(det <= 1e-14 * np.max(np.abs(det)))
    if bad.size:
        raise AssemblyError(f"element {int(bad[0])} is degenerate or inverted (det={det[bad[0]]:.3e})")
    xi, eta, w = triangle_rule(2 * order)
    vals, rgrad = reference_basis(order, xi, eta)
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    g = np.einsum("eba,qnb->eqna", inv, rgrad)
    wd = w[None, :] * det[:, None]
    kx = np.einsum("eq,eqi,eqj->eij", wd, g[..., 0], g[..., 0])
    ky = np.einsum("eq,eqi,eqj->eij", wd, g[..., 1], g[..., 1])
    mloc = np.einsum("q,qi,qj->ij", w, vals, vals)
    me = det[:, None, None] * mloc[None]
    nb = space.element_dofs.shape[1]
    rows = np.repeat(space.element_dofs, nb, axis=1).ravel()
    cols = np.tile(space.element_dofs, (1, nb)).ravel()
    n = space.ndof

    def mat(local):
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))

    space.kx = mat(kx)
    space.ky = mat(ky)
    K = mat(kx + ky)
    M = mat(me)
    space.K, space.M = K, M
    return K, M, space


def reduce_dirichlet(K, M, space: FemSpace):
    """Restrict ``K`` and ``M`` to the interior degrees of freedom."""
    idx = space.interior_dofs
    if idx.size == 0:
        raise InvalidParameterError(
            f"mesh with ndiv={space.mesh.ndiv} has no interior dofs for order {space.order}"
        )
    K_int = K.tocsr()[idx][:, idx].tocsc()
    M_int = M.tocsr()[idx][:, idx].tocsc()
    return K_int, M_int


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Discrete eigenpair; ``coefficients`` live on the interior dofs."""

    lam: float
    coefficients: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / math.sqrt(self.lam)


def cluster_ids(lams, rel_gap: float = 1e-6) -> np.ndarray:
    """Group sorted eigenvalues whose relative gap is below ``rel_gap``."""
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        return np.zeros(0, dtype=np.int64)
    gaps = np.diff(lams) / np.maximum(np.abs(lams[1:]), np.finfo(float).tiny)
    return np.concatenate([[0], np.cumsum(gaps > rel_gap)]).astype(np.int64)


def _orthonormalize(V, M, clusters):
    """M-orthonormalize the columns of ``V``, jointly within each cluster."""
    V = V.copy()
    for c in np.unique(clusters):
        cols = np.flatnonzero(clusters == c)
        B = V[:, cols]
        G = B.T @ (M @ B)
        L = np.linalg.cholesky(0.5 * (G + G.T))
        V[:, cols] = scipy.linalg.solve_triangular(L, B.T, lower=True).T
    return V


def _fix_signs(V):
    for k in range(V.shape[1]):
        col = V[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.max(np.abs(col)))
        if big.size and col[big[0]] < 0:
            V[:, k] = -col
    return V


def _arpack(K, M, k, sigma, v0):
    n = K.shape[0]
    ncv = min(n, max(2 * k + 1, 20))
    try:
        return eigsh(K, k=k, M=M, sigma=sigma, which="LM", v0=v0, ncv=ncv, tol=0.0, maxiter=50 * n)
    except ArpackNoConvergence as exc:
        raise SolverError(
            f"shift-invert Lanczos did not converge at sigma={sigma:.6g}",
            achieved=len(exc.eigenvalues),
        ) from exc


def solve_eigs(K_int, M_int, count: int, *, window: int = 160, seed: int = 20240611,
               cluster_gap: float = 1e-6):
    """Smallest ``count`` eigenpairs of ``K u = lam M u``.

    Small problems go to a dense solver.  Otherwise the spectrum is swept in
    windows of ``window`` eigenvalues with shift-invert Lanczos; each window
    only keeps eigenvalues below a cut placed in a spectral gap, so clusters
    are never split between windows.

    Returns
    -------
    list of EigenPair, ascending, M-orthonormal.
    """
    n = K_int.shape[0]
    if count < 1 or count > n:
        raise InvalidParameterError(f"count must be in [1, {n}], got {count}")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)

    if n <= 400 or count >= n - 1:
        lams, V = scipy.linalg.eigh(K_int.toarray(), M_int.toarray())
        lams, V = lams[:count], V[:, :count]
    else:
        vals_acc, vecs_acc = [], []
        cut = -np.inf
        sigma = 0.0
        achieved = 0
        stalls = 0
        k = min(max(window, 1), n - 1)
        while achieved < count:
            k_now = min(k if cut > -np.inf else min(k, count + 12), n - 1)
            vals, vecs = _arpack(K_int, M_int, k_now, sigma, v0)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            r = np.max(np.abs(vals - sigma))
            lo_cov, hi_cov = sigma - r, sigma + r
            if cut > -np.inf and lo_cov >= cut:
                # window missed the region just above the previous cut
                sigma = cut + 0.5 * (sigma - cut) - 0.25 * r
                stalls += 1
                if stalls > 20:
                    raise SolverError("spectrum slicing failed to cover a gap", achieved=achieved)
                continue
            new_cut = None
            for i in range(len(vals) - 2, -1, -1):
                if vals[i + 1] <= hi_cov and vals[i] > cut and \
                        (vals[i + 1] - vals[i]) > cluster_gap * abs(vals[i + 1]):
                    new_cut = 0.5 * (vals[i] + vals[i + 1])
                    break
            if k_now == n - 1 and vals[-1] > cut:
                new_cut = np.inf if new_cut is None else max(new_cut, vals[-1] + 1.0)
            if new_cut is None:
                stalls += 1
                if stalls > 20 or k >= n - 1:
                    raise SolverError("no spectral gap found inside the window", achieved=achieved)
                k = min(2 * k, n - 1)
                continue
            keep = (vals > cut) & (vals < new_cut)
            vals_acc.append(vals[keep])
            vecs_acc.append(vecs[:, keep])
            achieved += int(keep.sum())
            log.debug("window sigma=%.6g kept %d eigenpairs (total %d)", sigma, keep.sum(), achieved)
            cut = new_cut
            stalls = 0
            sigma = cut + 0.4 * (hi_cov - lo_cov)
        lams = np.concatenate(vals_acc)
        V = np.concatenate(vecs_acc, axis=1)
        order = np.argsort(lams, kind="stable")
        lams, V = lams[order][:count], V[:, order][:, :count]

    clusters = cluster_ids(lams, cluster_gap)
    V = _orthonormalize(V, M_int, clusters)
    V = _fix_signs(V)
    KV = K_int @ V
    MV = M_int @ V
    lams = np.einsum("ij,ij->j", V, KV)
    resid = np.linalg.norm(KV - MV * lams, axis=0)
    scale = lams * np.linalg.norm(MV, axis=0)
    bad = np.flatnonzero(resid > 1e-8 * scale)
    if bad.size:
        raise SolverError(
            f"eigenpair {int(bad[0])} residual {resid[bad[0]] / scale[bad[0]]:.2e} exceeds 1e-8",
            achieved=int(bad[0]),
        )
    order = np.argsort(lams, kind="stable")
    pairs = []
    for j in order:
        c = np.ascontiguousarray(V[:, j])
        c.flags.writeable = False
        pairs.append(EigenPair(float(lams[j]), c))
    return pairs


def eval_fem(pair: EigenPair, space: FemSpace, mesh: Mesh, point):
    """Value and gradient of the discrete eigenfunction at ``point``.

    ``point`` may be a single ``(x, y)`` or an ``(P, 2)`` array.
    """
    if mesh is not space.mesh:
        raise InvalidParameterError("space was not built on this mesh")
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    elem, bary = mesh.locate(pts[:, 0], pts[:, 1])
    V, Gx, Gy = space.point_operators(elem, bary[:, 1], bary[:, 2])
    u = space.full_vector(pair.coefficients)
    val, gx, gy = V @ u, Gx @ u, Gy @ u
    if np.ndim(point) == 1:
        return float(val[0]), (float(gx[0]), float(gy[0]))
    return val, (gx, gy)


@dataclass(eq=False)
class EigenRun:
    """Everything produced by one FEM solve."""

    triangle: RightTriangle
    mesh: Mesh
    space: FemSpace
    pairs: list
    M_int: sp.spmatrix = None

    @property
    def lams(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def clusters(self, rel_gap: float = 1e-6) -> np.ndarray:
        return cluster_ids(self.lams, rel_gap)

    def coefficient_matrix(self) -> np.ndarray:
        return np.column_stack([p.coefficients for p in self.pairs])


def solve_run(a, ndiv: int, order: int = 2, count: int = 1, mesh: Mesh | None = None) -> EigenRun:
    tri = a if isinstance(a, RightTriangle) else make_triangle(a)
    mesh = generate_mesh(tri, ndiv) if mesh is None else mesh
    K, M, space = assemble(mesh, order)
    K_int, M_int = reduce_dirichlet(K, M, space)
    pairs = solve_eigs(K_int, M_int, count)
    return EigenRun(tri, mesh, space, pairs, M_int)


def write_archive(run: EigenRun, path) -> None:
    """Write eigenpairs as ``TRISPEC-EIG v1``.

    Layout: the magic line, one JSON metadata line, then little-endian
    float64 eigenvalues followed by the row-major ``count x dim`` coefficient
    block.  Coefficients refer to the interior dofs of ``generate_mesh``.
    """
    C = run.coefficient_matrix().T if run.pairs else np.zeros((0, len(run.space.interior_dofs)))
    meta = {
        "a": run.triangle.a,
        "ndiv": run.mesh.ndiv,
        "order": run.space.order,
        "count": len(run.pairs),
        "dim": int(C.shape[1]),
    }
    with open(path, "wb") as fh:
        fh.write((ARCHIVE_MAGIC + "\n").encode())
        fh.write((json.dumps(meta, sort_keys=True) + "\n").encode())
        fh.write(np.asarray(run.lams, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(C, dtype="<f8").tobytes())


def read_archive(path) -> EigenRun:
    data = Path(path).read_bytes()
    head, _, rest = data.partition(b"\n")
    if head.decode(errors="replace") != ARCHIVE_MAGIC:
        raise FormatError(f"{path}: missing {ARCHIVE_MAGIC!r} header")
    meta_line, _, body = rest.partition(b"\n")
    try:
        meta = json.loads(meta_line)
        count, dim = int(meta["count"]), int(meta["dim"])
    except (ValueError, KeyError) as exc:
        raise FormatError(f"{path}: bad metadata line") from exc
    if len(body) != 8 * (count + count * dim):
        raise FormatError(f"{path}: expected {count} eigenpairs of dimension {dim}")
    lams = np.frombuffer(body[:8 * count], dtype="<f8")
    C = np.frombuffer(body[8 * count:], dtype="<f8").reshape(count, dim)
    tri = make_triangle(meta["a"])
    mesh = generate_mesh(tri, meta["ndiv"])
    K, M, space = assemble(mesh, meta["order"])
    if len(space.interior_dofs) != dim:
        raise FormatError(f"{path}: dimension {dim} does not match the regenerated mesh")
    pairs = []
    for lam, c in zip(lams, C):
        c = np.array(c)
        c.flags.writeable = False
        pairs.append(EigenPair(float(lam), c))
    _, M_int = reduce_dirichlet(K, M, space)
    return EigenRun(tri, mesh, space, pairs, M_int)
