"""Comparisons between eigen-solves on nested meshes."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import enumerate_modes
from .domain import refine
from .errors import InvalidParameterError, MeshMismatchError
from .fem import EigenRun, solve_run

__all__ = [
    "ConvergenceReport",
    "max_eigendiff",
    "l2_running_avg",
    "l2_differences",
    "nested_dof_map",
    "compare",
    "convergence_study",
    "analytic_relative_errors",
    "write_convergence_csv",
]

CONVERGENCE_HEADER = ["coarse_ndiv", "fine_ndiv", "count", "max_eigendiff", "l2_running_avg"]


@dataclass
class ConvergenceReport:
    ndiv_coarse: int
    ndiv_fine: int
    count: int
    max_eigendiff: float
    l2_running_avg: float
    eigendiffs: np.ndarray = field(repr=False, default=None)


def _lams(run_or_pairs):
    pairs = run_or_pairs.pairs if isinstance(run_or_pairs, EigenRun) else run_or_pairs
    return np.array([p.lam for p in pairs])


def max_eigendiff(coarse, fine, count: int) -> float:
    """Largest ``|lam_coarse - lam_fine|`` over the first ``count`` indices."""
    lc, lf = _lams(coarse), _lams(fine)
    if count < 1 or count > min(len(lc), len(lf)):
        raise InvalidParameterError(
            f"count {count} exceeds the available modes ({len(lc)} coarse, {len(lf)} fine)"
        )
    return float(np.max(np.abs(lc[:count] - lf[:count])))


def nested_dof_map(coarse_space, fine_space, tol: float = 1e-12) -> np.ndarray:
    """Fine dof index sitting at each coarse dof location."""
    if coarse_space.order != fine_space.order:
        raise MeshMismatchError("spaces have different element orders")
    scale = max(1.0, float(np.max(np.abs(fine_space.coords))))
    key = lambda c: np.round(c / (tol * scale * 10)).astype(np.int64)  # noqa: E731
    fine_keys = {tuple(k): i for i, k in enumerate(key(fine_space.coords))}
    out = np.empty(coarse_space.ndof, dtype=np.int64)
    for i, k in enumerate(key(coarse_space.coords)):
        j = fine_keys.get(tuple(k))
        if j is None:
            raise MeshMismatchError(f"coarse dof at {coarse_space.coords[i]} has no fine counterpart")
        out[i] = j
    if np.max(np.abs(fine_space.coords[out] - coarse_space.coords)) > tol * scale:
        raise MeshMismatchError("dof locations do not coincide")
    return out


def comparison_groups(lc, lf, rel_gap: float = 1e-6) -> np.ndarray:
    """Group indices whose eigenvectors cannot be matched one to one.

    Neighbours are merged when their coarse gap is below ``rel_gap`` or
    below ten times the eigenvalue change between the two levels.
    """
    lc = np.asarray(lc)
    lf = np.asarray(lf)
    n = min(len(lc), len(lf))
    lc, lf = lc[:n], lf[:n]
    shift = np.abs(lc - lf)
    gaps = np.diff(lc)
    thresh = np.maximum(rel_gap * np.abs(lc[1:]), 10.0 * np.maximum(shift[1:], shift[:-1]))
    return np.concatenate([[0], np.cumsum(gaps > thresh)]).astype(np.int64)


def l2_differences(coarse: EigenRun, fine: EigenRun, count: int, rel_gap: float = 1e-6) -> np.ndarray:
    """Per-index ``||u_coarse - P u_fine||_L2`` for the first ``count`` modes.

    ``P`` restricts the fine function to the coarse dofs, which is exact
    interpolation because the meshes are nested.  Eigenvector signs are
    aligned through the mass inner product; inside a group of
    indistinguishable modes the distance of each interpolated fine vector to
    the coarse subspace is used instead.
    """
    n = min(len(coarse.pairs), len(fine.pairs))
    if count < 1 or count > n:
        raise InvalidParameterError(f"count {count} exceeds the available modes ({n})")
    dmap = nested_dof_map(coarse.space, fine.space)
    M = coarse.space.M
    Uc = np.column_stack([coarse.space.full_vector(p.coefficients) for p in coarse.pairs[:n]])
    Uf = np.column_stack([fine.space.full_vector(p.coefficients) for p in fine.pairs[:n]])[dmap]
    groups = comparison_groups(_lams(coarse), _lams(fine), rel_gap)
    out = np.empty(count)
    for g in np.unique(groups[:count]):
        idx = np.flatnonzero(groups == g)
        C, F = Uc[:, idx], Uf[:, idx]
        if idx.size == 1:
            s = math.copysign(1.0, float(C[:, 0] @ (M @ F[:, 0])))
            r = C[:, 0] - s * F[:, 0]
            d = np.array([math.sqrt(max(float(r @ (M @ r)), 0.0))])
        else:
            R = F - C @ (C.T @ (M @ F))
            d = np.sqrt(np.maximum(np.einsum("ij,ij->j", R, M @ R), 0.0))
        for k, i in enumerate(idx):
            if i < count:
                out[i] = d[k]
    return out


def l2_running_avg(coarse: EigenRun, fine: EigenRun, count: int, rel_gap: float = 1e-6) -> float:
    """Mean of :func:`l2_differences` over the first ``count`` modes."""
    return float(np.mean(l2_differences(coarse, fine, count, rel_gap)))


def compare(coarse: EigenRun, fine: EigenRun, count: int) -> ConvergenceReport:
    diffs = _lams(coarse)[:count] - _lams(fine)[:count]
    return ConvergenceReport(
        ndiv_coarse=coarse.mesh.ndiv,
        ndiv_fine=fine.mesh.ndiv,
        count=count,
        max_eigendiff=max_eigendiff(coarse, fine, count),
        l2_running_avg=l2_running_avg(coarse, fine, count),
        eigendiffs=diffs,
    )


def convergence_study(a, ndiv: int, levels: int = 3, order: int = 2, count: int = 100,
                      extra: int = 10):
    """Solve on ``levels`` nested meshes starting at ``ndiv`` and compare neighbours.

    Each level computes ``count + extra`` modes so that groups of close
    eigenvalues at the cut-off are complete.
    """
    if levels < 2:
        raise InvalidParameterError("a convergence study needs at least two levels")
    runs = [solve_run(a, ndiv, order, count + extra)]
    for _ in range(levels - 1):
        mesh = refine(runs[-1].mesh)
        runs.append(solve_run(runs[-1].triangle, mesh.ndiv, order, count + extra, mesh=mesh))
    reports = [compare(c, f, count) for c, f in zip(runs[:-1], runs[1:])]
    return runs, reports


def analytic_relative_errors(run: EigenRun, count: int, simple_only: bool = False):
    """Relative eigenvalue errors against the isosceles closed form.

    Returns ``(indices, errors)``; with ``simple_only`` only indices whose
    analytic eigenvalue is simple are kept.
    """
    if abs(run.triangle.a - 1.0) > 0:
        raise InvalidParameterError("closed-form eigenvalues exist only for a = 1")
    modes = enumerate_modes(count)
    exact = np.array([ev.lam for _, ev, _ in modes])
    ids = np.array([c for *_, c in modes])
    lams = _lams(run)[:count]
    err = (lams - exact) / exact
    idx = np.arange(count)
    if simple_only:
        uniq, cnt = np.unique(ids, return_counts=True)
        single = set(uniq[cnt == 1].tolist())
        # the last cluster may be truncated by count; require it to be closed
        full = enumerate_modes(count + 8)
        full_ids = np.array([c for *_, c in full])
        sizes = {c: int(np.sum(full_ids == c)) for c in single}
        idx = np.array([i for i in idx if ids[i] in single and sizes[ids[i]] == 1], dtype=np.int64)
    return idx, err[idx]


def write_convergence_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_HEADER)
        for r in reports:
            w.writerow([r.ndiv_coarse, r.ndiv_fine, r.count, repr(float(r.max_eigendiff)),
                        repr(float(r.l2_running_avg))])
