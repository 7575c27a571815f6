"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the
"acceptance criteria" section of the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from trispec import cli
from trispec.analytic import asymptotic_Il_limit, enumerate_modes, exact_Il
from trispec.convergence import analytic_relative_errors, convergence_study
from trispec.domain import SideTag
from trispec.handles import AnalyticEigenfunction, FemEigenfunction
from trispec.metrics import (
    CutoffSpec,
    analytic_metrics,
    column,
    rellich_cutoff_check,
    side_neumann,
    volume_energy,
    weighted_boundary,
)
from trispec.stats import running_percentage, summarize

from conftest import A_3060, cached_metrics, cached_run, record_criterion
from oracles import quad_Il

CAMPAIGN = 300


def test_criterion_01_closed_form_against_quadrature():
    t0 = time.perf_counter()
    worst = 0.0
    pairs = [(m, n) for n in range(2, 31) for m in range(1, n)]
    for m, n in pairs:
        worst = max(worst, abs(exact_Il((m, n)) - quad_Il(m, n)[0]))
    elapsed = time.perf_counter() - t0
    ok = len(pairs) == 435 and worst <= 1e-9 and elapsed < 60
    record_criterion(1, ok, f"max |I_l - oracle| = {worst:.2e} over {len(pairs)} pairs in {elapsed:.1f}s")
    assert ok


def test_criterion_02_subsequence_limit():
    target = 0.81831
    e200 = abs(exact_Il((200, 201)) - target)
    e1000 = abs(exact_Il((1000, 1001)) - target)
    ok = e200 <= 5e-3 and e1000 <= 1e-3
    record_criterion(2, ok, f"|I_l(200,201) - .81831| = {e200:.2e}, |I_l(1000,1001) - .81831| = {e1000:.2e}")
    assert ok


def test_criterion_03_mod_four_law():
    details, ok = [], True
    for j in (1, 3, 5, 7):
        value = exact_Il((500, 500 + j))
        limit = 0.5 * (1 + (1 if j % 4 == 1 else -1) * 2 / (j * math.pi))
        same_sign = np.sign(value - 0.5) == np.sign(limit - 0.5)
        ok &= abs(value - limit) <= 2e-3 and bool(same_sign) and limit == pytest.approx(asymptotic_Il_limit(j))
        details.append(f"j={j}: {abs(value - limit):.1e}")
    record_criterion(3, ok, ", ".join(details))
    assert ok


def test_criterion_04_parity_law():
    even = [(m, n) for n in range(2, 31) for m in range(1, n) if (m + n) % 2 == 0]
    worst = max(abs(exact_Il(p) - 0.5) for p in even)
    ok = worst <= np.finfo(float).eps
    record_criterion(4, ok, f"max |I_l - 1/2| = {worst:.1e} over {len(even)} even pairs")
    assert ok


def test_criterion_05_analytic_side_law_and_symmetry():
    rows = analytic_metrics(100)
    side_err = max(
        np.max(np.abs(column(rows, "neumann_F1") - 2.0)),
        np.max(np.abs(column(rows, "neumann_F2") - 2.0)),
        np.max(np.abs(column(rows, "neumann_F3") - 2 * math.sqrt(2))),
    )
    vol_err = max(np.max(np.abs(column(rows, "x_volume") - 0.5)), np.max(np.abs(column(rows, "y_volume") - 0.5)))
    ok = side_err <= 1e-8 and vol_err <= 1e-9
    record_criterion(5, ok, f"side error {side_err:.1e}, volume error {vol_err:.1e} (100 modes)")
    assert ok


def test_criterion_06_fem_eigenvalues():
    t0 = time.perf_counter()
    run = cached_run(1.0, 64, 2, 50)
    elapsed = time.perf_counter() - t0
    _, err = analytic_relative_errors(run, 20)
    exact = np.array([ev.lam for _, ev, _ in enumerate_modes(50)])
    upper = bool(np.all(run.lams >= exact))
    ok = np.max(np.abs(err)) <= 1e-3 and upper and elapsed <= 120
    record_criterion(6, ok, f"max relative error {np.max(np.abs(err)):.2e} (first 20), "
                            f"upper bound holds: {upper}, solve {elapsed:.1f}s")
    assert ok


def _worst_side_error(a, ndiv):
    run = cached_run(a, ndiv, 2, 50)
    tri = run.triangle
    worst = 0.0
    for p in run.pairs[:50]:
        u = FemEigenfunction(p, run.space)
        for side in SideTag:
            target = tri.side_length(side) / tri.area
            worst = max(worst, abs(side_neumann(u, side) - target) / target)
    return worst


def test_criterion_07_fem_side_law():
    details, ok = [], True
    for a in (1.0, 0.99, 0.58):
        coarse, fine = _worst_side_error(a, 64), _worst_side_error(a, 128)
        ok &= coarse <= 0.02 and fine < coarse
        details.append(f"a={a}: {100 * coarse:.2f}% -> {100 * fine:.2f}%")
    record_criterion(7, ok, "worst side error ndiv 64 -> 128: " + ", ".join(details))
    assert ok


def test_criterion_08_rellich_identities():
    spec = CutoffSpec(0.5, 0.1, 1.0)
    ks = (10, 20, 40, 80)
    id_err, rec_err, res, hs = [], [], [], []
    for k in ks:
        u = AnalyticEigenfunction((k, k + 1))
        ex = volume_energy(u, "x")
        id_err.append(abs(weighted_boundary(u, "x") - 2 * ex) / (2 * ex))
        rec_err.append(abs(1.0 - 0.5 * u.triangle.a * weighted_boundary(u, "1-x/a") - ex))
        res.append(abs(rellich_cutoff_check(u, spec)[2]))
        hs.append(u.h)
    C = max(r / h for r, h in zip(res, hs))
    decreasing = all(b < a for a, b in zip(res, res[1:]))
    ok = max(id_err) <= 0.01 and max(rec_err) <= 1e-8 and decreasing and C <= 3.0
    record_criterion(8, ok, f"(i) {max(id_err):.1e} rel, (ii) {max(rec_err):.1e}, "
                            f"(iii) residuals {', '.join(f'{r:.4f}' for r in res)} <= {C:.2f} h")
    assert ok


@pytest.fixture(scope="module")
def campaign():
    t0 = time.perf_counter()
    near = cached_metrics(0.99, 64, 2, CAMPAIGN)
    third = cached_metrics(A_3060, 64, 2, CAMPAIGN)
    return near, third, time.perf_counter() - t0


def test_criterion_09_statistics(campaign):
    near, third, elapsed = campaign
    mean = summarize(near, ["y_volume"])["y_volume"]
    pct_near = running_percentage(column(near, "y_volume"), 0.5, 0.01)[-1]
    pct_third = running_percentage(column(third, "y_volume"), 0.5, 0.01)[-1]
    checks = {
        "mean": abs(mean - 0.5) <= 0.01,
        "exceedance": pct_near >= 60.0,
        "30-60-90": pct_third < 0.5 * pct_near,
        "runtime": elapsed <= 900,
    }
    ok = all(checks.values())
    record_criterion(9, ok, f"y_volume mean {mean:.5f}; exceedance(.01) a=0.99 {pct_near:.2f}% "
                            f"(target >= 60), 30-60-90 {pct_third:.2f}%; {elapsed:.0f}s; "
                            f"failing: {[k for k, v in checks.items() if not v] or 'none'}")
    assert ok


def test_criterion_10_seven_eighths_observation():
    details, ok = [], True
    for a in (0.99, 0.58):
        xv = column(cached_metrics(a, 64, 2, CAMPAIGN), "x_volume")
        frac = float(np.mean(xv > 7 / 8 + 0.01))
        ok &= frac <= 0.05
        details.append(f"a={a}: {100 * frac:.2f}% (max x_volume {xv.max():.4f})")
    record_criterion(10, ok, "modes with x_volume > 7/8 + .01: " + ", ".join(details))
    assert ok


def test_criterion_11_convergence_harness():
    _, reports = convergence_study(0.99, 16, levels=3, order=2, count=100)
    diffs = [r.max_eigendiff for r in reports]
    l2 = [r.l2_running_avg for r in reports]
    # first 20 simple modes of the isosceles triangle
    simple, _ = analytic_relative_errors(cached_run(1.0, 16, 2, 50), 40, simple_only=True)
    simple = simple[:20]
    errs = []
    for ndiv in (16, 32, 64):
        idx, e = analytic_relative_errors(cached_run(1.0, ndiv, 2, 50), 40)
        errs.append(e[simple])
    ratios = np.concatenate([errs[0] / errs[1], errs[1] / errs[2]])
    ok = diffs[1] < diffs[0] and l2[1] < l2[0] and len(simple) == 20 and ratios.min() >= 8
    record_criterion(11, ok, f"max_eigendiff {diffs[0]:.4g} -> {diffs[1]:.4g}, l2 avg {l2[0]:.4g} -> {l2[1]:.4g}, "
                             f"min error ratio {ratios.min():.2f} on 20 simple modes")
    assert ok


def test_criterion_12_determinism(tmp_path):
    names = ("r.eig", "metrics.csv", "ex.csv", "ex_summary.csv", "conv.csv", "analytic.csv",
             "report/summary.csv", "report/exceedance.csv")
    outputs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        steps = [
            ["solve", "--a", "0.99", "--ndiv", "32", "--count", "60", "--out", d / "r.eig"],
            ["metrics", "--in", d / "r.eig", "--out", d / "metrics.csv"],
            ["stats", "--in", d / "metrics.csv", "--a", "0.99", "--eps", "0.01,0.05", "--out", d / "ex.csv"],
            ["converge", "--a", "0.99", "--ndiv", "8", "--count", "30", "--out", d / "conv.csv"],
            ["analytic", "--count", "40", "--out", d / "analytic.csv"],
            ["report", "--in", d / "metrics.csv", "--a", "0.99", "--out", d / "report"],
        ]
        for argv in steps:
            assert cli.main([str(x) for x in argv]) == 0
        outputs.append([(d / n).read_bytes() for n in names])
    same = [a == b for a, b in zip(*outputs)]
    ok = all(same)
    record_criterion(12, ok, f"{sum(same)}/{len(same)} artifacts byte-identical across two runs")
    assert ok
