import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trispec.analytic import enumerate_modes
from trispec.errors import FormatError, InvalidParameterError
from trispec.handles import AnalyticEigenfunction
from trispec.metrics import analytic_metrics, column, prop_left
from trispec.stats import (
    read_exceedance_csv,
    read_summary_csv,
    running_average,
    running_percentage,
    stats_series,
    summarize,
    write_exceedance_csv,
    write_summary_csv,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


@pytest.fixture(scope="module")
def analytic_rows():
    return analytic_metrics(150)


def test_running_average_constant():
    assert np.all(running_average([0.3] * 9) == 0.3)


def test_running_average_alternating():
    a = running_average([0, 1] * 50)
    assert np.all(a[1::2] == 0.5)


def test_running_average_empty():
    with pytest.raises(InvalidParameterError):
        running_average([])


def test_running_average_of_prop_left():
    shares = [prop_left(AnalyticEigenfunction(m)) for m, _, _ in enumerate_modes(500)]
    assert abs(running_average(shares)[-1] - 0.5) <= 0.02


def test_running_percentage_at_center():
    assert np.all(running_percentage([0.5] * 10, 0.5, 0.01) == 0.0)


def test_running_percentage_by_hand():
    pct = running_percentage([0.5, 0.6, 0.5, 0.2], 0.5, 0.05)
    assert np.allclose(pct, [0, 50, 100 / 3, 50])


@pytest.mark.parametrize("eps", [0.0, -0.1])
def test_running_percentage_needs_positive_eps(eps):
    with pytest.raises(InvalidParameterError):
        running_percentage([0.5], 0.5, eps)


def test_analytic_y_volume_never_exceeds(analytic_rows):
    y = column(analytic_rows, "y_volume")
    for eps in (1e-3, 1e-2, 0.1):
        assert np.all(running_percentage(y, 0.5, eps) == 0.0)


def test_analytic_summary(analytic_rows):
    s = summarize(analytic_rows, ["y_volume", "x_volume"])
    assert s["y_volume"] == pytest.approx(0.5, abs=1e-12)
    assert summarize(analytic_rows, []) == {}


@settings(max_examples=80, deadline=None)
@given(v=st.lists(finite, min_size=1, max_size=60),
       e=st.lists(st.floats(1e-6, 1e3), min_size=2, max_size=2))
def test_exceedance_monotone_in_eps(v, e):
    lo, hi = sorted(e)
    assert np.all(running_percentage(v, 0.0, hi) <= running_percentage(v, 0.0, lo))


@settings(max_examples=80, deadline=None)
@given(v=st.lists(finite, min_size=1, max_size=60))
def test_running_average_stays_in_prefix_range(v):
    a = running_average(v)
    arr = np.asarray(v)
    lo, hi = np.minimum.accumulate(arr), np.maximum.accumulate(arr)
    tol = 1e-9 * (1 + np.abs(arr).max())
    assert np.all(a >= lo - tol) and np.all(a <= hi + tol)


def test_summary_equals_running_average(analytic_rows):
    for n in (1, 17, 150):
        s = summarize(analytic_rows, ["prop_left", "neumann_F3"], n)
        for name, mean in s.items():
            assert mean == pytest.approx(running_average(column(analytic_rows, name))[n - 1], abs=1e-12)


def test_summary_and_exceedance_round_trip(tmp_path, analytic_rows):
    summary = summarize(analytic_rows, ["x_volume", "prop_left"])
    p = tmp_path / "s.csv"
    write_summary_csv(p, 1.0, len(analytic_rows), summary)
    assert p.read_text().splitlines()[0] == "triangle_a,num_eigs,metric,mean"
    back = read_summary_csv(p)
    assert back == [(1.0, 150, k, v) for k, v in summary.items()]
    series = stats_series(column(analytic_rows, "prop_left"), 0.5, [0.01, 0.2])
    q = tmp_path / "e.csv"
    write_exceedance_csv(q, series)
    assert q.read_text().splitlines()[0] == "index,eps,percentage"
    ex = read_exceedance_csv(q)
    assert set(ex) == {0.01, 0.2}
    assert np.array_equal(ex[0.01], series.exceedance[0.01])


def test_readers_check_headers(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n")
    with pytest.raises(FormatError):
        read_summary_csv(p)
    with pytest.raises(FormatError):
        read_exceedance_csv(p)
