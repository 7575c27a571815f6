import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from trispec.analytic import (
    ModeIndex,
    asymptotic_Il_limit,
    enumerate_modes,
    eval_mode,
    eval_mode_laplacian,
    exact_Il,
    exact_Ir,
    square_mode_x_energy,
)
from trispec.errors import InvalidModeError, InvalidParameterError

from oracles import count_modes_below, quad_Il

pairs = st.tuples(st.integers(1, 60), st.integers(1, 60)).filter(lambda p: p[0] != p[1])


def test_first_mode():
    mode, ev, cluster = enumerate_modes(1)[0]
    assert (mode.m, mode.n) == (1, 2)
    assert ev.lam == pytest.approx(49.348, abs=1e-3)
    assert ev.lam == pytest.approx(5 * math.pi ** 2, rel=1e-15)
    assert ev.h == pytest.approx(ev.lam ** -0.5)
    assert cluster == 0


def test_accidental_degeneracy_shares_cluster():
    modes = enumerate_modes(30)
    ids = {(m.m, m.n): c for m, _, c in modes}
    assert ids[(1, 8)] == ids[(4, 7)]
    lam = {(m.m, m.n): ev.lam for m, ev, _ in modes}
    assert lam[(1, 8)] == lam[(4, 7)] == pytest.approx(65 * math.pi ** 2)


def test_eigenvalues_nondecreasing():
    lams = [ev.lam for _, ev, _ in enumerate_modes(10)]
    assert all(b >= a for a, b in zip(lams, lams[1:]))


@pytest.mark.parametrize("count", [1, 7, 50, 333, 1250])
def test_enumeration_is_exhaustive(count):
    modes = enumerate_modes(count)
    assert len(modes) == count
    top = modes[-1][0]
    bound = top.m ** 2 + top.n ** 2
    # everything strictly below the last eigenvalue must be present
    assert count_modes_below(bound - 1) <= count <= count_modes_below(bound)
    assert all(m.m < m.n for m, _, _ in modes)
    assert len({(m.m, m.n) for m, _, _ in modes}) == count


def test_cluster_ids_group_equal_eigenvalues():
    modes = enumerate_modes(400)
    for (m1, e1, c1), (m2, e2, c2) in zip(modes, modes[1:]):
        assert (c1 == c2) == (m1.m ** 2 + m1.n ** 2 == m2.m ** 2 + m2.n ** 2)


def test_mode_validation():
    with pytest.raises(InvalidModeError):
        ModeIndex(3, 3, 2.0, 2.0)
    with pytest.raises(InvalidModeError):
        ModeIndex(1, 2, 2.0, -2.0)  # opposite parity needs equal signs
    with pytest.raises(InvalidModeError):
        ModeIndex(1, 3, 1.0, -1.0)
    assert ModeIndex.canonical(1, 3).d == -2.0
    assert ModeIndex.canonical(2, 5).d == 2.0


@pytest.mark.parametrize("mn", [(1, 2), (3, 7), (10, 11), (17, 40)])
def test_dirichlet_on_every_side(mn):
    mode = ModeIndex.canonical(*mn)
    s = np.linspace(0.0, 1.0, 1000)
    for x, y in ((np.zeros_like(s), s), (s, np.zeros_like(s)), (s, 1.0 - s)):
        u, _ = eval_mode(mode, x, y)
        assert np.max(np.abs(u)) <= 1e-12


def test_against_symbolic_derivatives():
    x, y = sp.symbols("x y")
    for m, n in [(1, 2), (2, 5), (3, 5)]:
        mode = ModeIndex.canonical(m, n)
        expr = mode.c * sp.sin(n * sp.pi * x) * sp.sin(m * sp.pi * y) + mode.d * sp.sin(m * sp.pi * x) * sp.sin(n * sp.pi * y)
        funcs = [sp.lambdify((x, y), e, "numpy") for e in (
            expr, sp.diff(expr, x), sp.diff(expr, y), sp.diff(expr, x, 2) + sp.diff(expr, y, 2))]
        px, py = 0.23, 0.41
        u, (ux, uy) = eval_mode(mode, px, py)
        lap = eval_mode_laplacian(mode, px, py)
        assert np.allclose([u, ux, uy, lap], [f(px, py) for f in funcs], rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(mn=pairs, s=st.floats(0.01, 0.99), t=st.floats(0.01, 0.99))
def test_eigen_equation_residual(mn, s, t):
    m, n = sorted(mn)
    mode = ModeIndex.canonical(m, n)
    x, y = s * (1 - t), t * (1 - 0.0)
    y = min(y, 1 - x)
    u, _ = eval_mode(mode, x, y)
    lam = mode.eigenvalue.lam
    assert abs(-eval_mode_laplacian(mode, x, y) - lam * u) <= 1e-9 * lam


@settings(max_examples=60, deadline=None)
@given(mn=pairs, x=st.floats(0, 1), y=st.floats(0, 1))
def test_swap_symmetry(mn, x, y):
    m, n = sorted(mn)
    mode = ModeIndex.canonical(m, n)
    sign = -1.0 if (m - n) % 2 == 0 else 1.0
    u, (ux, uy) = eval_mode(mode, x, y)
    v, (vx, vy) = eval_mode(mode, y, x)
    assert v == pytest.approx(sign * u, abs=1e-11)
    assert vx == pytest.approx(sign * uy, abs=1e-9 * (m + n))


def test_Il_parity_case_is_half():
    assert exact_Il((1, 3)) == 0.5
    assert exact_Il(ModeIndex.canonical(4, 10)) == 0.5


def test_Il_lowest_mode_matches_quadrature():
    value = exact_Il((1, 2))
    oracle, total = quad_Il(1, 2)
    assert value == pytest.approx(0.83953, abs=5e-6)
    assert value == pytest.approx(0.5 + 16 / (15 * math.pi), abs=1e-15)
    assert abs(value - oracle) <= 1e-12
    assert total == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("mn", [(2, 3), (5, 12), (13, 30), (1, 28)])
def test_Il_matches_quadrature(mn):
    assert abs(exact_Il(mn) - quad_Il(*mn)[0]) <= 1e-9


def test_Il_subsequence_limit():
    assert abs(exact_Il((200, 201)) - 0.81831) <= 5e-3


def test_Il_equal_indices_rejected():
    with pytest.raises(InvalidModeError):
        exact_Il((4, 4))


@settings(max_examples=200, deadline=None)
@given(mn=pairs)
def test_Il_swap_and_complement(mn):
    m, n = mn
    assert exact_Il((m, n)) == exact_Il((n, m))
    assert exact_Il((m, n)) + exact_Ir((m, n)) == 1.0
    assert 0.0 <= exact_Il((m, n)) <= 1.0


def test_asymptotic_limits():
    assert asymptotic_Il_limit(1) == pytest.approx(0.81831, abs=5e-6)
    assert asymptotic_Il_limit(3) == pytest.approx(0.39390, abs=5e-6)
    assert asymptotic_Il_limit(5) == pytest.approx(0.56366, abs=5e-6)


@pytest.mark.parametrize("j", [3, 5])
def test_asymptotic_limit_is_approached(j):
    errs = [abs(exact_Il((m, m + j)) - asymptotic_Il_limit(j)) for m in (20, 50, 100, 200, 500)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 2e-3


@pytest.mark.parametrize("j", [0, 2, 4, -1, 1.5])
def test_asymptotic_limit_needs_odd_j(j):
    with pytest.raises(InvalidParameterError):
        asymptotic_Il_limit(j)


def test_square_mode_energy():
    assert square_mode_x_energy(1, 1) == 0.5
    for big in (3, 10, 100):
        val = square_mode_x_energy(1, big)
        assert val <= big ** -2 and val < 1 / 8
    assert square_mode_x_energy(2, 3) + square_mode_x_energy(3, 2) == pytest.approx(1.0)
    with pytest.raises(InvalidParameterError):
        square_mode_x_energy(0, 2)
