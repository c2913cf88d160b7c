import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltv_gpebo.numerics import (
    ContractError,
    IntegrationError,
    frobenius_norm,
    grid_steps,
    integrate,
    rk4_step,
    sym_eig_bounds,
)


def decay(t, x):
    return -x


def test_rk4_single_step_exponential():
    x = rk4_step(decay, 0.0, np.array([1.0]), 0.1)
    # 1 - h + h^2/2 - h^3/6 + h^4/24 at h = 0.1
    assert x[0] == pytest.approx(0.9048375, abs=1e-12)
    assert abs(x[0] - math.exp(-0.1)) == pytest.approx(8.196e-8, rel=1e-3)


@pytest.mark.parametrize("t,h", [(0.0, 0.1), (3.7, 1e-3), (-2.0, 5.0)])
def test_rk4_zero_field_is_identity(t, h):
    c = np.array([1.5, -2.0, 0.25])
    assert np.array_equal(rk4_step(lambda t, x: np.zeros_like(x), t, c, h), c)


def test_rk4_harmonic_oscillator():
    A = np.array([[0.0, 1.0], [-9.0, 0.0]])
    _, xs = integrate(lambda t, x: A @ x, [1.0, 0.0], 1.0, 1e-3)
    assert np.allclose(xs[-1], [math.cos(3), -3 * math.sin(3)], rtol=0, atol=1e-8)


def test_rk4_observed_order():
    errs = []
    for h in (0.1, 0.05, 0.025, 0.0125):
        _, xs = integrate(decay, [1.0], 1.0, h)
        errs.append(abs(xs[-1, 0] - math.exp(-1.0)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(14 <= r <= 18 for r in ratios), ratios


def test_rk4_does_not_touch_input():
    x = np.array([1.0, 2.0])
    before = x.copy()
    rk4_step(decay, 0.0, x, 0.1)
    assert np.array_equal(x, before)


def test_rk4_reports_time_and_index():
    def field(t, x):
        d = np.zeros_like(x)
        if t > 0.15:
            d[1] = np.nan
        return d

    with pytest.raises(IntegrationError) as info:
        integrate(field, [0.0, 0.0, 0.0], 1.0, 0.1)
    assert info.value.index == 1
    assert info.value.t == pytest.approx(0.15)


def test_rk4_rejects_nonpositive_step():
    with pytest.raises(ContractError):
        rk4_step(decay, 0.0, np.ones(1), 0.0)


def test_integrate_grid_is_k_times_h():
    t, xs = integrate(decay, [1.0], 0.3, 0.1)
    assert np.array_equal(t, np.arange(4) * 0.1)
    assert xs.shape == (4, 1)


@pytest.mark.parametrize("T,h", [(1.0, 0.3), (0.0, 0.1), (1.0, -0.1), (0.1, 0.2)])
def test_grid_steps_rejects(T, h):
    with pytest.raises(ContractError):
        grid_steps(T, h)


def test_grid_steps_tolerates_rounding():
    assert grid_steps(30.0, 1e-3) == 30000
    assert grid_steps(0.3, 0.1) == 3


@pytest.mark.parametrize(
    "m,expected",
    [(np.eye(3), (1.0, 1.0)), (np.diag([2.0, 5.0]), (2.0, 5.0)), ([[2.0, 1.0], [1.0, 2.0]], (1.0, 3.0))],
)
def test_sym_eig_bounds_examples(m, expected):
    lo, hi = sym_eig_bounds(m)
    assert lo == pytest.approx(expected[0], abs=1e-14)
    assert hi == pytest.approx(expected[1], abs=1e-14)


def test_sym_eig_bounds_scalar():
    assert sym_eig_bounds([[4.0]]) == (4.0, 4.0)


def test_sym_eig_bounds_rejects_nonsymmetric():
    with pytest.raises(ContractError):
        sym_eig_bounds([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ContractError):
        sym_eig_bounds(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
)
def test_sym_eig_bounds_matches_eigvalsh(n, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = rng.uniform(-10, 10, n)
    m = Q.T @ np.diag(d) @ Q
    m = 0.5 * (m + m.T)
    lo, hi = sym_eig_bounds(m)
    ref = np.linalg.eigvalsh(m)
    assert lo == pytest.approx(ref[0], abs=1e-8)
    assert hi == pytest.approx(ref[-1], abs=1e-8)


def test_sym_eig_bounds_small_eigenvalue_relative_accuracy():
    # spread of six decades: the small eigenvalue keeps relative accuracy
    Q = np.array([[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]])
    m = Q @ np.diag([1e6, 1.0]) @ Q.T
    lo, hi = sym_eig_bounds(m)
    assert lo == pytest.approx(1.0, rel=1e-9)
    assert hi == pytest.approx(1e6, rel=1e-12)


@pytest.mark.parametrize(
    "m,expected",
    [(np.zeros((2, 2)), 0.0), (np.eye(2), math.sqrt(2)), ([[3.0, 4.0], [0.0, 0.0]], 5.0)],
)
def test_frobenius_norm_examples(m, expected):
    assert frobenius_norm(m) == pytest.approx(expected, abs=1e-15)
