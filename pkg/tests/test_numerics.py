import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp, mpf

from opxlab.errors import IndexOutOfStencil, NonConvergence, PrecisionExhausted
from opxlab.numerics import (
    GridFunction,
    central_derivative,
    default_digits,
    grid_step,
    precision_ladder,
    sum_series,
    to_mpf,
    uniform_grid,
)
from opxlab.weights import freud, leading_determinants, moment_table, quadrature_moment

DIGITS = 120
H = grid_step(DIGITS)


def grid_function(fn, center, step=H, points=5):
    grid = uniform_grid(to_mpf(center), step, points)
    return GridFunction(grid, tuple(fn(t) for t in grid))


# -- sum_series -------------------------------------------------------------

def test_geometric_series():
    with mp.workdps(40):
        assert abs(sum_series(lambda k: mpf(1) / 2 ** k, mpf("1e-30")) - 2) < mpf("1e-29")


def test_exponential_series():
    with mp.workdps(40):
        assert abs(sum_series(lambda k: 1 / mpmath.factorial(k), mpf("1e-30")) - mpmath.e) < mpf("1e-29")


def test_bessel_series_against_quadrature():
    # sum 1/(k!)^2 = I_0(2) = (1/pi) int_0^pi exp(2 cos theta) dtheta
    with mp.workdps(50):
        series = sum_series(lambda k: 1 / (mpmath.factorial(k) * mpmath.rf(1, k)), mpf("1e-45"))
        oracle = mpmath.quad(lambda th: mpmath.exp(2 * mpmath.cos(th)), [0, mpmath.pi]) / mpmath.pi
        assert abs(series - oracle) < mpf("1e-40")


def test_sum_series_non_convergence():
    with mp.workdps(20):
        with pytest.raises(NonConvergence):
            sum_series(lambda k: mpf(1), mpf("1e-10"), max_index=50)


@given(st.fractions(min_value=0.05, max_value=0.9).map(lambda q: mpf(q.numerator) / q.denominator))
def test_sum_series_independent_of_cap(ratio):
    with mp.workdps(40):
        tol = mpf("1e-30")
        small = sum_series(lambda k: ratio ** k, tol, max_index=10 ** 4)
        large = sum_series(lambda k: ratio ** k, tol, max_index=2 * 10 ** 4)
        assert abs(small - large) <= tol * abs(large)


def test_series_stops_only_after_three_small_terms():
    # the term at index 1 is tiny but later terms are not
    def term(k):
        return mpf(1) if k != 1 else mpf("1e-50")
    with mp.workdps(30):
        with pytest.raises(NonConvergence):
            sum_series(term, mpf("1e-20"), max_index=30)


# -- central_derivative -----------------------------------------------------

def test_derivative_of_square():
    with mp.workdps(DIGITS):
        f = grid_function(lambda t: t ** 2, 1)
        assert abs(central_derivative(f, 1, 2) - 2) <= 10 * H ** 4


def test_second_derivative_of_constant_is_exact():
    with mp.workdps(DIGITS):
        f = grid_function(lambda t: mpf(7), "0.3")
        assert central_derivative(f, 2, 2) == 0


def test_second_derivative_of_exponential():
    with mp.workdps(DIGITS):
        f = grid_function(mpmath.exp, 0)
        assert abs(central_derivative(f, 2, 2) - 1) <= 10 * H ** 4


def test_stencil_bounds():
    with mp.workdps(30):
        f = grid_function(mpmath.exp, 0, step=mpf("0.01"), points=7)
        with pytest.raises(IndexOutOfStencil):
            central_derivative(f, 1, 1)
        with pytest.raises(IndexOutOfStencil):
            central_derivative(f, 2, 5)
        central_derivative(f, 1, 4)


coefficient = st.integers(-10 ** 6, 10 ** 6).map(lambda k: mpf(k) / 1000)


@given(st.lists(coefficient, min_size=5, max_size=5), st.integers(-20, 20))
def test_quartic_first_derivative_is_exact(coeffs, center):
    with mp.workdps(60):
        step = mpf("0.125")
        poly = lambda t: mpmath.polyval(coeffs[::-1], t)  # noqa: E731
        f = grid_function(poly, mpf(center) / 4, step=step)
        exact = mpmath.polyval([k * c for k, c in enumerate(coeffs)][1:][::-1], f.grid[2])
        assert abs(central_derivative(f, 1, 2) - exact) <= mpf(10) ** -50 * (1 + abs(exact))


@given(st.integers(-5, 5))
def test_fourth_order_error_scaling(center):
    # halving h shrinks the error by about 16
    with mp.workdps(60):
        c = mpf(center) / 10
        e1 = abs(central_derivative(grid_function(mpmath.sin, c, mpf("0.01")), 1, 2) - mpmath.cos(c))
        e2 = abs(central_derivative(grid_function(mpmath.sin, c, mpf("0.005")), 1, 2) - mpmath.cos(c))
        if e1 > mpf(10) ** -40:
            assert 12 < e1 / e2 < 20


def test_grid_function_invariants():
    with mp.workdps(30):
        with pytest.raises(ValueError):
            GridFunction((mpf(0), mpf(1), mpf(2), mpf(3)), (mpf(0),) * 4)
        with pytest.raises(ValueError):
            GridFunction(tuple(mpf(x) for x in (0, 1, 2, 3, 5)), (mpf(0),) * 5)
        with pytest.raises(ValueError):
            GridFunction(tuple(mpf(x) for x in (4, 3, 2, 1, 0)), (mpf(0),) * 5)
        with pytest.raises(ValueError):
            uniform_grid(0, mpf("0.1"), 6)


def test_grid_step_rule():
    assert grid_step(120) == mpf(10) ** -20


def test_to_mpf_avoids_binary_contamination():
    with mp.workdps(50):
        assert to_mpf("0.1") == mpf(1) / 10
        assert to_mpf(0.1) == mpf(1) / 10


def test_default_digits_env(monkeypatch):
    assert default_digits() == 120
    monkeypatch.setenv("OPXLAB_PRECISION", "64")
    assert default_digits() == 64


# -- precision_ladder -------------------------------------------------------

def test_ladder_exact_rational():
    cert = precision_ladder(lambda p: mpf(1) / 3, 40)
    assert cert.certified_digits >= 39


def test_ladder_escalates_for_hankel_determinant():
    spec = freud("0")

    def det10(p):
        return leading_determinants(moment_table(spec, 10, p, validate=False), 10)[10]

    cert = precision_ladder(det10, 40, digits=38)
    assert cert.precision > 80
    with mp.workdps(160):
        assert abs(cert.value / det10(160) - 1) < mpf(10) ** -cert.certified_digits


def test_ladder_matches_quadrature_oracle():
    spec = freud("0")
    cert = precision_ladder(lambda p: moment_table(spec, 1, p).entries[0], 40)
    with mp.workdps(60):
        oracle = quadrature_moment(spec, 0, 50)
        assert abs(cert.value - oracle) < mpf(10) ** -min(cert.certified_digits, 45)
        assert abs(cert.value - 2 * mpmath.gamma(mpf(5) / 4)) < mpf(10) ** -38


def test_ladder_monotone_in_p0():
    def third(p):
        # a computation whose error is 10^(-p/2)
        return mpf(1) / 3 + mpf(10) ** -(p // 2)
    results = [precision_ladder(third, p0, digits=10).certified_digits for p0 in (40, 80, 160)]
    assert results == sorted(results)
    assert results[0] < results[-1]


def test_ladder_cap():
    with pytest.raises(PrecisionExhausted):
        precision_ladder(lambda p: mpf(p), 40, digits=30, cap=400)
