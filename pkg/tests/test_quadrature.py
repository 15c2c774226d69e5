import math

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from bhlab.errors import QuadratureError
from bhlab.quadrature import adaptive_simpson

x = sp.Symbol("x")


@given(coeffs=st.lists(st.integers(-5, 5), min_size=1, max_size=7),
       a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_polynomials_against_symbolic_integral(coeffs, a, b):
    poly = sum(c * x ** k for k, c in enumerate(coeffs))
    f = sp.lambdify(x, poly)
    exact = float(sp.integrate(poly, (x, sp.Float(a, 30), sp.Float(b, 30))))
    res = adaptive_simpson(lambda t: float(f(t)), a, b, tol=1e-11)
    assert res.value == pytest.approx(exact, rel=1e-9, abs=1e-9)


def test_smooth_integrand_meets_tolerance():
    res = adaptive_simpson(math.exp, 0.0, 1.0, tol=1e-12)
    assert abs(res.value - (math.e - 1.0)) < 1e-11
    assert res.error < 1e-11


def test_reversed_and_empty_intervals():
    assert adaptive_simpson(math.sin, 1.0, 1.0).value == 0.0
    fwd = adaptive_simpson(math.sin, 0.0, 2.0).value
    assert adaptive_simpson(math.sin, 2.0, 0.0).value == pytest.approx(-fwd, rel=1e-14)


def test_interval_cap_raises_with_partial_value():
    with pytest.raises(QuadratureError) as info:
        adaptive_simpson(lambda t: math.sin(1.0 / t), 1e-6, 1.0, tol=1e-14, max_intervals=64)
    assert math.isfinite(info.value.value)
    assert info.value.achieved > 0


def test_rounding_floor_stops_refinement_on_large_values():
    # a relative-size tolerance far below rounding must not exhaust the cap
    res = adaptive_simpson(lambda t: 1e6 * t ** 4, -4.0, 4.0, tol=1e-14, max_intervals=4096)
    assert res.value == pytest.approx(1e6 * 2 * 4 ** 5 / 5, rel=1e-13)
