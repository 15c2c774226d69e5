import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from bhlab.calculus import (PAIRS, burgers_flux, burgers_pair, comparability_constants,
                            exponential_flux, get_pair, quartic_entropy_pair, quartic_flux,
                            quartic_flux_pair, relative_entropy, relative_entropy_d1,
                            relative_entropy_flux, relative_flux, shock_speed, sigma_c1_check,
                            sigma_partial_v, validate_pair)
from bhlab.errors import DomainError, PreconditionError

u, v = sp.symbols("u v", real=True)
states = st.floats(-4, 4, allow_nan=False)


def sym_pair(A, eta):
    """Entropy flux by symbolic integration of ``A' eta'`` from 0."""
    s = sp.Symbol("s", real=True)
    q = sp.integrate((sp.diff(A, u) * sp.diff(eta, u)).subs(u, s), (s, 0, u))
    return A, eta, q


SYMBOLIC = {
    "burgers-quadratic": sym_pair(u ** 2 / 2, u ** 2 / 2),
    "burgers-quartic": sym_pair(u ** 2 / 2, u ** 4),
    "quartic-quadratic": sym_pair(u ** 4, u ** 2 / 2),
}


def sym_relatives(name, a, b):
    A, eta, q = SYMBOLIC[name]
    at = lambda f, x: f.subs(u, x)
    d = lambda f: sp.diff(f, u)
    rel_eta = at(eta, a) - at(eta, b) - at(d(eta), b) * (a - b)
    rel_q = at(q, a) - at(q, b) - at(d(eta), b) * (at(A, a) - at(A, b))
    rel_A = at(A, a) - at(A, b) - at(d(A), b) * (a - b)
    rel_d1 = at(d(eta), a) - at(d(eta), b) - at(d(d(eta)), b) * (a - b)
    return [float(sp.nsimplify(x)) if x.is_Rational else float(x)
            for x in (rel_eta, rel_q, rel_A, rel_d1)]


# -- worked values ----------------------------------------------------------

def test_quadratic_relative_entropy_value():
    assert relative_entropy(burgers_pair(), 3.0, 1.0) == 2.0


def test_quartic_relative_entropy_against_symbolic():
    expected = sym_relatives("burgers-quartic", sp.Integer(1), sp.Integer(0))[0]
    assert relative_entropy(quartic_entropy_pair(), 1.0, 0.0) == pytest.approx(expected)
    assert expected == 1.0


@pytest.mark.parametrize("a,b,expected", [(1, 0, sp.Rational(1, 3)), (0, 1, sp.Rational(1, 6))])
def test_burgers_relative_entropy_flux(a, b, expected):
    oracle = sym_relatives("burgers-quadratic", sp.Integer(a), sp.Integer(b))[1]
    assert oracle == pytest.approx(float(expected), abs=1e-15)
    assert relative_entropy_flux(burgers_pair(), float(a), float(b)) == pytest.approx(oracle, abs=1e-15)


def test_relative_entropy_flux_vanishes_on_diagonal():
    assert relative_entropy_flux(burgers_pair(), 0.7, 0.7) == 0.0


def test_relative_flux_burgers():
    assert relative_flux(burgers_flux(), 2.0, 0.0) == 2.0


def test_quadratic_entropy_has_zero_relative_derivative():
    pts = np.linspace(-3, 3, 13)
    assert np.all(relative_entropy_d1(burgers_pair(), pts, pts[::-1]) == 0.0)


def test_quartic_relative_derivative_against_symbolic():
    expected = sym_relatives("burgers-quartic", sp.Integer(1), sp.Rational(1, 2))[3]
    assert relative_entropy_d1(quartic_entropy_pair(), 1.0, 0.5) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("flux,a,b,expected", [
    (burgers_flux(), 0.0, 2.0, 1.0),
    (burgers_flux(), 1.3, 1.3, 1.3),
    (quartic_flux(), 1.0, -1.0, 0.0),
])
def test_shock_speed_values(flux, a, b, expected):
    assert shock_speed(flux, a, b) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("flux,x0,limit", [(burgers_flux(), 0.0, 0.5), (quartic_flux(), 1.0, 6.0)])
def test_sigma_derivative_limit(flux, x0, limit):
    rep = sigma_c1_check(flux, x0)
    assert rep.target == limit
    assert rep.passed
    assert np.all(rep.errors[:, -1] < 1e-3 * max(1.0, limit))


def test_quadratic_flux_sigma_derivative_constant():
    vals = [sigma_partial_v(burgers_flux(), a, b) for a, b in [(-3, 1), (0, 0.5), (2, 2)]]
    assert np.allclose(vals, 0.5, atol=1e-12)


def test_exponential_flux_sigma_order():
    for x0 in (-1.0, 0.0, 1.5):
        rep = sigma_c1_check(exponential_flux(), x0)
        assert rep.passed and np.all(rep.orders >= 0.9)


# -- symbolic oracle over random points ---------------------------------------

@pytest.mark.parametrize("name", sorted(SYMBOLIC))
@given(a=states, b=states)
def test_relative_quantities_match_symbolic(name, a, b):
    pair = get_pair(name, 8.0)
    expected = sym_relatives(name, sp.Float(a, 30), sp.Float(b, 30))
    got = [relative_entropy(pair, a, b), relative_entropy_flux(pair, a, b),
           relative_flux(pair, a, b), relative_entropy_d1(pair, a, b)]
    scale = 1.0 + abs(a) ** 5 + abs(b) ** 5
    assert np.allclose(got, expected, rtol=1e-10, atol=1e-12 * scale)


# -- properties ---------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(PAIRS))
@given(a=states, b=states)
def test_relative_entropy_nonnegative_and_zero_on_diagonal(name, a, b):
    pair = get_pair(name, 8.0)
    assert relative_entropy(pair, a, b) >= -1e-12 * (1 + a ** 4 + b ** 4)
    assert relative_entropy(pair, a, a) == 0.0


@given(a=states, b=states)
def test_shock_speed_symmetric(a, b):
    for flux in (burgers_flux(), quartic_flux(), exponential_flux()):
        assert shock_speed(flux, a, b) == pytest.approx(shock_speed(flux, b, a), rel=1e-12, abs=1e-12)


@given(a=states, b=states)
def test_shock_speed_between_characteristic_speeds(a, b):
    flux = exponential_flux()
    lo, hi = sorted((flux.d1(a), flux.d1(b)))
    assert lo - 1e-9 <= shock_speed(flux, a, b) <= hi + 1e-9


@given(a=states, b=states)
def test_quadratic_comparability(a, b):
    pair = burgers_pair()
    c1, c2 = comparability_constants(pair, -4, 4)
    d = (a - b) ** 2
    assert c1 * d - 1e-12 <= relative_entropy(pair, a, b) <= c2 * d + 1e-12


def test_pairs_satisfy_entropy_flux_relation():
    for name in PAIRS:
        validate_pair(get_pair(name))


def test_states_outside_bound_are_rejected():
    pair = get_pair("burgers-quadratic", 2.0)
    with pytest.raises(DomainError):
        relative_entropy(pair, 3.0, 0.0)
    with pytest.raises(DomainError):
        shock_speed(pair.flux, 0.0, -2.5)


def test_unknown_pair_name():
    with pytest.raises((PreconditionError, KeyError, ValueError)):
        get_pair("nope")


def test_quartic_flux_pair_registry():
    assert get_pair("quartic-quadratic").flux.name == quartic_flux_pair().flux.name
