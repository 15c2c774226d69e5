from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bhlab.calculus import get_pair
from bhlab.errors import PreconditionError
from bhlab.hilbert import SpectralGrid, make_source
from bhlab.reference import bump_perturbation, initial_reference_field
from bhlab.solver import Field
from bhlab.stability import (DissipationLedger, LedgerRecord, StabilityScenario, _min_C,
                             default_ladder, discretisation_budget, envelope_check,
                             envelope_factor, gamma_monotonicity, gamma_series,
                             lemma_bound_fraction, ledger_step, loglog_slope, make_reference,
                             relative_entropy_functional, run_envelope_constant, run_stability,
                             shift_l2_control, worst_increment)

PAIR = get_pair("burgers-quadratic")


@pytest.fixture(scope="module")
def quiet():
    sc = StabilityScenario(n=256, source="zero", profile=False, shape="none", amplitude=0.0,
                           t_end=0.25, shift_mode="zero")
    return run_stability(sc)


@pytest.fixture(scope="module")
def perturbed():
    return run_stability(StabilityScenario(n=256, t_end=0.25, amplitude=0.08),
                         keep_trajectory=True)


@pytest.mark.parametrize("n,expected", [(1024, (8, 16, 32, 64)), (2048, (16, 32, 64, 128)),
                                        (128, (1, 2, 4, 8)), (64, (1, 2, 4, 8))])
def test_default_ladder(n, expected):
    assert default_ladder(n) == expected
    assert StabilityScenario(n=n).ladder == expected


def test_scenario_validation():
    with pytest.raises(PreconditionError):
        StabilityScenario(shift_mode="sideways")
    with pytest.raises(PreconditionError):
        StabilityScenario(delta=0.0)
    with pytest.raises(PreconditionError):
        StabilityScenario(ladder=(8, 0))


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.floats(-1e3, 1e3))
def test_worst_increment_properties(values, shift):
    w = worst_increment(values)
    assert w >= 0
    assert worst_increment(np.sort(values)[::-1]) == 0.0
    assert worst_increment(np.asarray(values) + shift) == pytest.approx(w, abs=1e-9)


def test_worst_increment_example():
    assert worst_increment([3.0, 1.0, 2.5, 0.0, 0.5]) == 1.5


@given(st.floats(1e-6, 1e6), st.floats(0, 50))
def test_min_C_solves_the_envelope_equation(ratio, K):
    C = _min_C(ratio, K)
    assert C * np.exp(C * K) == pytest.approx(ratio, rel=1e-9)


def test_envelope_factor_and_slope():
    assert envelope_factor(16.0, 4.0, 3.0) == 2.0 + 4096.0
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert loglog_slope(x, 3 * x ** 0.25) == pytest.approx(0.25)


def _record(t, E, D, bulk=0.0):
    return LedgerRecord(t, E, D, bulk, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                        (0.0, 0.0, 0.0, 0.0), 0.0, 0.0)


def test_gamma_is_constant_for_an_exact_balance():
    t = np.linspace(0.0, 1.0, 11)
    # dE/dt = D - bulk with E = 1 - t + t^2 / 2, D = -1 and bulk = -t
    led = DissipationLedger([_record(tt, 1 - tt + tt ** 2 / 2, -1.0, -tt) for tt in t])
    assert np.allclose(gamma_series(led), 1.0, atol=1e-15)


def test_unperturbed_scenario_is_silent(quiet):
    assert np.all(quiet.E == 0.0)
    for name in ("shock", "profile", "coupling", "source_rel", "source_diff", "residual"):
        assert np.all(quiet.ledger.series(name) == 0.0), name
    assert quiet.gamma_worst == 0.0
    assert np.all(quiet.X == 0.0) and quiet.shift_energy == 0.0
    fit = envelope_check([quiet])
    assert fit.passed and fit.degenerate and fit.C == 0.0


def test_initial_entropy_is_half_the_perturbation_norm():
    sc = StabilityScenario(n=512, t_end=0.1, amplitude=0.05)
    grid = SpectralGrid(sc.n)
    ref = make_reference(sc, grid, PAIR, make_source(sc.source))
    w = bump_perturbation(grid, sc.amplitude, sc.width, sc.center)
    state = Field(initial_reference_field(ref, grid) + w, grid)
    E0 = relative_entropy_functional(state, ref, 0.0, 0.0, PAIR)
    assert E0 == pytest.approx(0.5 * grid.dx * np.sum(w ** 2), rel=2 * grid.dx)
    with pytest.raises(PreconditionError):
        relative_entropy_functional(state, ref, np.nan, 0.0, PAIR)
    with pytest.raises(PreconditionError):
        ledger_step(state, ref, PAIR, make_source("hilbert"), 0.0, 0.0, 0.0, 0.0, (np.inf, 0.0))


def test_perturbed_run_invariants(perturbed):
    rep = perturbed
    assert rep.diagnostics["comparability_ok"] and rep.diagnostics["E_nonnegative"]
    assert rep.c_star == rep.c_2star == 0.5
    assert rep.X[0] == 0.0 and rep.h[0] == 0.0
    assert rep.E0 > 0 and rep.ladder_monotone
    assert lemma_bound_fraction(rep, PAIR, 1.0 / 12.0) > 0.9
    # the Gamma budget is only met once the ladder resolves the shock (n >= 1024)
    assert np.isfinite(rep.gamma_worst) and rep.gamma_worst >= 0
    assert np.isfinite(run_envelope_constant(rep))
    assert rep.trajectory is not None and rep.path is not None


def test_discretisation_budget(perturbed):
    # jump 2, dx = 1/16 and max eta'' = 1
    assert discretisation_budget(perturbed) == pytest.approx(16 / 256 * 4 / 4 * 0.5)
    assert gamma_monotonicity(perturbed, budget=-1.0).passed is False


def test_shift_control_on_synthetic_runs():
    t = np.linspace(0, 1, 21)
    reps = [SimpleNamespace(E0=e, shift_energy=e ** 0.5, times=t,
                            X_dot=np.full(21, e ** 0.25)) for e in (1e-4, 1e-3, 1e-2)]
    ctl = shift_l2_control(reps)
    assert ctl.passed and ctl.monotone and ctl.holder_ok
    assert np.all(np.diff(ctl.E0) > 0)
    reps[0].shift_energy = 10.0
    assert not shift_l2_control(reps).monotone
