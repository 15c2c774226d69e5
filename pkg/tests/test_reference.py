import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from bhlab.calculus import burgers_flux
from bhlab.errors import GapViolationError, PreconditionError, SingularityError
from bhlab.hilbert import SpectralGrid, hilbert_source, zero_source
from bhlab.reference import (BUMP, AnalyticReference, CutoffPerturbation, FittedReference,
                             bump_perturbation, initial_reference_field, log_norm_exact,
                             log_norm_near_zero, phi, phi_d1)


def test_bump_plateau_and_support():
    assert BUMP.eval(0.0) == 1.0 and BUMP.eval(-1.0) == 1.0
    assert BUMP.eval(2.0) == 0.0 and BUMP.eval(-7.3) == 0.0
    mid = BUMP.eval(1.5)
    assert mid == pytest.approx(0.5)


@given(x=st.floats(-2.5, 2.5).filter(lambda v: abs(abs(v) - 1) > 1e-3 and abs(abs(v) - 2) > 1e-3))
def test_bump_derivative_matches_difference_quotient(x):
    h = 1e-6
    fd = (BUMP.eval(x + h) - BUMP.eval(x - h)) / (2 * h)
    assert BUMP.d1(x) == pytest.approx(fd, abs=1e-6)


@given(x=st.floats(1.0, 2.0))
def test_bump_monotone_on_transition(x):
    assert BUMP.d1(x) <= 0.0 and 0.0 <= BUMP.eval(x) <= 1.0


def test_profile_values():
    assert phi(BUMP, 1.0) == 0.0
    assert phi(BUMP, np.exp(-1.0)) == pytest.approx(-2 / (np.pi * np.e), rel=1e-14)
    assert phi(BUMP, -np.exp(-1.0)) == pytest.approx(-2 / (np.pi * np.e), rel=1e-14)
    assert phi(BUMP, 0.0) == 0.0
    assert phi(BUMP, 2.0) == 0.0 and phi(BUMP, -5.0) == 0.0


def test_profile_derivative_values():
    assert phi_d1(BUMP, 1.0) == pytest.approx(2 / np.pi)
    assert phi_d1(BUMP, -1.0) == pytest.approx(-2 / np.pi)
    assert phi_d1(BUMP, 3.0) == 0.0
    with pytest.raises(SingularityError):
        phi_d1(BUMP, 0.0)


def test_profile_derivative_symbolic_inside_plateau():
    x = sp.Symbol("x", positive=True)
    expr = sp.diff(2 / sp.pi * x * sp.log(x), x)
    for val in (0.1, 0.5, 0.9):
        assert phi_d1(BUMP, val) == pytest.approx(float(expr.subs(x, val)), rel=1e-13)


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-4])
def test_log_norm_bound(eps):
    exact = 2 * quad(lambda t: abs(np.log(t)), 0, eps)[0]
    assert log_norm_exact(eps) == pytest.approx(exact, rel=1e-10)
    assert log_norm_near_zero(eps) >= exact


def test_perturbation_support_and_traces():
    w = CutoffPerturbation(1.0, 0.5, -1.0, 0.0)
    assert w.eval(5.0, 0.3) == 0.0 and w.eval(-3.0, 0.0) == 0.0
    assert w.traces(2.0) == (-1.0, 2.0)
    assert w.dt(-0.5, 0.0) == 0.5 and w.dt(0.5, 0.0) == 0.0


def test_stationary_and_moving_shock_paths():
    ref = AnalyticReference(burgers_flux(), CutoffPerturbation(1, 0, -1, 0), s0=0.25)
    assert ref.shock_velocity(0.7) == 0.0 and ref.shock_position(1.3) == 0.25
    moving = AnalyticReference(burgers_flux(), CutoffPerturbation(2, 0, 0, 0), s0=0.0)
    assert moving.shock_position(1.5) == pytest.approx(1.5, abs=1e-14)


def test_shock_path_step_doubling():
    w = CutoffPerturbation(1.0, 0.4, -1.0, 0.1)
    coarse = AnalyticReference(burgers_flux(), w, rk_dt=0.1).shock_position(1.0)
    fine = AnalyticReference(burgers_flux(), w, rk_dt=0.05).shock_position(1.0)
    # s' = (b_l + b_r) t / 2 is linear in t, which RK4 integrates exactly
    assert coarse == pytest.approx(0.125, abs=1e-13)
    assert abs(coarse - fine) < 1e-13


def test_gap_violation_reports_time():
    ref = AnalyticReference(burgers_flux(), CutoffPerturbation(1.0, -1.0, -1.0, 0.0))
    with pytest.raises(GapViolationError) as info:
        ref.shock_position(2.0)
    assert 1.4 <= info.value.time <= 2.0


def test_derivative_norm_converges_under_refinement():
    ref = AnalyticReference(burgers_flux(), length=16.0)
    vals = [ref.dx_norm_sq(SpectralGrid(n), 0.0) for n in (256, 512, 1024, 2048)]
    assert np.all(np.isfinite(vals))
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs[1:] < diffs[:-1])


def test_sample_splits_the_shock_cell():
    grid = SpectralGrid(64)
    ref = AnalyticReference(burgers_flux(), length=grid.length)
    sample = ref.sample_shifted(grid, 0.3 * grid.dx, 0.0)
    assert sample.split == grid.n // 2 - 1
    assert sample.frac == pytest.approx(0.7)
    assert sample.cell_values[sample.split] == pytest.approx(
        0.7 * sample.left_value + 0.3 * sample.right_value)
    unsplit = ref.sample_shifted(grid, 0.0, 0.0)
    assert unsplit.split == -1
    assert np.array_equal(initial_reference_field(ref, grid), unsplit.cell_values)


def test_fitted_reference_without_source_matches_lab_scheme():
    # symmetric traces keep the shock still, and the shock-frame scheme then
    # reproduces the lab Godunov scheme started from the same cells
    from bhlab.calculus import burgers_pair
    from bhlab.solver import Field, SchemeConfig, evolve
    grid = SpectralGrid(128)
    ref = FittedReference(grid, burgers_flux(), zero_source(), 1.0, profile=False)
    assert ref.shock_position(1.0) == 0.0
    assert np.allclose(ref.traces(0.5), (-1.0, 1.0), atol=1e-6)
    lab = evolve(Field(ref.U[0], grid), burgers_pair(), zero_source(), SchemeConfig(t_end=1.0))
    assert np.array_equal(lab.times, ref.times)
    assert np.array_equal(lab.states[-1].values, ref.U[-1])
    with pytest.raises(PreconditionError):
        ref.shock_position(1.5)


def test_fitted_reference_residual_is_small_away_from_shock():
    grid = SpectralGrid(512)
    ref = FittedReference(grid, burgers_flux(), hilbert_source(), 0.2)
    res = ref.residual_at(grid, 0.0, 0.1, hilbert_source())
    far = np.abs(grid.x - ref.shock_position(0.1)) > 0.5
    assert np.max(np.abs(res[far])) < 0.2
    res_fine = FittedReference(SpectralGrid(1024), burgers_flux(), hilbert_source(), 0.2)
    g2 = SpectralGrid(1024)
    far2 = np.abs(g2.x - res_fine.shock_position(0.1)) > 0.5
    r2 = res_fine.residual_at(g2, 0.0, 0.1, hilbert_source())
    assert np.max(np.abs(r2[far2])) < np.max(np.abs(res[far]))


def test_bump_perturbation_amplitude():
    grid = SpectralGrid(128)
    p = bump_perturbation(grid, 0.1, width=2.0)
    assert np.max(p) == pytest.approx(0.1) and np.all(p[np.abs(grid.x) >= 4] == 0)
