import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bhlab.calculus import burgers_flux, get_pair
from bhlab.errors import EscapeError, PreconditionError
from bhlab.filippov import (CharacteristicPath, characteristic_ladder, filippov_bracket_check,
                            l2_in_time, mollified_velocity, path_traces, shift, smoothed_rate,
                            solve_characteristic, write_path_csv)
from bhlab.hilbert import SpectralGrid, zero_source
from bhlab.solver import Field, SchemeConfig, Trajectory, evolve, riemann_field

BURGERS = get_pair("burgers-quadratic")
FLUX = burgers_flux()


def constant_trajectory(c, n=64, t_end=1.0):
    grid = SpectralGrid(n)
    return evolve(Field(np.full(n, c), grid), BURGERS, zero_source(), SchemeConfig(t_end=t_end))


@given(c=st.floats(-2, 2), x=st.floats(-7, 7), n=st.integers(1, 64))
def test_velocity_of_constant_state(c, x, n):
    grid = SpectralGrid(64)
    assert mollified_velocity(Field(np.full(64, c), grid), x, n, FLUX) == pytest.approx(c, abs=1e-12)


def test_velocity_of_step_samples_the_right_state():
    grid = SpectralGrid(128)
    state = riemann_field(grid, FLUX, 1.0, -0.4)
    assert mollified_velocity(state, 0.0, 8, FLUX) == pytest.approx(-0.4, abs=1e-14)
    assert mollified_velocity(state, -1.0, 8, FLUX) == pytest.approx(1.0, abs=1e-14)


def test_velocity_of_smooth_field_converges_at_first_order():
    grid = SpectralGrid(4096)
    state = Field(np.sin(grid.x * np.pi / 8), grid)
    exact = np.sin(0.3 * np.pi / 8)
    errs = [abs(mollified_velocity(state, 0.3, n, FLUX) - exact) for n in (4, 8, 16, 32)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 1.7) & (ratios < 2.3))


def test_velocity_needs_positive_n():
    with pytest.raises(PreconditionError):
        mollified_velocity(Field(np.zeros(64), SpectralGrid(64)), 0.0, 0, FLUX)


def test_path_through_constant_state_is_a_line():
    traj = constant_trajectory(0.75)
    path = solve_characteristic(traj, -1.0, 16, FLUX)
    assert np.allclose(path.h, -1.0 + 0.75 * path.times, atol=1e-13)
    assert np.allclose(path.rate(), 0.75, atol=1e-12)


def test_path_escaping_the_box():
    traj = constant_trajectory(2.0, t_end=1.0)
    with pytest.raises(EscapeError) as info:
        solve_characteristic(traj, 7.0, 8, FLUX)
    assert 0 < info.value.time <= 1.0


@pytest.mark.parametrize("n", [16, 64])
def test_path_trapped_by_stationary_shock(n):
    grid = SpectralGrid(256)
    traj = evolve(riemann_field(grid, FLUX, 1.0, -1.0), BURGERS, zero_source(),
                  SchemeConfig(t_end=1.0))
    path = solve_characteristic(traj, 0.0, n, FLUX)
    assert np.max(np.abs(path.h)) <= 2 * (grid.dx + 1.0 / n)


def test_path_inside_rarefaction_follows_the_fan():
    grid = SpectralGrid(1024)
    start = riemann_field(grid, FLUX, -1.0, 1.0, t=1.0)
    traj = evolve(Field(start.values, grid, 0.0), BURGERS, zero_source(), SchemeConfig(t_end=1.0))
    n = 64
    path = solve_characteristic(traj, 0.5, n, FLUX)
    # in the fan x/t is constant along characteristics: h(t) = 0.5 (1 + t)
    assert np.max(np.abs(path.h - 0.5 * (1 + path.times))) < 2 * (grid.dx + 1.0 / n)


def test_ladder_on_a_moving_shock():
    grid = SpectralGrid(512)
    traj = evolve(riemann_field(grid, FLUX, 1.5, -0.5), BURGERS, zero_source(),
                  SchemeConfig(t_end=1.0))
    lad = characteristic_ladder(traj, 0.0, FLUX, (8, 16, 32, 64))
    assert lad.final.mollification_n == 64
    assert np.all(np.abs(lad.final.h - 0.5 * lad.final.times) < 2 * (grid.dx + 1 / 64))
    br = filippov_bracket_check(lad.final, traj, BURGERS)
    assert br.passed and br.facts_fraction > 0.9


def test_bracket_degenerates_on_continuous_field():
    traj = constant_trajectory(0.3, n=128)
    path = solve_characteristic(traj, 0.0, 16, FLUX)
    br = filippov_bracket_check(path, traj, BURGERS)
    assert br.passed and not np.any(br.shock)
    assert np.allclose(br.h_dot, 0.3, atol=1e-12)
    assert np.allclose(br.lo, br.hi)


def test_smoothed_rate_exact_for_quadratics():
    t = np.cumsum(np.r_[0.0, np.full(20, 0.1)])
    assert np.allclose(smoothed_rate(t, 3 * t + 1)[0:], 3.0)
    y = t ** 2
    assert np.allclose(smoothed_rate(t, y)[2:-2], 2 * t[2:-2])


class _StubReference:
    """Straight shock with fixed traces, enough for the shift bookkeeping."""

    def __init__(self, speed, traces):
        self.speed, self._traces = speed, traces

    def shock_position(self, t):
        return self.speed * t

    def traces(self, t):
        return self._traces


@pytest.mark.parametrize("u_tr,ub_tr,expected", [
    ((0.0, 2.0), (-1.0, 3.0), 0.0),
    ((0.0, 2.0), (0.0, 1.0), -0.5),
    ((0.0, 1.0), (0.0, 2.0), 0.5),
])
def test_shift_speed_from_traces(u_tr, ub_tr, expected):
    t = np.linspace(0, 1, 11)
    path = CharacteristicPath(t, 0.5 * (u_tr[0] + u_tr[1]) * t, np.zeros(10), 8, 0.0)
    ref = _StubReference(0.5 * sum(ub_tr), ub_tr)
    um, up = np.full(11, u_tr[1]), np.full(11, u_tr[0])
    ss = shift(path, ref, FLUX, (um, up))
    assert np.allclose(ss.Xdot_sigma, expected)
    assert np.allclose(ss.Xdot, expected)
    assert ss.mismatch == pytest.approx(0.0, abs=1e-12)
    assert l2_in_time(t, np.ones(11)) == pytest.approx(1.0)


def test_shift_requires_common_start():
    t = np.linspace(0, 1, 5)
    path = CharacteristicPath(t, t + 0.1, np.ones(4), 8, 0.1)
    with pytest.raises(PreconditionError):
        shift(path, _StubReference(0.0, (-1.0, 1.0)), FLUX, (np.ones(5), -np.ones(5)))


def test_path_csv(tmp_path):
    traj = constant_trajectory(0.2, n=64)
    path = solve_characteristic(traj, 0.0, 8, FLUX)
    traces = path_traces(traj, path)
    out = tmp_path / "path.csv"
    write_path_csv(out, path, traces, FLUX)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "h", "h_dot", "u_minus", "u_plus", "bracket_lo", "bracket_hi"]
    assert len(rows) == path.times.size + 1
    assert isinstance(traj, Trajectory)
