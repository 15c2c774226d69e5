"""Generalised characteristics of the rough solution and the induced shift.

The path solves ``h' = v_n(h, t)`` where ``v_n`` is the average of
``A'(u)`` over the one-sided window ``(h, h + 1/n)``. As ``n`` grows the
paths converge to a Filippov solution of ``h' = A'(u(h))``.
"""
import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .calculus import shock_speed
from .errors import EscapeError, PreconditionError
from .solver import strong_trace

DEFAULT_LADDER = (8, 16, 32, 64)


def _primitive(grid, cell_values):
    # running integral at the cell edges, starting from the left end
    return np.concatenate([[0.0], np.cumsum(cell_values) * grid.dx])


def _integral(grid, prim, a, b):
    # integral over [a, b] of the periodically extended field
    L = grid.length
    total = prim[-1]

    def F(x):
        k = np.floor((x + 0.5 * L) / L)
        return np.interp(x - k * L, grid.edges, prim) + k * total

    return F(b) - F(a)


def mollified_velocity(state, x, n, flux):
    """``n * int_x^{x+1/n} A'(u(y)) dy`` for the piecewise-constant field."""
    if n < 1:
        raise PreconditionError("mollification parameter must be a positive integer")
    grid = state.grid
    prim = _primitive(grid, flux.d1(state.values))
    x = np.asarray(x, dtype=float)
    out = n * _integral(grid, prim, x, x + 1.0 / n)
    return float(out) if out.ndim == 0 else out


@dataclass
class CharacteristicPath:
    times: np.ndarray
    h: np.ndarray
    h_dot: np.ndarray          # per-interval slopes
    mollification_n: int
    x0: float

    def rate(self):
        """Smoothed ``h'`` at the sample times (see :func:`smoothed_rate`)."""
        return smoothed_rate(self.times, self.h)


def smoothed_rate(t, y):
    """Derivative estimate on an irregular time grid.

    Centred difference over five samples in the interior, over three next
    to the ends, one-sided at the ends.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    m = t.size
    out = np.empty(m)
    if m < 2:
        return np.zeros(m)
    for k in range(m):
        r = min(2, k, m - 1 - k)
        if r == 0:
            lo, hi = (0, 1) if k == 0 else (m - 2, m - 1)
        else:
            lo, hi = k - r, k + r
        out[k] = (y[hi] - y[lo]) / (t[hi] - t[lo])
    return out


def solve_characteristic(trajectory, x0, n, flux):
    """Explicit midpoint integration of the mollified ODE on the solver's steps.

    The half-step velocity uses the average of the two bracketing states.
    """
    states = trajectory.states
    grid = states[0].grid
    L = grid.length
    times = np.array([s.time for s in states])
    h = np.empty(times.size)
    h[0] = float(x0)
    A1 = [flux.d1(s.values) for s in states]
    prims = [_primitive(grid, a) for a in A1]
    w = 1.0 / n
    for k in range(times.size - 1):
        dt = times[k + 1] - times[k]
        v0 = n * _integral(grid, prims[k], h[k], h[k] + w)
        hm = h[k] + 0.5 * dt * v0
        pm = 0.5 * (prims[k] + prims[k + 1])
        vm = n * _integral(grid, pm, hm, hm + w)
        h[k + 1] = h[k] + dt * vm
        if abs(h[k + 1]) > 0.5 * L:
            raise EscapeError(f"path left the box at t={times[k + 1]:.6g}", times[k + 1])
    slopes = np.diff(h) / np.diff(times)
    return CharacteristicPath(times, h, slopes, int(n), float(x0))


@dataclass
class LadderResult:
    ns: tuple
    paths: list
    gaps: np.ndarray           # sup |h_{2n} - h_n| for consecutive rungs
    monotone: bool

    @property
    def final(self):
        return self.paths[-1]


def characteristic_ladder(trajectory, x0, flux, ns=DEFAULT_LADDER):
    """Paths for each mollification level and their sup-norm Cauchy gaps."""
    paths = [solve_characteristic(trajectory, x0, n, flux) for n in ns]
    gaps = np.array([np.max(np.abs(b.h - a.h)) for a, b in zip(paths[:-1], paths[1:])])
    monotone = bool(np.all(np.diff(gaps) < 0)) if gaps.size > 1 else True
    return LadderResult(tuple(ns), paths, gaps, monotone)


def path_traces(trajectory, path, skip_cells=2, widths_cells=(2, 4, 6)):
    """Left and right traces of ``u`` along the path.

    Windows start ``skip_cells`` cells away from ``h`` so the smeared
    shock cells of the scheme do not enter the one-sided averages.
    """
    grid = trajectory.states[0].grid
    dx = grid.dx
    widths = [c * dx for c in widths_cells]
    um = np.empty(path.times.size)
    up = np.empty(path.times.size)
    for k, state in enumerate(trajectory.states):
        um[k] = strong_trace(state, path.h[k], "left", widths, skip_cells * dx).value
        up[k] = strong_trace(state, path.h[k], "right", widths, skip_cells * dx).value
    return um, up


@dataclass
class BracketReport:
    times: np.ndarray
    h_dot: np.ndarray
    u_minus: np.ndarray
    u_plus: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    tol: float
    inside: np.ndarray          # bracket property per sample
    shock: np.ndarray           # samples where a jump is detected
    facts_ok: np.ndarray        # Rankine-Hugoniot and entropy facts per sample
    fraction: float
    facts_fraction: float
    passed: bool


def filippov_bracket_check(path, trajectory, pair, tol_const=5.0, budget=0.01,
                           jump_threshold=None, traces=None):
    """Check ``h'`` against the interval spanned by ``A'(u-)`` and ``A'(u+)``.

    ``h'`` is the five-sample centred difference; the first and last two
    samples, where no centred stencil exists, are skipped. At samples with
    a resolved jump the Rankine-Hugoniot relation ``h' = sigma(u+, u-)`` and
    the entropy inequality at speed ``h'`` are checked as well (reported in
    ``facts_fraction``; the verdict uses the bracket alone).
    """
    flux = pair.flux
    grid = trajectory.states[0].grid
    tol = tol_const * (grid.dx + 1.0 / path.mollification_n)
    jump_threshold = 2 * tol if jump_threshold is None else jump_threshold
    rate = smoothed_rate(path.times, path.h)
    um, up = path_traces(trajectory, path) if traces is None else traces
    idx = np.arange(2, path.times.size - 2)
    am, ap = flux.d1(um[idx]), flux.d1(up[idx])
    lo = np.minimum(am, ap) - tol
    hi = np.maximum(am, ap) + tol
    hd = rate[idx]
    inside = (hd >= lo) & (hd <= hi)
    jump = um[idx] - up[idx]
    shock = np.abs(jump) > jump_threshold
    sigma = shock_speed(flux, up[idx], um[idx])
    rh = np.abs(sigma - hd) <= tol
    ent = (pair.q(up[idx]) - pair.q(um[idx])
           - hd * (pair.eta(up[idx]) - pair.eta(um[idx]))) <= tol * np.abs(jump) * (1 + np.abs(hd))
    facts = np.where(shock, rh & ent & (jump > 0), True)
    fraction = float(np.mean(inside)) if idx.size else 1.0
    ffrac = float(np.mean(facts)) if idx.size else 1.0
    return BracketReport(path.times[idx], hd, um[idx], up[idx], lo + tol, hi - tol, tol,
                         inside, shock, facts, fraction, ffrac, fraction >= 1.0 - budget)


@dataclass
class ShiftSeries:
    times: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray            # s' - h'
    Xdot_sigma: np.ndarray      # sigma(ubar+, ubar-) - sigma(u+, u-)
    mismatch: float             # L2-in-time norm of the difference
    s: np.ndarray
    s_dot: np.ndarray
    h_dot: np.ndarray


def l2_in_time(t, f):
    return float(np.sqrt(trapezoid(np.square(f), t)))


def shift(path, ref, flux, traces):
    """``X = s - h`` with ``X'`` computed two ways.

    ``traces`` are ``(u_minus, u_plus)`` of the rough solution along the
    path. Both ``s'`` and ``h'`` use the smoothed rate of
    :func:`smoothed_rate`, so ``X' = s' - h'`` is the smoothed rate of ``X``.
    """
    t = path.times
    s = np.array([ref.shock_position(tt) for tt in t])
    if abs(s[0] - path.h[0]) > 1e-12:
        raise PreconditionError("path must start on the reference shock")
    X = s - path.h
    s_dot = smoothed_rate(t, s)
    h_dot = smoothed_rate(t, path.h)
    um, up = traces
    ref_tr = np.array([ref.traces(tt) for tt in t])
    sig_ref = shock_speed(flux, ref_tr[:, 0], ref_tr[:, 1])
    sig_u = shock_speed(flux, up, um)
    Xdot = s_dot - h_dot
    Xs = sig_ref - sig_u
    return ShiftSeries(t, X, Xdot, Xs, l2_in_time(t, Xdot - Xs), s, s_dot, h_dot)


def write_path_csv(path_file, path, traces, flux, rate=None):
    """Columns ``t, h, h_dot, u_minus, u_plus, bracket_lo, bracket_hi``."""
    um, up = traces
    rate = smoothed_rate(path.times, path.h) if rate is None else rate
    am, ap = flux.d1(um), flux.d1(up)
    with open(path_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "h", "h_dot", "u_minus", "u_plus", "bracket_lo", "bracket_hi"])
        for row in zip(path.times, path.h, rate, um, up, np.minimum(am, ap), np.maximum(am, ap)):
            w.writerow([f"{v:.17g}" for v in row])
