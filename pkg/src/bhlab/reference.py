"""Piecewise-smooth reference solutions with a single shock.

A reference has the form ``ubar(x, t) = phi(x - s(t)) + w(x - s(t), t)``
where ``phi`` carries the logarithmic profile that balances the Hilbert
source at the shock, ``w`` is smooth on each side of the origin and ``s`` is
the shock path. Two concrete references are provided:

``AnalyticReference``
    ``w`` is an explicit cutoff perturbation and ``s`` follows from the
    Rankine-Hugoniot speed by RK4. It solves the balance law only up to a
    residual ``r`` that does not shrink with the grid.

``FittedReference``
    starts from the same data and evolves it numerically in the shock
    frame, with the shock kept sharp on a cell interface. Its residual is a
    discretisation error.
"""
from dataclasses import dataclass, field

import numpy as np

from .calculus import shock_speed
from .errors import GapViolationError, PreconditionError, SingularityError
from .hilbert import SpectralGrid, apply_source
from .solver import godunov_flux, source_substep

TWO_OVER_PI = 2.0 / np.pi


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _g_d1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


@dataclass(frozen=True)
class BumpFunction:
    """Smooth even cutoff: 1 on ``|x| <= 1``, 0 on ``|x| >= 2``."""

    def eval(self, x):
        a = np.abs(np.asarray(x, dtype=float))
        out = np.where(a <= 1.0, 1.0, 0.0)
        mid = (a > 1.0) & (a < 2.0)
        if np.any(mid):
            p = _g(2.0 - a[mid])
            r = _g(a[mid] - 1.0)
            out = np.array(out, dtype=float)
            out[mid] = p / (p + r)
        return float(out) if out.ndim == 0 else out

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        out = np.zeros_like(a)
        mid = (a > 1.0) & (a < 2.0)
        if np.any(mid):
            am = a[mid]
            p, r = _g(2.0 - am), _g(am - 1.0)
            dp, dr = _g_d1(2.0 - am), _g_d1(am - 1.0)
            out[mid] = -(dp * r + p * dr) / (p + r) ** 2 * np.sign(x[mid])
        return float(out) if out.ndim == 0 else out

    __call__ = eval


BUMP = BumpFunction()


def phi(bump, x):
    """``(2/pi) |x| ln|x| m(x)`` with the limit value 0 at the origin."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    safe = np.where(a > 0, a, 1.0)
    out = np.where(a > 0, TWO_OVER_PI * safe * np.log(safe) * bump.eval(x), 0.0)
    return float(out) if out.ndim == 0 else out


def phi_d1(bump, x):
    """Derivative of :func:`phi`; raises :class:`SingularityError` at 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise SingularityError("phi' diverges logarithmically at the origin")
    a = np.abs(x)
    out = (TWO_OVER_PI * (1.0 + np.log(a)) * np.sign(x) * bump.eval(x)
           + TWO_OVER_PI * a * np.log(a) * bump.d1(x))
    return float(out) if out.ndim == 0 else out


def _phi_d1_offshock(bump, x):
    # phi' with the singular point mapped to 0 instead of raising
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 0.0, phi_d1(bump, safe))


def log_norm_near_zero(eps):
    """Upper bound ``6 eps + 2 eps |ln eps|`` for the L1 norm of ``ln|x|`` on ``(-eps, eps)``."""
    return 6.0 * eps + 2.0 * eps * abs(np.log(eps))


def log_norm_exact(eps):
    """Exact ``int_{-eps}^{eps} |ln|x|| dx`` for ``eps <= 1``."""
    return 2.0 * eps * (1.0 - np.log(eps))


@dataclass(frozen=True)
class CutoffPerturbation:
    """``w(x, t) = (a + b t) m(x)``, with ``(a, b)`` chosen by the side of 0."""

    a_left: float = 1.0
    b_left: float = 0.0
    a_right: float = -1.0
    b_right: float = 0.0
    bump: BumpFunction = BUMP

    def _coef(self, x, t, side):
        left = self._is_left(x, side)
        return np.where(left, self.a_left + self.b_left * t, self.a_right + self.b_right * t), left

    @staticmethod
    def _is_left(x, side):
        x = np.asarray(x, dtype=float)
        if side == "left":
            return np.ones_like(x, dtype=bool)
        if side == "right":
            return np.zeros_like(x, dtype=bool)
        return x < 0

    def eval(self, x, t, side=None):
        c, _ = self._coef(x, t, side)
        return c * self.bump.eval(x)

    def d1(self, x, t, side=None):
        c, _ = self._coef(x, t, side)
        return c * self.bump.d1(x)

    def dt(self, x, t, side=None):
        left = self._is_left(x, side)
        return np.where(left, self.b_left, self.b_right) * self.bump.eval(x)

    def traces(self, t):
        """``(w(0+, t), w(0-, t))``."""
        return self.a_right + self.b_right * t, self.a_left + self.b_left * t


@dataclass
class ShiftedSample:
    """Reference quantities at shifted lab cell centres ``x_i + X``.

    ``split`` is the index of the lab cell containing the shifted shock
    ``s(t) - X`` (or -1 when the shock sits exactly on an interface), with
    ``frac`` the share of that cell lying left of the shock.
    """

    values: np.ndarray          # point values at the centres
    d1: np.ndarray              # x-derivative off the shock
    cell_values: np.ndarray     # split cell replaced by its two-sided average
    split: int
    frac: float
    left_value: float           # reference at the split cell's left part
    right_value: float
    xi: np.ndarray              # shock-frame coordinate of each centre
    left_d1: float = float("nan")
    right_d1: float = float("nan")


class _ReferenceBase:
    """Shared evaluation logic; subclasses supply the smooth part ``w``."""

    bump = BUMP
    profile = True
    flux = None
    delta_floor = 0.0

    # -- subclass interface -------------------------------------------------
    def shock_position(self, t):
        raise NotImplementedError

    def shock_velocity(self, t):
        raise NotImplementedError

    def traces(self, t):
        """``(ubar(s+, t), ubar(s-, t))``."""
        raise NotImplementedError

    def _w(self, xi, t, left):
        raise NotImplementedError

    def _w_d1(self, xi, t, left):
        raise NotImplementedError

    def _w_t(self, xi, t, left):
        raise NotImplementedError

    # -- evaluation ----------------------------------------------------------
    def _phi(self, xi):
        return phi(self.bump, xi) if self.profile else np.zeros_like(np.asarray(xi, float))

    def _phi_d1(self, xi):
        return _phi_d1_offshock(self.bump, xi) if self.profile else np.zeros_like(np.asarray(xi, float))

    def frame_coordinate(self, x, t):
        return self._wrap(np.asarray(x, dtype=float) - self.shock_position(t))

    def _wrap(self, xi):
        return xi

    def evaluate(self, x, t, side=None):
        """``ubar(x, t)``; at the shock ``side`` selects a one-sided limit."""
        xi = self.frame_coordinate(x, t)
        left = CutoffPerturbation._is_left(xi, side)
        out = self._w(xi, t, left) + self._phi(xi)
        return float(out) if np.ndim(out) == 0 else out

    def evaluate_d1(self, x, t):
        xi = self.frame_coordinate(x, t)
        if np.any(xi == 0.0):
            raise SingularityError("reference derivative requested at the shock")
        left = xi < 0
        out = self._w_d1(xi, t, left) + self._phi_d1(xi)
        return float(out) if np.ndim(out) == 0 else out

    def check_gap(self, t):
        up, um = self.traces(t)
        if not um - up > self.delta_floor:
            raise GapViolationError(
                f"reference jump {um - up:.6g} not above floor {self.delta_floor} at t={t:.6g}", t)

    def sample_shifted(self, grid, X, t):
        """Reference at ``x_i + X`` on the lab grid, with the shock cell split."""
        x = grid.x
        xi = self.frame_coordinate(x + X, t)
        left = xi < 0
        vals = self._w(xi, t, left) + self._phi(xi)
        d1 = self._w_d1(xi, t, left) + self._phi_d1(xi)
        # lab position of the shock, folded into the box
        xd = grid.wrap(self.shock_position(t) - X)
        pos = (xd + 0.5 * grid.length) / grid.dx
        i = int(np.floor(pos))
        frac = pos - i
        cell = vals.copy()
        split, lv, rv = -1, float("nan"), float("nan")
        ld, rd = float("nan"), float("nan")
        if frac > 1e-12 and frac < 1 - 1e-12:
            i %= grid.n
            split = i
            lo = grid.edges[i]
            hi = grid.edges[i + 1]
            xl = 0.5 * (lo + xd) + X
            xr = 0.5 * (xd + hi) + X
            lv = float(self.evaluate(xl, t, side="left"))
            rv = float(self.evaluate(xr, t, side="right"))
            ld = float(self.evaluate_d1(xl, t))
            rd = float(self.evaluate_d1(xr, t))
            cell[i] = frac * lv + (1 - frac) * rv
        return ShiftedSample(vals, d1, cell, split, frac, lv, rv, xi, ld, rd)

    def residual_at(self, grid, X, t, src, sample=None):
        """Residual ``ubar_t + A(ubar)_x - G(ubar)`` at the shifted centres."""
        sample = self.sample_shifted(grid, X, t) if sample is None else sample
        left = sample.xi < 0
        wt = self._w_t(sample.xi, t, left)
        sdot = self.shock_velocity(t)
        transport = (self.flux.d1(sample.values) - sdot) * sample.d1
        G = apply_source(src, grid, sample.cell_values)
        return wt + transport - G

    def dx_norm_sq(self, grid, t):
        """``||d_x ubar||^2`` over the grid, computed off the shock."""
        s = self.sample_shifted(grid, 0.0, t)
        d1 = s.d1.copy()
        if s.split >= 0:
            d1[s.split] = 0.0
        return float(np.sum(d1 ** 2) * grid.dx)


class AnalyticReference(_ReferenceBase):
    """Reference with explicit cutoff ``w`` and an RK4 shock path."""

    def __init__(self, flux, perturbation=None, s0=0.0, delta_floor=0.5,
                 bump=BUMP, profile=True, rk_dt=0.01, length=None):
        self.flux = flux
        self.w = CutoffPerturbation() if perturbation is None else perturbation
        self.s0 = float(s0)
        self.delta_floor = float(delta_floor)
        self.bump = bump
        self.profile = bool(profile)
        self.rk_dt = float(rk_dt)
        self.length = length
        self._cache = {}
        self.check_gap(0.0)

    def _wrap(self, xi):
        if self.length is None:
            return xi
        L = self.length
        return (xi + 0.5 * L) % L - 0.5 * L

    def traces(self, t):
        return self.w.traces(t)

    def speed_from_traces(self, t):
        self.check_gap(t)
        up, um = self.traces(t)
        return float(shock_speed(self.flux, up, um))

    def shock_velocity(self, t):
        return self.speed_from_traces(t)

    def shock_position(self, t):
        t = float(t)
        if t in self._cache:
            return self._cache[t]
        steps = max(1, int(np.ceil(t / self.rk_dt - 1e-12)))
        h = t / steps
        s, tau = self.s0, 0.0
        for _ in range(steps):
            s = evolve_shock(self, self.flux, s, tau, h)
            tau += h
        self._cache[t] = s
        return s

    def _w(self, xi, t, left):
        return np.where(left, self.w.eval(xi, t, "left"), self.w.eval(xi, t, "right"))

    def _w_d1(self, xi, t, left):
        return np.where(left, self.w.d1(xi, t, "left"), self.w.d1(xi, t, "right"))

    def _w_t(self, xi, t, left):
        return np.where(left, self.w.dt(xi, t, "left"), self.w.dt(xi, t, "right"))


def evolve_shock(ref, flux, s, t, dt):
    """One RK4 step of ``s' = sigma(ubar(s+), ubar(s-))`` from time ``t``.

    The traces are re-evaluated at each stage time; a closed gap aborts
    with :class:`GapViolationError` naming the offending time.
    """
    def speed(tau):
        ref.check_gap(tau)
        up, um = ref.traces(tau)
        return float(shock_speed(flux, up, um))

    k1 = speed(t)
    k2 = speed(t + 0.5 * dt)
    k3 = k2
    k4 = speed(t + dt)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


class FittedReference(_ReferenceBase):
    """Reference evolved numerically in the frame of its own shock.

    The frame grid has the same cells as the lab grid, with the shock on
    the interface ``xi = 0``. Each step applies a Strang split: source half
    steps act on the whole periodic field, and the transport step uses the
    Godunov flux of ``A(u) - s' u`` away from the shock and the
    Rankine-Hugoniot flux at the shock. The one-sided traces are the
    smooth parts ``w = U - phi`` of the two cells adjacent to the shock and
    ``s'`` is their divided-difference speed.

    Snapshots are stored at every step; evaluation interpolates linearly in
    time and, on each side of the shock, linearly in space.
    """

    def __init__(self, grid, flux, src, t_end, perturbation=None, s0=0.0,
                 delta_floor=0.5, bump=BUMP, profile=True, cfl=0.5):
        if grid.n % 2:
            raise PreconditionError("fitted reference needs an even number of cells")
        self.grid = grid
        self.flux = flux
        self.src = src
        self.bump = bump
        self.profile = bool(profile)
        self.delta_floor = float(delta_floor)
        self.s0 = float(s0)
        self.initial = CutoffPerturbation() if perturbation is None else perturbation
        self._build(float(t_end), float(cfl))

    # -- construction -------------------------------------------------------
    def _build(self, t_end, cfl):
        grid, flux, src = self.grid, self.flux, self.src
        x = grid.x
        j = grid.n // 2
        self._j = j
        prof = self._phi(x)
        self._prof = prof
        w0 = np.where(x < 0, self.initial.eval(x, 0.0, "left"), self.initial.eval(x, 0.0, "right"))
        U = w0 + prof
        times, Us, ss, sdots = [0.0], [U], [self.s0], []
        s, t, sd_prev = self.s0, 0.0, 0.0
        self._check_traces(U, 0.0)
        while t < t_end - 1e-14:
            speed = float(np.max(np.abs(flux.d1(U)))) + abs(sd_prev)
            dt = cfl * grid.dx / speed
            if src.lipschitz_bound > 0:
                dt = min(dt, 0.5 / src.lipschitz_bound)
            dt = min(dt, t_end - t)
            Uh = source_substep(grid, src, U, 0.5 * dt)
            wm = Uh[j - 1] - prof[j - 1]
            wp = Uh[j] - prof[j]
            if not wm - wp > self.delta_floor:
                raise GapViolationError(
                    f"fitted reference jump {wm - wp:.6g} below floor at t={t:.6g}", t)
            sd = float(shock_speed(flux, wp, wm))
            frame = flux.in_frame(sd)
            F = godunov_flux(frame, Uh, np.roll(Uh, -1))
            F[j - 1] = float(frame.eval(wm))
            Uh = Uh - dt / grid.dx * (F - np.roll(F, 1))
            U = source_substep(grid, src, Uh, 0.5 * dt)
            s += dt * sd
            t += dt
            sd_prev = sd
            times.append(t)
            Us.append(U)
            ss.append(s)
            sdots.append(sd)
        self.times = np.array(times)
        self.U = np.array(Us)
        self.W = self.U - prof
        self.s = np.array(ss)
        self.sdot = np.array(sdots)
        self._Wd1 = np.array([self._side_gradient(w) for w in self.W])

    def _check_traces(self, U, t):
        j = self._j
        wm = U[j - 1] - self._prof[j - 1]
        wp = U[j] - self._prof[j]
        if not wm - wp > self.delta_floor:
            raise GapViolationError(f"fitted reference jump {wm - wp:.6g} below floor at t={t}", t)

    def _side_gradient(self, w):
        # centred differences inside each side, one-sided next to the shock;
        # across the periodic seam the field is smooth
        dx = self.grid.dx
        j = self._j
        g = (np.roll(w, -1) - np.roll(w, 1)) / (2 * dx)
        g[j - 1] = (w[j - 1] - w[j - 2]) / dx
        g[j] = (w[j + 1] - w[j]) / dx
        return g

    # -- time interpolation ---------------------------------------------------
    def _locate(self, t):
        t = float(t)
        if t < -1e-12 or t > self.times[-1] + 1e-12:
            raise PreconditionError(f"time {t} outside the reference horizon [0, {self.times[-1]}]")
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        k = min(max(k, 0), self.times.size - 2)
        span = self.times[k + 1] - self.times[k]
        theta = min(max((t - self.times[k]) / span, 0.0), 1.0)
        return k, theta

    @property
    def t_end(self):
        return float(self.times[-1])

    def shock_position(self, t):
        k, th = self._locate(t)
        return float((1 - th) * self.s[k] + th * self.s[k + 1])

    def shock_velocity(self, t):
        k, th = self._locate(t)
        if th >= 1.0 and k + 1 < self.sdot.size:
            k += 1
        return float(self.sdot[k])

    def traces(self, t):
        k, th = self._locate(t)
        j = self._j
        w = (1 - th) * self.W[k] + th * self.W[k + 1]
        return float(w[j]), float(w[j - 1])

    def _wrap(self, xi):
        L = self.grid.length
        return (xi + 0.5 * L) % L - 0.5 * L

    def _interp_sides(self, arr, xi, left):
        # arr lives on the frame centres; each side is interpolated on its
        # own, extended periodically across the seam and held constant up
        # to the shock
        grid = self.grid
        x = grid.x
        L = grid.length
        j = self._j
        xl = np.concatenate([[x[-1] - L], x[:j], [0.0]])
        vl = np.concatenate([[arr[-1]], arr[:j], [arr[j - 1]]])
        xr = np.concatenate([[0.0], x[j:], [x[0] + L]])
        vr = np.concatenate([[arr[j]], arr[j:], [arr[0]]])
        xi = np.asarray(xi, dtype=float)
        return np.where(left, np.interp(xi, xl, vl), np.interp(xi, xr, vr))

    def _time_blend(self, arrs, t):
        k, th = self._locate(t)
        return (1 - th) * arrs[k] + th * arrs[k + 1]

    def _w(self, xi, t, left):
        return self._interp_sides(self._time_blend(self.W, t), xi, left)

    def _w_d1(self, xi, t, left):
        return self._interp_sides(self._time_blend(self._Wd1, t), xi, left)

    def _w_t(self, xi, t, left):
        k, _ = self._locate(t)
        rate = (self.W[k + 1] - self.W[k]) / (self.times[k + 1] - self.times[k])
        return self._interp_sides(rate, xi, left)


def initial_reference_field(ref, grid, t=0.0):
    """Cell values of the reference at time ``t`` with the shock cell split."""
    return ref.sample_shifted(grid, 0.0, t).cell_values


def bump_perturbation(grid, amplitude, width=2.0, center=0.0, bump=BUMP):
    return amplitude * bump.eval((grid.x - center) / width)
