"""Flux/entropy pairs and pointwise relative quantities.

Every function here is vectorised: scalars and numpy arrays are accepted
interchangeably, and a scalar input gives a Python float back.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

DEFAULT_BOUND = 8.0

# Gauss-Legendre nodes on [0, 1], used for the cancellation-free form of
# the divided difference in the differentiability check.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class ConvexFlux:
    """A strictly convex flux ``A`` with analytic derivatives.

    Parameters
    ----------
    name : str
        Identifier used in configs and reports.
    eval, d1, d2 : callable
        ``A``, ``A'`` and ``A''``; all must accept numpy arrays.
    bound : float
        States are admissible in ``[-bound, bound]``.
    d1_inverse : callable, optional
        Inverse of ``A'``. Needed for exact rarefactions and for moving
        frame fluxes.
    d3 : callable, optional
        ``A'''`` when available; only used for diagnostics.
    """

    name: str
    eval: Callable
    d1: Callable
    d2: Callable
    bound: float = DEFAULT_BOUND
    d1_inverse: Optional[Callable] = None
    d3: Optional[Callable] = None

    def check(self, *values):
        """Raise :class:`DomainError` if any value lies outside the range."""
        for v in values:
            a = np.asarray(v, dtype=float)
            if a.size and not np.all(np.abs(a) <= self.bound):
                worst = float(np.nanmax(np.abs(a))) if np.any(np.isfinite(a)) else float("nan")
                raise DomainError(
                    f"state {worst:.6g} outside admissible range [-{self.bound}, {self.bound}]"
                )

    @property
    def sonic_point(self):
        """State where ``A'`` vanishes, or ``None`` if ``A'`` never does."""
        if self.d1_inverse is None:
            return None
        try:
            value = float(self.d1_inverse(0.0))
        except (ValueError, FloatingPointError):
            return None
        return value if np.isfinite(value) else None

    def with_bound(self, bound):
        return ConvexFlux(self.name, self.eval, self.d1, self.d2, float(bound),
                          self.d1_inverse, self.d3)

    def in_frame(self, speed):
        """Flux ``A(u) - speed*u`` seen by an observer moving at ``speed``."""
        c = float(speed)
        inv = None
        if self.d1_inverse is not None:
            base_inv = self.d1_inverse
            inv = lambda y: base_inv(np.asarray(y, dtype=float) + c)
        return ConvexFlux(
            f"{self.name}-frame",
            lambda u: self.eval(u) - c * np.asarray(u, dtype=float),
            lambda u: self.d1(u) - c,
            self.d2,
            self.bound,
            inv,
            self.d3,
        )


@dataclass(frozen=True)
class EntropyFluxPair:
    """A convex entropy ``eta`` with entropy flux ``q`` for a flux ``A``.

    The entropy flux satisfies ``q' = A' eta'``.
    """

    flux: ConvexFlux
    eta: Callable
    eta_d1: Callable
    eta_d2: Callable
    q: Callable
    name: str = ""

    @property
    def bound(self):
        return self.flux.bound

    def with_bound(self, bound):
        return EntropyFluxPair(self.flux.with_bound(bound), self.eta, self.eta_d1,
                               self.eta_d2, self.q, self.name)


# ---------------------------------------------------------------------------
# built-in fluxes and pairs

def burgers_flux(bound=DEFAULT_BOUND):
    return ConvexFlux(
        "burgers",
        lambda u: 0.5 * np.square(u),
        lambda u: np.asarray(u, dtype=float) * 1.0,
        lambda u: np.ones_like(np.asarray(u, dtype=float)),
        float(bound),
        d1_inverse=lambda y: np.asarray(y, dtype=float) * 1.0,
        d3=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
    )


def quartic_flux(bound=DEFAULT_BOUND):
    """``A(u) = u**4``; convex, with ``A''`` vanishing only at the origin."""
    return ConvexFlux(
        "quartic",
        lambda u: np.asarray(u, dtype=float) ** 4,
        lambda u: 4.0 * np.asarray(u, dtype=float) ** 3,
        lambda u: 12.0 * np.square(u),
        float(bound),
        d1_inverse=lambda y: np.cbrt(np.asarray(y, dtype=float) / 4.0),
        d3=lambda u: 24.0 * np.asarray(u, dtype=float),
    )


def exponential_flux(bound=DEFAULT_BOUND):
    """``A(u) = exp(u)``; strictly convex with no sonic point."""
    def inv(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y > 0, np.log(np.where(y > 0, y, 1.0)), np.nan)

    return ConvexFlux("exponential", np.exp, np.exp, np.exp, float(bound),
                      d1_inverse=inv, d3=np.exp)


def _quadratic_entropy(flux, q, name):
    return EntropyFluxPair(
        flux,
        lambda u: 0.5 * np.square(u),
        lambda u: np.asarray(u, dtype=float) * 1.0,
        lambda u: np.ones_like(np.asarray(u, dtype=float)),
        q,
        name,
    )


def burgers_pair(bound=DEFAULT_BOUND):
    """Burgers flux with the quadratic entropy; ``q = u**3/3``."""
    return _quadratic_entropy(burgers_flux(bound),
                              lambda u: np.asarray(u, dtype=float) ** 3 / 3.0,
                              "burgers-quadratic")


def quartic_entropy_pair(bound=DEFAULT_BOUND):
    """Burgers flux with ``eta = u**4``; ``q = 4 u**5 / 5``."""
    return EntropyFluxPair(
        burgers_flux(bound),
        lambda u: np.asarray(u, dtype=float) ** 4,
        lambda u: 4.0 * np.asarray(u, dtype=float) ** 3,
        lambda u: 12.0 * np.square(u),
        lambda u: 0.8 * np.asarray(u, dtype=float) ** 5,
        "burgers-quartic",
    )


def quartic_flux_pair(bound=DEFAULT_BOUND):
    """``A = u**4`` with the quadratic entropy; ``q = 4 u**5 / 5``."""
    return _quadratic_entropy(quartic_flux(bound),
                              lambda u: 0.8 * np.asarray(u, dtype=float) ** 5,
                              "quartic-quadratic")


FLUXES = {
    "burgers": burgers_flux,
    "quartic": quartic_flux,
    "exponential": exponential_flux,
}

PAIRS = {
    "burgers-quadratic": burgers_pair,
    "burgers-quartic": quartic_entropy_pair,
    "quartic-quadratic": quartic_flux_pair,
}


def get_pair(name, bound=DEFAULT_BOUND):
    try:
        return PAIRS[name](bound)
    except KeyError:
        raise KeyError(f"unknown entropy/flux pair {name!r}; known: {sorted(PAIRS)}") from None


# ---------------------------------------------------------------------------
# relative quantities

def relative_entropy(pair, u, v):
    """``eta(u|v) = eta(u) - eta(v) - eta'(v)(u - v)``."""
    pair.flux.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return _out(pair.eta(u) - pair.eta(v) - pair.eta_d1(v) * (u - v))


def relative_entropy_flux(pair, u, v):
    """``q(u;v) = q(u) - q(v) - eta'(v)(A(u) - A(v))``."""
    pair.flux.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    A = pair.flux.eval
    return _out(pair.q(u) - pair.q(v) - pair.eta_d1(v) * (A(u) - A(v)))


def relative_flux(flux_or_pair, u, v):
    """``A(u|v) = A(u) - A(v) - A'(v)(u - v)``; accepts a flux or a pair."""
    flux = getattr(flux_or_pair, "flux", flux_or_pair)
    flux.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return _out(flux.eval(u) - flux.eval(v) - flux.d1(v) * (u - v))


def relative_entropy_d1(pair, u, v):
    """``eta'(u|v) = eta'(u) - eta'(v) - eta''(v)(u - v)``."""
    pair.flux.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return _out(pair.eta_d1(u) - pair.eta_d1(v) - pair.eta_d2(v) * (u - v))


def shock_speed(flux, v, w):
    """Divided difference of the flux, equal to ``A'(v)`` on the diagonal.

    Close to the diagonal the quotient loses digits to cancellation, so
    pairs closer than ``1e-3`` (relative) use the Gauss-Legendre integral of
    ``A'`` instead. Arguments are ordered first, which keeps the result
    exactly symmetric.
    """
    flux = getattr(flux, "flux", flux)
    flux.check(v, w)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    lo, hi = np.minimum(v, w), np.maximum(v, w)
    diff = hi - lo
    near = diff <= _NEAR * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    safe = np.where(near, 1.0, diff)
    quotient = (flux.eval(hi) - flux.eval(lo)) / safe
    if np.any(near):
        quotient = np.where(near, _sigma_smooth(flux, hi, lo), quotient)
    return _out(quotient)


_NEAR = 1e-3


def _sigma_smooth(flux, v, w):
    # integral form of the divided difference; free of cancellation near
    # the diagonal, which the finite-difference study needs
    v = np.asarray(v, dtype=float)[..., None]
    w = np.asarray(w, dtype=float)[..., None]
    return np.sum(_GL_W * flux.d1(w + _GL_X * (v - w)), axis=-1)


def sigma_partial_v(flux, v, w):
    """Analytic ``d sigma / d v``, computed as the integral of ``theta A''``."""
    v = np.asarray(v, dtype=float)[..., None]
    w = np.asarray(w, dtype=float)[..., None]
    return _out(np.sum(_GL_W * _GL_X * flux.d2(w + _GL_X * (v - w)), axis=-1))


def sup_sigma_partial(flux, lo, hi, samples=201):
    """Dense-sample estimate of ``sup |d sigma/d v|`` over ``[lo, hi]**2``."""
    grid = np.linspace(lo, hi, samples)
    V, W = np.meshgrid(grid, grid)
    return float(np.max(np.abs(sigma_partial_v(flux, V, W))))


@dataclass
class SigmaC1Report:
    x0: float
    target: float
    steps: np.ndarray
    directions: tuple
    estimates: np.ndarray       # shape (len(directions), len(steps))
    errors: np.ndarray
    orders: np.ndarray          # observed order per direction
    passed: bool


SIGMA_DIRECTIONS = ((1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -2.0))


def sigma_c1_check(flux, x0, h_list=(1e-2, 1e-3, 1e-4, 1e-5), min_order=0.9,
                   exact_tol=1e-10, directions=SIGMA_DIRECTIONS):
    """Finite-difference study of ``d sigma/d v`` near the diagonal.

    For each direction ``(a, b)`` and step ``h`` the point
    ``(x0 + a h, x0 + b h)`` is approached and a centred difference in the
    first slot (step ``h/4``) estimates ``d sigma / d v``. The target is
    ``A''(x0)/2``. The check passes when the observed order, fitted over the
    step ladder, is at least ``min_order`` for every direction, or when all
    errors of a direction sit below ``exact_tol`` or the rounding floor
    ``64 eps (1 + |sigma|) / k`` of the difference quotient (flux whose
    divided difference is affine, so only rounding is left).
    """
    x0 = float(x0)
    flux.check(x0)
    steps = np.asarray(h_list, dtype=float)
    target = 0.5 * float(flux.d2(x0))
    est = np.empty((len(directions), steps.size))
    for i, (a, b) in enumerate(directions):
        v = x0 + a * steps
        w = x0 + b * steps
        k = 0.25 * steps
        est[i] = (_sigma_smooth(flux, v + k, w) - _sigma_smooth(flux, v - k, w)) / (2 * k)
    err = np.abs(est - target)
    scale = 1.0 + abs(float(shock_speed(flux, x0, x0)))
    floor = np.maximum(exact_tol * max(1.0, abs(target)),
                       64 * np.finfo(float).eps * scale / (0.25 * steps))
    orders = np.empty(len(directions))
    ok = True
    for i in range(len(directions)):
        if np.all(err[i] <= floor):
            orders[i] = np.inf
            continue
        good = err[i] > 0
        slope = np.polyfit(np.log(steps[good]), np.log(err[i][good]), 1)[0]
        orders[i] = slope
        ok = ok and slope >= min_order
    return SigmaC1Report(x0, target, steps, tuple(directions), est, err, orders, bool(ok))


# ---------------------------------------------------------------------------
# contract checks

def comparability_constants(pair, lo=None, hi=None, samples=4001):
    """``(c_star, c_2star)``: half the min and max of ``eta''`` on a range."""
    lo = -pair.bound if lo is None else lo
    hi = pair.bound if hi is None else hi
    d2 = pair.eta_d2(np.linspace(lo, hi, samples))
    return 0.5 * float(np.min(d2)), 0.5 * float(np.max(d2))


def flux_convexity_constants(flux, lo=None, hi=None, samples=4001):
    """Min and max of ``A''`` on a range."""
    lo = -flux.bound if lo is None else lo
    hi = flux.bound if hi is None else hi
    d2 = flux.d2(np.linspace(lo, hi, samples))
    return float(np.min(d2)), float(np.max(d2))


def validate_pair(pair, samples=801, rel_tol=1e-6):
    """Check the pair's analytic derivatives against finite differences.

    Returns a dict of booleans: ``flux_d1`` (``A'`` matches ``A``),
    ``compatibility`` (``q' = A' eta'``), ``flux_convex`` and
    ``entropy_convex`` (second derivatives nonnegative, positive away from
    isolated points).
    """
    B = pair.bound
    u = np.linspace(-B, B, samples)
    h = 1e-5 * max(1.0, B)
    uu = u[(u - h >= -B) & (u + h <= B)]
    A, q = pair.flux.eval, pair.q

    def close(a, b):
        scale = np.maximum(1.0, np.abs(b))
        return bool(np.all(np.abs(a - b) <= rel_tol * scale))

    fd_A = (A(uu + h) - A(uu - h)) / (2 * h)
    fd_q = (q(uu + h) - q(uu - h)) / (2 * h)
    d2A = pair.flux.d2(u)
    d2e = pair.eta_d2(u)
    return {
        "flux_d1": close(fd_A, pair.flux.d1(uu)),
        "compatibility": close(fd_q, pair.flux.d1(uu) * pair.eta_d1(uu)),
        "flux_convex": bool(np.all(d2A >= 0) and np.mean(d2A > 0) > 0.99),
        "entropy_convex": bool(np.all(d2e >= 0) and np.mean(d2e > 0) > 0.99),
    }
