"""Shock dissipation functional, its interval rewrite and the negativity bound.

Notation: ``u_plus``/``u_minus`` are the right/left traces of the rough
solution, ``ubar_plus``/``ubar_minus`` those of the reference. A quadruple
is Lax admissible when ``u_minus >= u_plus`` and ``ubar_minus >= ubar_plus``.
"""
import csv
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .calculus import relative_entropy, relative_entropy_flux, shock_speed
from .errors import PreconditionError, QuadratureError
from .quadrature import adaptive_simpson


@dataclass(frozen=True)
class ShockQuadruple:
    u_plus: float
    u_minus: float
    ubar_plus: float
    ubar_minus: float
    delta: float = 0.0
    bound: float = 8.0

    def as_tuple(self):
        return (self.u_plus, self.u_minus, self.ubar_plus, self.ubar_minus)

    def validate(self, require_gap=True):
        """Raise :class:`PreconditionError` unless the invariants hold."""
        vals = np.array(self.as_tuple(), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("quadruple has non-finite entries")
        if np.any(np.abs(vals) > self.bound):
            raise PreconditionError(f"quadruple {tuple(vals)} leaves [-{self.bound}, {self.bound}]")
        if self.u_minus < self.u_plus:
            raise PreconditionError("rough discontinuity is not Lax admissible (u_minus < u_plus)")
        if self.ubar_minus < self.ubar_plus:
            raise PreconditionError("reference discontinuity has ubar_minus < ubar_plus")
        if require_gap:
            if not self.delta > 0:
                raise PreconditionError("gap parameter delta must be positive")
            if self.ubar_minus - self.ubar_plus < self.delta:
                raise PreconditionError(
                    f"reference jump {self.ubar_minus - self.ubar_plus:.6g} below gap {self.delta}"
                )
        return self


@dataclass(frozen=True)
class IntervalDecomposition:
    """Two disjoint open intervals covering the symmetric difference.

    An empty interval is stored as ``None``; its sign is then irrelevant
    and set to ``+1``.
    """

    I: tuple | None
    J: tuple | None
    eps_I: int
    eps_J: int
    case: str


def _traces(q4):
    if isinstance(q4, ShockQuadruple):
        return q4.as_tuple()
    return tuple(q4)


def dissipation_direct(pair, q4, speed=None):
    """``q(u+;ub+) - q(u-;ub-) - s (eta(u+|ub+) - eta(u-|ub-))``.

    ``s`` defaults to the Rankine-Hugoniot speed of ``(u+, u-)``; passing
    ``speed`` replaces it (the ledger uses the path velocity). Works on
    arrays of traces as well.
    """
    up, um, vp, vm = (np.asarray(t, dtype=float) for t in _traces(q4))
    sigma = shock_speed(pair.flux, up, um) if speed is None else np.asarray(speed, dtype=float)
    out = (relative_entropy_flux(pair, up, vp) - relative_entropy_flux(pair, um, vm)
           - sigma * (relative_entropy(pair, up, vp) - relative_entropy(pair, um, vm)))
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _case_label(up, um, vp, vm):
    if up == vp and um == vm:
        return "identical"
    if um <= vp or vm <= up:
        return "disjoint"
    left = "u+<=ubar+" if up <= vp else "ubar+<=u+"
    right = "ubar-<=u-" if vm <= um else "u-<=ubar-"
    return f"{left},{right}"


def decompose_intervals(q4):
    """Symmetric difference of ``(u+, u-)`` and ``(ub+, ub-)`` with signs.

    The sign of a piece is ``+1`` when it lies inside the rough interval
    ``(u+, u-)`` and ``-1`` when it lies inside the reference interval.
    """
    up, um, vp, vm = (float(t) for t in _traces(q4))
    case = _case_label(up, um, vp, vm)
    if case == "identical":
        return IntervalDecomposition(None, None, 1, 1, case)
    if case == "disjoint":
        rough = (up, um) if um > up else None
        ref = (vp, vm) if vm > vp else None
        return IntervalDecomposition(rough, ref, 1, -1, case)
    I = (min(up, vp), max(up, vp)) if up != vp else None
    J = (min(um, vm), max(um, vm)) if um != vm else None
    eps_I = 1 if up < vp else -1
    eps_J = 1 if um > vm else -1
    return IntervalDecomposition(I, J, eps_I if I else 1, eps_J if J else 1, case)


def interval_integral(pair, sigma, u_plus, interval, tol=1e-10):
    """``B(I) = int_I eta''(u) [(A(u) - s u) - (A(u+) - s u+)] du``."""
    if interval is None:
        return 0.0, 0.0
    A = pair.flux.eval
    base = float(A(u_plus)) - sigma * u_plus

    def integrand(u):
        return float(pair.eta_d2(u)) * (float(A(u)) - sigma * u - base)

    res = adaptive_simpson(integrand, interval[0], interval[1], tol=tol)
    return res.value, res.error


def dissipation_interval_form(pair, q4, tol=1e-10, return_error=False):
    """``eps(I) B(I) + eps(J) B(J)`` by adaptive Simpson quadrature.

    Raises :class:`QuadratureError` (with the achieved error attached) if the
    quadrature cannot meet ``tol``.
    """
    up, um, vp, vm = (float(t) for t in _traces(q4))
    pair.flux.check(up, um, vp, vm)
    if vm < vp:
        raise PreconditionError("interval form needs ubar_minus >= ubar_plus")
    dec = decompose_intervals((up, um, vp, vm))
    sigma = float(shock_speed(pair.flux, up, um))
    bI, eI = interval_integral(pair, sigma, up, dec.I, tol)
    bJ, eJ = interval_integral(pair, sigma, up, dec.J, tol)
    value = dec.eps_I * bI + dec.eps_J * bJ
    if return_error:
        return value, eI + eJ
    return value


@dataclass(frozen=True)
class LaxCheck:
    entropic: bool
    margin: float


def lax_margin(pair, u_left, u_right):
    """``q(uR) - q(uL) - s (eta(uR) - eta(uL))`` with the shock speed ``s``."""
    pair.flux.check(u_left, u_right)
    uL = np.asarray(u_left, dtype=float)
    uR = np.asarray(u_right, dtype=float)
    sigma = shock_speed(pair.flux, uL, uR)
    out = pair.q(uR) - pair.q(uL) - sigma * (pair.eta(uR) - pair.eta(uL))
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def lax_entropic_check(pair, u_left, u_right):
    """Entropy admissibility of the jump ``u_left -> u_right``."""
    margin = lax_margin(pair, u_left, u_right)
    return LaxCheck(bool(margin <= 0.0), float(margin))


def negativity_margin(pair, q4):
    """Return ``(D, -D / ((u+ - ub+)**2 + (u- - ub-)**2))``.

    The ratio is ``+inf`` when the denominator vanishes.
    """
    if not isinstance(q4, ShockQuadruple):
        raise PreconditionError("negativity_margin needs a ShockQuadruple with delta and bound")
    q4.validate(require_gap=True)
    D = dissipation_direct(pair, q4)
    denom = (q4.u_plus - q4.ubar_plus) ** 2 + (q4.u_minus - q4.ubar_minus) ** 2
    if denom == 0.0:
        return 0.0, float("inf")
    return D, -D / denom


def negativity_ratios(pair, quads):
    """Vectorised ratios for an ``(m, 4)`` array of quadruples."""
    quads = np.asarray(quads, dtype=float)
    up, um, vp, vm = quads.T
    D = dissipation_direct(pair, (up, um, vp, vm))
    denom = (up - vp) ** 2 + (um - vm) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, -D / np.where(denom > 0, denom, 1.0), np.inf)
    return D, ratio


def f_integral(u_plus, u_minus, a, b):
    """``F(a, b) = int_a^b (u - u+)(u - u-) du`` expanded about ``u+``."""
    p = b - u_plus
    q = a - u_plus
    d = u_plus - u_minus
    return (p ** 3 - q ** 3) / 3.0 + d * (p ** 2 - q ** 2) / 2.0


def f_integral_minus(u_plus, u_minus, a, b):
    """Same integral expanded about ``u-``; equal to :func:`f_integral`."""
    return f_integral(u_minus, u_plus, a, b)


# ---------------------------------------------------------------------------
# sampling

def lax_quadruples(rng, count, bound):
    """Uniform Lax-admissible quadruples in ``[-bound, bound]`` (no gap)."""
    raw = rng.uniform(-bound, bound, size=(count, 4))
    up = np.minimum(raw[:, 0], raw[:, 1])
    um = np.maximum(raw[:, 0], raw[:, 1])
    vp = np.minimum(raw[:, 2], raw[:, 3])
    vm = np.maximum(raw[:, 2], raw[:, 3])
    return np.column_stack([up, um, vp, vm])


def _map_unit(cube, delta, bound):
    # (ubar+, ubar-, u+, u-) from a point of the unit cube, covering the whole
    # valid set: ubar- - ubar+ >= delta, u- >= u+, all in [-B, B]
    B = bound
    vp = -B + cube[:, 0] * (2 * B - delta)
    vm = vp + delta + cube[:, 1] * (B - vp - delta)
    up = -B + cube[:, 2] * 2 * B
    um = up + cube[:, 3] * (B - up)
    return np.column_stack([up, um, vp, vm])


def corner_quadruples(delta, bound, spacing=None):
    """All valid quadruples on a lattice containing the set's corners.

    The lattice has nodes at ``-B``, ``B`` and every multiple of ``spacing``
    (default ``delta/2``) between them, so every boundary configuration of
    the ordering cases appears.
    """
    spacing = 0.5 * delta if spacing is None else spacing
    nodes = np.unique(np.concatenate([
        np.arange(-bound, bound + 0.5 * spacing, spacing), [-bound, bound]]))
    nodes = nodes[np.abs(nodes) <= bound]
    grid = np.array(list(itertools.product(nodes, repeat=4)))
    up, um, vp, vm = grid.T
    ok = (um >= up) & (vm - vp >= delta - 1e-12)
    return grid[ok]


def sample_valid_quadruples(rng, count, delta, bound):
    """Latin-hypercube sample of the valid set."""
    sampler = qmc.LatinHypercube(d=4, seed=rng)
    return _map_unit(sampler.random(count), delta, bound)


@dataclass
class NegativitySample:
    quadruples: np.ndarray
    D: np.ndarray
    ratio: np.ndarray
    c_est: float
    argmin: int
    density: int


def estimate_negativity_constant(pair, delta, bound, count, rng, include_corners=True):
    """Sampled minimum of the negativity ratio.

    ``count`` Latin-hypercube points plus (optionally) the corner lattice.
    Quadruples with zero denominator are kept in the table with ratio +inf.
    """
    quads = sample_valid_quadruples(rng, count, delta, bound)
    if include_corners:
        quads = np.vstack([quads, corner_quadruples(delta, bound)])
    D, ratio = negativity_ratios(pair, quads)
    i = int(np.argmin(ratio))
    return NegativitySample(quads, D, ratio, float(ratio[i]), i, count)


def case_labels(quads):
    return [_case_label(*map(float, q)) for q in quads]


def write_sampling_csv(path, sample):
    """CSV with one row per quadruple: traces, D, ratio, ordering case."""
    labels = case_labels(sample.quadruples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u_plus", "u_minus", "ubar_plus", "ubar_minus", "D", "ratio", "case"])
        for q, d, r, lab in zip(sample.quadruples, sample.D, sample.ratio, labels):
            w.writerow([*(f"{v:.17g}" for v in q), f"{d:.17g}", f"{r:.17g}", lab])
