"""First-order Godunov finite volumes with a Strang-split nonlocal source."""
import csv
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError, PreconditionError, ResolutionError
from .hilbert import SpectralGrid, apply_source

CHECKPOINT_MAGIC = b"BHLB"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIQd8x")   # 32 bytes


@dataclass(frozen=True)
class Field:
    """Cell averages on a :class:`SpectralGrid` at a given time."""

    values: np.ndarray
    grid: SpectralGrid
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise PreconditionError(
                f"field has {values.shape} values, grid has {self.grid.n} cells")
        object.__setattr__(self, "values", values)

    def mass(self):
        return float(np.sum(self.values) * self.grid.dx)


@dataclass(frozen=True)
class SchemeConfig:
    cfl: float = 0.5
    splitting: str = "strang"
    limiter: str = "none"
    t_end: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise PreconditionError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.splitting not in ("strang", "lie"):
            raise PreconditionError(f"splitting must be 'strang' or 'lie', got {self.splitting!r}")
        if self.limiter != "none":
            raise PreconditionError("only the first-order scheme (limiter 'none') is available")
        if not self.t_end > 0:
            raise PreconditionError("t_end must be positive")


# ---------------------------------------------------------------------------
# fluxes

def _interval_min(flux, lo, hi):
    c = flux.sonic_point
    if c is None:
        return np.minimum(flux.eval(lo), flux.eval(hi))
    # clip puts the sonic point on an endpoint when it is not strictly inside
    return flux.eval(np.clip(c, lo, hi))


def godunov_flux(flux, u_left, u_right):
    """Exact-Riemann numerical flux of a convex scalar law."""
    uL = np.asarray(u_left, dtype=float)
    uR = np.asarray(u_right, dtype=float)
    lo = np.minimum(uL, uR)
    hi = np.maximum(uL, uR)
    out = np.where(uL <= uR, _interval_min(flux, lo, hi),
                   np.maximum(flux.eval(uL), flux.eval(uR)))
    return float(out) if np.ndim(out) == 0 else out


def godunov_state(flux, u_left, u_right):
    """State of the exact Riemann solution along ``x/t = 0``.

    This is the value whose flux :func:`godunov_flux` returns, and whose
    entropy flux defines the numerical entropy flux.
    """
    uL = np.asarray(u_left, dtype=float)
    uR = np.asarray(u_right, dtype=float)
    c = flux.sonic_point
    A = flux.eval
    # rarefaction: the slowest state with nonnegative speed, or the sonic one
    if c is None:
        rare = np.where(flux.d1(uL) >= 0, uL, uR)
    else:
        rare = np.clip(c, uL, uR)
    # shock: sign of the Rankine-Hugoniot speed picks the upwind side
    diff = uL - uR
    safe = np.where(diff == 0, 1.0, diff)
    s = np.where(diff == 0, flux.d1(uL), (A(uL) - A(uR)) / safe)
    shock = np.where(s >= 0, uL, uR)
    return np.where(uL <= uR, rare, shock)


def interface_fluxes(flux, u):
    """Godunov fluxes ``F[i]`` at the right edge of cell ``i`` (periodic)."""
    return godunov_flux(flux, u, np.roll(u, -1))


def max_speed(flux, values):
    return float(np.max(np.abs(flux.d1(values))))


def stable_dt(state, flux, src, cfg):
    """``cfl dx / max|A'(u)|``, capped by ``0.5 / Lip[G]`` for the source."""
    speed = max_speed(flux, state.values)
    dt = cfg.cfl * state.grid.dx / speed if speed > 0 else np.inf
    if src.lipschitz_bound > 0:
        dt = min(dt, 0.5 / src.lipschitz_bound)
    if not np.isfinite(dt):
        dt = cfg.t_end
    return dt


def source_substep(grid, src, values, dt):
    """Explicit midpoint step of ``du/dt = G(u)``."""
    if src.kind == "zero":
        return values
    mid = values + 0.5 * dt * apply_source(src, grid, values)
    return values + dt * apply_source(src, grid, mid)


def hyperbolic_substep(grid, flux, values, dt):
    F = interface_fluxes(flux, values)
    return values - dt / grid.dx * (F - np.roll(F, 1))


def step(state, pair, src, cfg, dt=None):
    """Advance one split step and return the new :class:`Field`.

    With ``strang`` splitting: half source step, full Godunov step, half
    source step. ``lie`` does a full source step followed by Godunov.
    """
    flux = getattr(pair, "flux", pair)
    if dt is None:
        dt = stable_dt(state, flux, src, cfg)
    speed = max_speed(flux, state.values)
    if speed * dt > state.grid.dx * (1.0 + 1e-12):
        raise PreconditionError(f"dt={dt} violates the CFL limit at t={state.time}")
    grid = state.grid
    u = state.values
    if cfg.splitting == "strang":
        u = source_substep(grid, src, u, 0.5 * dt)
        u = hyperbolic_substep(grid, flux, u, dt)
        u = source_substep(grid, src, u, 0.5 * dt)
    else:
        u = source_substep(grid, src, u, dt)
        u = hyperbolic_substep(grid, flux, u, dt)
    t_new = state.time + dt
    if not np.all(np.isfinite(u)) or np.any(np.abs(u) > flux.bound):
        raise BlowUpError(f"state left [-{flux.bound}, {flux.bound}] at t={t_new:.6g}", t_new)
    return Field(u, grid, t_new)


@dataclass
class Trajectory:
    """Every state of a run, one per solver step."""

    states: list

    @property
    def times(self):
        return np.array([s.time for s in self.states])

    @property
    def grid(self):
        return self.states[0].grid

    def values(self):
        return np.array([s.values for s in self.states])


def evolve(state, pair, src, cfg, t_end=None, max_steps=10 ** 7):
    """Run to ``t_end`` (default ``cfg.t_end``) storing every step."""
    t_end = cfg.t_end if t_end is None else t_end
    flux = getattr(pair, "flux", pair)
    states = [state]
    for _ in range(max_steps):
        if state.time >= t_end - 1e-14:
            break
        dt = min(stable_dt(state, flux, src, cfg), t_end - state.time)
        state = step(state, pair, src, cfg, dt)
        states.append(state)
    return Trajectory(states)


# ---------------------------------------------------------------------------
# diagnostics

def entropy_residual(state_before, state_after, pair, src, dt=None):
    """Cell-wise residual of the discrete entropy balance.

    ``(eta(u1) - eta(u0))/dt + (Q[i] - Q[i-1])/dx - eta'(u0) G(u0)`` where
    ``Q = q(u*)`` uses the Godunov interface state of the old data. A
    positive value flags entropy production the scheme did not dissipate.
    """
    dt = state_after.time - state_before.time if dt is None else dt
    grid = state_before.grid
    u0 = state_before.values
    u1 = state_after.values
    star = godunov_state(pair.flux, u0, np.roll(u0, -1))
    Q = pair.q(star)
    source = pair.eta_d1(u0) * apply_source(src, grid, u0)
    return (pair.eta(u1) - pair.eta(u0)) / dt + (Q - np.roll(Q, 1)) / grid.dx - source


@dataclass
class TraceReport:
    value: float
    widths: np.ndarray
    averages: np.ndarray
    gaps: np.ndarray      # successive differences of the averages


def window_average(state, a, b):
    """Exact average of the piecewise-constant field over ``[a, b]``."""
    grid = state.grid
    if b <= a:
        raise PreconditionError("window must have positive width")
    edges = grid.edges
    L = grid.length
    total = 0.0
    # split the window into pieces that do not cross the periodic seam
    start = a
    while start < b - 1e-15:
        base = np.floor((start + 0.5 * L) / L)
        offset = base * L
        stop = min(b, offset + 0.5 * L)
        lo, hi = start - offset, stop - offset
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        total += float(np.dot(overlap, state.values))
        start = stop
    return total / (b - a)


def strong_trace(state, x0, side, widths, skip=0.0):
    """One-sided window averages at ``x0`` and their extrapolated limit.

    Windows are ``[x0 + skip, x0 + skip + w]`` on the right or the mirror
    image on the left. The limit is the intercept of a least-squares line
    through ``(w, average)``; with a single width it is that average.
    """
    widths = np.asarray(widths, dtype=float)
    grid = state.grid
    if np.any(widths < grid.dx * (1 - 1e-12)):
        raise ResolutionError(f"window narrower than a cell (dx={grid.dx})")
    if side not in ("left", "right"):
        raise PreconditionError("side must be 'left' or 'right'")
    if side == "right":
        avgs = np.array([window_average(state, x0 + skip, x0 + skip + w) for w in widths])
    else:
        avgs = np.array([window_average(state, x0 - skip - w, x0 - skip) for w in widths])
    if widths.size > 1:
        value = float(np.polyfit(widths, avgs, 1)[1])
    else:
        value = float(avgs[0])
    return TraceReport(value, widths, avgs, np.abs(np.diff(avgs)))


def front_position(state, u_left, u_right, near=None):
    """Where the field crosses ``(u_left + u_right)/2``, by linear interpolation.

    Among all crossings with the right orientation, returns the one nearest
    to ``near`` (default: the first one).
    """
    mid = 0.5 * (u_left + u_right)
    u = state.values
    x = state.grid.x
    sign = np.sign(u - mid)
    if u_left > u_right:
        idx = np.nonzero((sign[:-1] >= 0) & (sign[1:] < 0))[0]
    else:
        idx = np.nonzero((sign[:-1] <= 0) & (sign[1:] > 0))[0]
    if idx.size == 0:
        raise PreconditionError("field never crosses the midpoint value")
    pos = x[idx] + (mid - u[idx]) / (u[idx + 1] - u[idx]) * (x[idx + 1] - x[idx])
    if near is None:
        return float(pos[0])
    return float(pos[np.argmin(np.abs(pos - near))])


def riemann_exact(flux, u_left, u_right, x, t, x0=0.0):
    """Self-similar solution of a convex Riemann problem at time ``t``."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x0, u_left, u_right).astype(float)
    xi = (x - x0) / t
    if u_left > u_right:
        s = (flux.eval(u_left) - flux.eval(u_right)) / (u_left - u_right)
        return np.where(xi < s, u_left, u_right).astype(float)
    if u_left == u_right:
        return np.full_like(x, float(u_left))
    if flux.d1_inverse is None:
        raise PreconditionError("rarefaction needs the inverse of A'")
    aL, aR = flux.d1(u_left), flux.d1(u_right)
    inside = np.clip(xi, aL, aR)
    fan = flux.d1_inverse(inside)
    return np.where(xi <= aL, u_left, np.where(xi >= aR, u_right, fan)).astype(float)


def riemann_field(grid, flux, u_left, u_right, x0=0.0, t=0.0):
    """Cell averages of the Riemann solution (exact for the step at ``t=0``)."""
    if t == 0.0:
        edges = grid.edges
        frac = np.clip((x0 - edges[:-1]) / grid.dx, 0.0, 1.0)
        return Field(frac * u_left + (1 - frac) * u_right, grid, 0.0)
    fine = 16
    xs = grid.edges[:-1, None] + (np.arange(fine) + 0.5) / fine * grid.dx
    return Field(riemann_exact(flux, u_left, u_right, xs, t, x0).mean(axis=1), grid, t)


# ---------------------------------------------------------------------------
# serialisation

def write_checkpoint(path, state):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, state.grid.n, state.time))
        fh.write(np.asarray(state.values, dtype="<f8").tobytes())


def read_checkpoint(path, length=16.0):
    """Load a checkpoint; the box length is not stored and must be supplied."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise PreconditionError("checkpoint shorter than its header")
    magic, version, n, time = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise PreconditionError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise PreconditionError(f"unsupported checkpoint version {version}")
    payload = blob[_HEADER.size:]
    if len(payload) != 8 * n:
        raise PreconditionError(f"checkpoint payload has {len(payload)} bytes, expected {8 * n}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    return Field(values, SpectralGrid(int(n), length), float(time))


def write_field_csv(path, state):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for x, u in zip(state.grid.x, state.values):
            w.writerow([f"{x:.17g}", f"{u:.17g}"])


def with_time(state, time):
    return replace(state, time=float(time))
