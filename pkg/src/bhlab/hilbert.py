"""Spectral Hilbert transform and the nonlocal source operators.

The whole line is replaced by a periodic box of length ``L``. Cell centres
sit at ``-L/2 + (i + 1/2) dx``, so ``x = 0`` is a cell interface when ``n``
is even.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, PreconditionError


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid with ``n`` cells on ``[-L/2, L/2)``."""

    n: int
    length: float = 16.0

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise PreconditionError(f"grid size must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise PreconditionError(f"box length must be positive, got {self.length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return -0.5 * self.length + (np.arange(self.n) + 0.5) * self.dx

    @property
    def edges(self):
        return -0.5 * self.length + np.arange(self.n + 1) * self.dx

    @property
    def wavenumbers(self):
        """Integer mode numbers in numpy FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    def wrap(self, x):
        """Map positions into ``[-L/2, L/2)``."""
        L = self.length
        return (np.asarray(x, dtype=float) + 0.5 * L) % L - 0.5 * L

    def refined(self):
        return SpectralGrid(2 * self.n, self.length)


def _values(grid, f):
    arr = np.asarray(getattr(f, "values", f), dtype=float)
    if arr.shape != (grid.n,):
        raise PreconditionError(f"field of shape {arr.shape} does not match grid of {grid.n} cells")
    return arr


def _multiplier(n):
    # rfft modes 0..n/2. The mean and the Nyquist mode have no well-defined
    # sign, so both are annihilated; every other mode gets -i sgn(k).
    m = np.full(n // 2 + 1, -1j)
    m[0] = 0.0
    m[-1] = 0.0
    return m


def hilbert_transform(grid, f):
    """Apply the multiplier ``-i sgn(k)`` to a real periodic field.

    Forward transform unnormalised, inverse divided by ``n`` (numpy's
    convention). The result has zero mean.
    """
    values = _values(grid, f)
    return np.fft.irfft(_multiplier(grid.n) * np.fft.rfft(values), n=grid.n)


def l2_norm(grid, f):
    return float(np.sqrt(grid.dx * np.sum(np.square(f))))


def inner(grid, f, g):
    return float(grid.dx * np.dot(f, g))


def boundary_mass_fraction(grid, f):
    """Share of the squared L2 mass lying outside the middle half of the box."""
    values = _values(grid, f)
    total = np.sum(np.square(values))
    if total == 0.0:
        return 0.0
    outside = np.abs(grid.x) > 0.25 * grid.length
    return float(np.sum(np.square(values[outside])) / total)


@dataclass(frozen=True)
class SourceOperator:
    """The nonlocal source ``G``.

    ``kind`` is ``"hilbert"``, ``"zero"`` or ``"bounded_custom"``. A custom
    operator applies ``func`` pointwise and must declare its Lipschitz
    constant on L2.
    """

    kind: str = "hilbert"
    func: Optional[Callable] = field(default=None, compare=False)
    lipschitz_bound: float = 1.0
    linf_bounded: bool = False

    def __post_init__(self):
        if self.kind not in ("hilbert", "zero", "bounded_custom"):
            raise ConfigurationError(f"unknown source kind {self.kind!r}")


def hilbert_source():
    return SourceOperator("hilbert", None, 1.0, False)


def zero_source():
    return SourceOperator("zero", None, 0.0, True)


def bounded_custom_source(func, lipschitz_bound):
    return SourceOperator("bounded_custom", func, float(lipschitz_bound), True)


def make_source(kind):
    if kind == "hilbert":
        return hilbert_source()
    if kind == "zero":
        return zero_source()
    raise ConfigurationError(
        f"source kind {kind!r} cannot be built from a name; "
        "bounded_custom needs a function, use bounded_custom_source"
    )


def apply_source(op, grid, f):
    """Evaluate ``G(f)`` on the grid."""
    values = _values(grid, f)
    if op.kind == "hilbert":
        return hilbert_transform(grid, values)
    if op.kind == "zero":
        return np.zeros_like(values)
    if op.func is None:
        raise ConfigurationError("bounded_custom source has no function configured")
    return np.asarray(op.func(values), dtype=float) * np.ones_like(values)


def translation_equivariance_check(op, grid, f, shift):
    """Return ``||G(tau f) - tau G(f)||_2`` for a grid-aligned translation.

    ``tau f(x) = f(x - shift)``; ``shift`` must be an integer multiple of
    the cell width.
    """
    values = _values(grid, f)
    cells = shift / grid.dx
    k = int(round(cells))
    if abs(cells - k) > 1e-9 * max(1.0, abs(cells)):
        raise PreconditionError(
            f"shift {shift} is not a multiple of the cell width {grid.dx}"
        )
    lhs = apply_source(op, grid, np.roll(values, k))
    rhs = np.roll(apply_source(op, grid, values), k)
    return l2_norm(grid, lhs - rhs)


def random_bandlimited(grid, rng, modes=None, amplitude=1.0):
    """Random real field whose spectrum is confined to ``|k| < modes``.

    Default band is a quarter of the Nyquist number, so the field is well
    resolved and has no Nyquist content.
    """
    modes = grid.n // 8 if modes is None else int(modes)
    spec = np.zeros(grid.n // 2 + 1, dtype=complex)
    spec[:modes] = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
    spec[0] = spec[0].real
    values = np.fft.irfft(spec, n=grid.n)
    return amplitude * values / np.max(np.abs(values))
