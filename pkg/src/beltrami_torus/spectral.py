"""Periodic grids, Fourier transforms and the exact spectral operators on the torus.

Fields live on a uniform ``n x n`` grid over the square ``[0, period)^2``.
Axis 0 carries ``x1`` (real part of ``z``), axis 1 carries ``x2``.  Fourier
coefficients are normalized so that the constant field 1 has coefficient 1
at mode ``(0, 0)``; with that convention the L2 norm below is the root mean
square of the samples.
"""
from __future__ import annotations

import enum
import functools
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "InvalidInputError",
    "PeriodicGrid",
    "PeriodicField",
    "SpectralField",
    "Symbol",
    "to_spectral",
    "to_physical",
    "apply_symbol",
    "multiply_dealiased",
    "sobolev_norm",
    "l2_norm",
    "trig_eval",
    "trig_eval_tensor",
]

MAX_SOBOLEV_ORDER = 8


class InvalidInputError(ValueError):
    """Raised when a field or grid violates its invariants."""


def fft_workers() -> int:
    """Worker count for scipy.fft, overridable through ``BELTRAMI_THREADS``."""
    try:
        return max(1, int(os.environ.get("BELTRAMI_THREADS", "1")))
    except ValueError:
        return 1


def fft2(values: np.ndarray) -> np.ndarray:
    n0, n1 = values.shape[-2:]
    return sfft.fft2(values, workers=fft_workers()) / (n0 * n1)


def ifft2(coeffs: np.ndarray) -> np.ndarray:
    n0, n1 = coeffs.shape[-2:]
    return sfft.ifft2(coeffs * (n0 * n1), workers=fft_workers())


@dataclass(frozen=True)
class PeriodicGrid:
    n: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 4 or self.n % 2:
            raise InvalidInputError(f"grid size must be an even integer >= 4, got {self.n!r}")
        if not (np.isfinite(self.period) and self.period > 0):
            raise InvalidInputError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "period", float(self.period))

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def scale(self) -> float:
        """Wavenumber of mode 1: ``2*pi / period``."""
        return 2 * np.pi / self.period

    def coords(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def z(self) -> np.ndarray:
        x1, x2 = self.mesh()
        return x1 + 1j * x2

    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer mode indices ``(m1, m2)`` in FFT order, each in ``[-n/2, n/2)``."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.meshgrid(m, m, indexing="ij")

    def dealias_mask(self) -> np.ndarray:
        """True on the retained 2/3 band, ``3 * max(|m1|, |m2|) < n``."""
        m1, m2 = self.modes()
        return 3 * np.maximum(np.abs(m1), np.abs(m2)) < self.n

    def nyquist_mask(self) -> np.ndarray:
        m1, m2 = self.modes()
        return (m1 == -self.n // 2) | (m2 == -self.n // 2)


@dataclass(frozen=True, eq=False)
class PeriodicField:
    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        n = self.grid.n
        if v.size != n * n:
            raise InvalidInputError(f"expected {n * n} samples, got {v.size}")
        v = v.reshape(n, n)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("field contains non-finite samples")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "PeriodicField":
        """Sample ``fn(x1, x2)`` on the grid."""
        x1, x2 = grid.mesh()
        return cls(grid, np.broadcast_to(fn(x1, x2), (grid.n, grid.n)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, c: complex) -> "PeriodicField":
        return cls(grid, np.full((grid.n, grid.n), c, dtype=complex))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def __add__(self, other: "PeriodicField") -> "PeriodicField":
        _check_same_grid(self.grid, other.grid)
        return PeriodicField(self.grid, self.values + other.values)

    def __sub__(self, other: "PeriodicField") -> "PeriodicField":
        _check_same_grid(self.grid, other.grid)
        return PeriodicField(self.grid, self.values - other.values)

    def scaled(self, c: complex) -> "PeriodicField":
        return PeriodicField(self.grid, c * self.values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: PeriodicGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n, self.grid.n):
            raise InvalidInputError(f"coefficient array has shape {c.shape}, grid needs {(self.grid.n,) * 2}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def coeff(self, m1: int, m2: int) -> complex:
        n = self.grid.n
        return complex(self.coeffs[m1 % n, m2 % n])

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


class Symbol(enum.Enum):
    """Fourier multipliers of ``d/dz``, ``d/dzbar`` and the unitary ``U``."""

    DZ = "DZ"
    DZBAR = "DZBAR"
    U = "U"

    def multiplier(self, grid: PeriodicGrid) -> np.ndarray:
        return _multiplier_ext(self, grid).astype(complex)


@functools.lru_cache(maxsize=32)
def _multiplier_ext(sym: Symbol, grid: PeriodicGrid) -> np.ndarray:
    # extended precision keeps U * DZBAR == DZ within 2 ulps after rounding
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(np.longdouble)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    i = np.clongdouble(1j)
    if sym is Symbol.U:
        num = m1 - i * m2
        den = m1 + i * m2
        out = np.ones(num.shape, dtype=np.clongdouble)
        nz = den != 0
        out[nz] = num[nz] / den[nz]
    else:
        s = np.longdouble(2 * np.pi) / np.longdouble(grid.period)
        sign = -1 if sym is Symbol.DZ else 1
        out = np.clongdouble(0.5j) * (m1 + sign * i * m2) * s
        out[grid.nyquist_mask()] = 0
    out.flags.writeable = False
    return out


def _check_same_grid(a: PeriodicGrid, b: PeriodicGrid) -> None:
    if a != b:
        raise InvalidInputError(f"grid mismatch: {a} vs {b}")


def to_spectral(f: PeriodicField) -> SpectralField:
    if not np.all(np.isfinite(f.values)):
        raise InvalidInputError("field contains non-finite samples")
    return SpectralField(f.grid, fft2(f.values))


def to_physical(s: SpectralField, grid: PeriodicGrid | None = None) -> PeriodicField:
    if grid is not None:
        _check_same_grid(grid, s.grid)
    return PeriodicField(s.grid, ifft2(s.coeffs))


def apply_symbol(s: SpectralField, sym: Symbol) -> SpectralField:
    out = s.coeffs.astype(np.clongdouble) * _multiplier_ext(sym, s.grid)
    return SpectralField(s.grid, out.astype(complex))


def multiply_dealiased(a: PeriodicField, b: PeriodicField) -> PeriodicField:
    """Pointwise product with the output truncated to the 2/3 band."""
    _check_same_grid(a.grid, b.grid)
    c = fft2(a.values * b.values)
    c[~a.grid.dealias_mask()] = 0
    return PeriodicField(a.grid, ifft2(c))


def l2_norm(f: PeriodicField) -> float:
    return float(np.sqrt(np.mean(np.abs(f.values) ** 2)))


def sobolev_norm(f: PeriodicField, j: int) -> float:
    """``sqrt(sum (1 + |k|^2)^j |c_m|^2)`` with ``k = m * 2*pi/period``."""
    if not 0 <= j <= MAX_SOBOLEV_ORDER:
        raise InvalidInputError(f"Sobolev order must lie in [0, {MAX_SOBOLEV_ORDER}], got {j}")
    m1, m2 = f.grid.modes()
    k2 = (m1 ** 2 + m2 ** 2) * f.grid.scale ** 2
    c = fft2(f.values)
    return float(np.sqrt(np.sum((1 + k2) ** j * np.abs(c) ** 2)))


def _phase_matrix(grid: PeriodicGrid, x: np.ndarray) -> np.ndarray:
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    return np.exp(1j * grid.scale * np.outer(x, m))


def trig_eval(coeffs: np.ndarray, grid: PeriodicGrid, z, chunk: int = 512) -> np.ndarray:
    """Evaluate the trigonometric polynomial with ``coeffs`` at points ``z = x1 + i x2``."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, chunk):
        zz = flat[start:start + chunk]
        e1 = _phase_matrix(grid, zz.real)
        e2 = _phase_matrix(grid, zz.imag)
        out[start:start + chunk] = np.einsum("pk,pk->p", e1 @ coeffs, e2)
    return out.reshape(z.shape)


def trig_eval_tensor(coeffs: np.ndarray, grid: PeriodicGrid, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Evaluate on the tensor grid ``x1[i] + 1j * x2[j]``; result has shape ``(len(x1), len(x2))``."""
    e1 = _phase_matrix(grid, np.asarray(x1, dtype=float))
    e2 = _phase_matrix(grid, np.asarray(x2, dtype=float))
    return e1 @ coeffs @ e2.T
