"""Primitive of the closed form ``f (dz + mu dzbar)``, its lattice and Jacobian.

On the universal cover the primitive is ``Phi(z) = a z + b zbar + psi(z)`` with
``a = mean(f)``, ``b = mean(f mu)`` and a periodic, mean-zero ``psi``.  The
periods of ``Phi`` over the two torus cycles give the target lattice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import BeltramiCoefficient, beltrami_residual
from .spectral import (
    InvalidInputError,
    PeriodicField,
    Symbol,
    fft2,
    ifft2,
    trig_eval,
)

__all__ = [
    "InconsistentFormError",
    "DegenerateLatticeError",
    "UniformizingForm",
    "TorusLattice",
    "MapSample",
    "build_uniformizing_form",
    "lattice",
    "evaluate_map",
    "evaluate_phi",
    "jacobian_min",
    "local_univalence_check",
]

RESIDUAL_GATE = 1e-6
CLOSEDNESS_TOL = 1e-8


class InconsistentFormError(ValueError):
    """The form ``f (dz + mu dzbar)`` is not closed to tolerance (unconverged ``f``)."""


class DegenerateLatticeError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class UniformizingForm:
    f: PeriodicField
    mu: BeltramiCoefficient
    a: complex
    b: complex
    psi: PeriodicField
    closedness_defect: float = 0.0

    @property
    def grid(self):
        return self.f.grid

    def _coeffs(self, name: str) -> np.ndarray:
        cache = self.__dict__.setdefault("_coeff_cache", {})
        if name not in cache:
            src = {"psi": self.psi, "f": self.f, "mu": self.mu.mu}[name]
            cache[name] = fft2(src.values)
        return cache[name]


@dataclass(frozen=True)
class TorusLattice:
    omega1: complex
    omega2: complex

    def __post_init__(self):
        if self.omega1 == 0:
            raise DegenerateLatticeError("omega1 vanishes")

    @property
    def tau(self) -> complex:
        return self.omega2 / self.omega1

    def to_dict(self) -> dict:
        return {"omega1": self.omega1, "omega2": self.omega2, "tau": self.tau}


@dataclass(frozen=True)
class MapSample:
    z: complex
    phi: complex
    jac: float


def build_uniformizing_form(f: PeriodicField, mu: BeltramiCoefficient) -> UniformizingForm:
    """Split the primitive of ``f (dz + mu dzbar)`` into affine and periodic parts.

    ``psi`` is recovered mode by mode from whichever of ``d/dz`` and ``d/dzbar``
    has the larger eigenvalue (ties go to ``d/dz``); the other route must agree,
    which is the discrete closedness condition.
    """
    res = beltrami_residual(f, mu)
    if not res <= RESIDUAL_GATE:
        raise InconsistentFormError(f"beltrami residual {res:.3g} exceeds {RESIDUAL_GATE:g}; solve first")
    grid = f.grid
    keep = grid.dealias_mask()
    fh = fft2(f.values)
    gh = fft2(mu.values * f.values) * keep
    lam = Symbol.DZ.multiplier(grid)
    lamp = Symbol.DZBAR.multiplier(grid)

    scale = float(np.sqrt(np.sum(np.abs(fh) ** 2)))
    mismatch = np.abs(lamp * fh - lam * gh)
    mismatch[0, 0] = 0
    defect = float(mismatch.max())
    if defect > CLOSEDNESS_TOL * scale:
        raise InconsistentFormError(f"form is not closed: max mode defect {defect:.3g} (|f| = {scale:.3g})")

    psi_h = np.zeros_like(fh)
    use_dz = (np.abs(lam) >= np.abs(lamp)) & (lam != 0)
    use_dzbar = ~use_dz & (lamp != 0)
    psi_h[use_dz] = fh[use_dz] / lam[use_dz]
    psi_h[use_dzbar] = gh[use_dzbar] / lamp[use_dzbar]
    psi_h[0, 0] = 0
    return UniformizingForm(
        f=f,
        mu=mu,
        a=complex(fh[0, 0]),
        b=complex(gh[0, 0]),
        psi=PeriodicField(grid, ifft2(psi_h)),
        closedness_defect=defect / scale if scale else 0.0,
    )


def lattice(form: UniformizingForm) -> TorusLattice:
    """Increments of ``Phi`` along ``z -> z + period`` and ``z -> z + i period``."""
    p = form.grid.period
    w1 = p * (form.a + form.b)
    w2 = 1j * p * (form.a - form.b)
    if w1 == 0:
        raise DegenerateLatticeError("omega1 vanishes")
    t = w2 / w1
    if abs(t.imag) < 1e-12:
        raise DegenerateLatticeError(f"lattice is degenerate: tau = {t!r}")
    if t.imag < 0:
        w2 = -w2
    return TorusLattice(complex(w1), complex(w2))


def evaluate_phi(form: UniformizingForm, z) -> np.ndarray:
    """``Phi(z) = a z + b zbar + psi(z) - psi(0)`` at an array of points."""
    z = np.asarray(z, dtype=complex)
    psi_c = form._coeffs("psi")
    psi0 = trig_eval(psi_c, form.grid, np.zeros(1, dtype=complex))[0]
    return form.a * z + form.b * np.conj(z) + trig_eval(psi_c, form.grid, z) - psi0


def _jacobian_at(form: UniformizingForm, z) -> np.ndarray:
    fv = trig_eval(form._coeffs("f"), form.grid, z)
    mv = trig_eval(form._coeffs("mu"), form.grid, z)
    return np.abs(fv) ** 2 * (1 - np.abs(mv) ** 2)


def evaluate_map(form: UniformizingForm, z: complex) -> MapSample:
    z = complex(z)
    phi = complex(evaluate_phi(form, np.array([z]))[0])
    jac = float(_jacobian_at(form, np.array([z]))[0])
    return MapSample(z, phi, jac)


def jacobian_min(form: UniformizingForm) -> float:
    """Minimum over grid samples of ``|f|^2 (1 - |mu|^2)``."""
    return float(np.min(np.abs(form.f.values) ** 2 * (1 - np.abs(form.mu.values) ** 2)))


def local_univalence_check(form: UniformizingForm, z0: complex, radius: float, samples: int,
                           seed: int = 0) -> bool:
    """Injectivity probe: ``samples`` random point pairs in the disc ``|z - z0| < radius``."""
    if not radius < form.grid.period / 4:
        raise InvalidInputError(f"radius must be below period/4 = {form.grid.period / 4:.6g}")
    rng = np.random.default_rng(seed)

    def draw(k):
        r = radius * np.sqrt(rng.random(k))
        return z0 + r * np.exp(2j * np.pi * rng.random(k))

    p = draw(samples)
    q = draw(samples)
    sep = np.abs(p - q)
    distinct = sep > 0
    img = np.abs(evaluate_phi(form, p) - evaluate_phi(form, q))
    return bool(np.all(img[distinct] > 1e-12 * sep[distinct]))
