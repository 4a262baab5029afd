"""Quasiconformal diagnostics: moduli, dilatations and the length-area certificate.

Cylinder maps are sampled on ``[0, R] x [0, 2pi)`` in coordinates
``z = x + i phi``.  Images are stored as a lift ``w(x, phi)`` with
``w(x, phi + 2pi) = w(x, phi) + phi_shift``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .solver import PropertyFailure
from .spectral import InvalidInputError

__all__ = [
    "AnnulusKind",
    "Annulus",
    "CylinderMapSamples",
    "GrotzschReport",
    "annulus_modulus",
    "geodesic_length_from_modulus",
    "dilatation_from_mu",
    "map_dilatation_field",
    "grotzsch_area_certify",
    "differential",
]


class AnnulusKind(enum.Enum):
    ROUND = "ROUND"
    CYLINDER = "CYLINDER"


@dataclass(frozen=True)
class Annulus:
    kind: AnnulusKind
    param: float

    def __post_init__(self):
        if self.kind is AnnulusKind.ROUND and not 0 < self.param < 1:
            raise InvalidInputError(f"round annulus needs 0 < r < 1, got {self.param}")
        if self.kind is AnnulusKind.CYLINDER and not self.param > 0:
            raise InvalidInputError(f"cylinder height must be positive, got {self.param}")

    @classmethod
    def round(cls, r: float) -> "Annulus":
        return cls(AnnulusKind.ROUND, r)

    @classmethod
    def cylinder(cls, height: float) -> "Annulus":
        return cls(AnnulusKind.CYLINDER, height)


def annulus_modulus(a: Annulus) -> float:
    if a.kind is AnnulusKind.ROUND:
        return -math.log(a.param) / (2 * math.pi)
    return a.param / (2 * math.pi)


def geodesic_length_from_modulus(m: float) -> float:
    """Length of the closed geodesic of an annulus of modulus ``m``: ``pi / m``."""
    if not m > 0:
        raise InvalidInputError(f"modulus must be positive, got {m}")
    return math.pi / m


def dilatation_from_mu(mu_value: complex) -> float:
    k = abs(mu_value)
    if not k < 1:
        raise InvalidInputError(f"|mu| >= 1: {k}")
    return (1 + k) / (1 - k)


@dataclass(frozen=True, eq=False)
class CylinderMapSamples:
    height: float
    w: np.ndarray = field(repr=False)
    phi_shift: complex = 2j * math.pi

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim != 2 or w.shape[0] < 3 or w.shape[1] < 3:
            raise InvalidInputError(f"need at least a 3x3 sample grid, got shape {w.shape}")
        if not self.height > 0:
            raise InvalidInputError("cylinder height must be positive")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("non-finite map samples")
        object.__setattr__(self, "w", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.height, self.shape[0])

    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.shape[1]) / self.shape[1]

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], height: float, nx: int, nphi: int,
                      phi_shift: complex = 2j * math.pi) -> "CylinderMapSamples":
        x = np.linspace(0.0, height, nx)
        phi = 2 * np.pi * np.arange(nphi) / nphi
        z = x[:, None] + 1j * phi[None, :]
        return cls(height, fn(z), phi_shift)

    def subsampled(self) -> "CylinderMapSamples":
        """Every other sample in both directions; needs odd ``nx`` and even ``nphi``."""
        nx, nphi = self.shape
        if nx % 2 == 0 or nphi % 2:
            raise InvalidInputError("subsampling needs odd nx and even nphi")
        return CylinderMapSamples(self.height, self.w[::2, ::2], self.phi_shift)


def differential(samples: CylinderMapSamples) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference ``(dw/dx, dw/dphi)``: centered inside, one-sided at the x ends, periodic in phi."""
    w = samples.w
    nx, nphi = w.shape
    dx = samples.height / (nx - 1)
    dphi = 2 * np.pi / nphi
    wx = np.gradient(w, dx, axis=0, edge_order=2)
    up = np.roll(w, -1, axis=1)
    up[:, -1] += samples.phi_shift
    down = np.roll(w, 1, axis=1)
    down[:, 0] -= samples.phi_shift
    wphi = (up - down) / (2 * dphi)
    return wx, wphi


def _wirtinger(samples: CylinderMapSamples) -> tuple[np.ndarray, np.ndarray]:
    wx, wphi = differential(samples)
    return 0.5 * (wx - 1j * wphi), 0.5 * (wx + 1j * wphi)


def map_dilatation_field(samples: CylinderMapSamples) -> tuple[np.ndarray, float]:
    """Pointwise ratio of the singular values of the sampled differential and its maximum.

    Degenerate samples get an infinite dilatation.
    """
    wz, wzb = _wirtinger(samples)
    big = np.abs(wz) + np.abs(wzb)
    small = np.abs(np.abs(wz) - np.abs(wzb))
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(small > 1e-14 * np.maximum(big, 1e-300), big / small, np.inf)
    return k, float(np.max(k))


def _area_g(samples: CylinderMapSamples) -> float:
    wz, wzb = _wirtinger(samples)
    jac = np.abs(np.abs(wz) ** 2 - np.abs(wzb) ** 2)
    nx, nphi = samples.shape
    per_circle = jac.sum(axis=1) * (2 * np.pi / nphi)
    return float(np.trapezoid(per_circle, dx=samples.height / (nx - 1)))


@dataclass(frozen=True)
class GrotzschReport:
    K: float
    measured_K: float
    area_g: float
    area: float
    lower_bound: float
    slack: float
    modulus_source: float
    modulus_image_bound: float
    area_modulus: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def grotzsch_area_certify(samples: CylinderMapSamples, K: float, slack: float | None = None) -> GrotzschReport:
    """Certify ``Area_g(A1) >= Area(A1) / K`` for the sampled map of ``A1 = A(R)``.

    ``Area_g`` integrates the Jacobian, trapezoid in ``x`` and the periodic
    rectangle rule in ``phi``.  Without an explicit ``slack`` it is ten times
    the change of ``Area_g`` under 2x coarsening (floored at ``1e-12 * Area``).
    Also reports the implied image-modulus bound ``m(A1) / K`` and
    ``Area_g / (4 pi^2)``, which equals the image modulus when the image is a
    straight sub-cylinder.
    """
    _, measured = map_dilatation_field(samples)
    if not K >= measured * (1 - 1e-12):
        raise InvalidInputError(f"K = {K} is below the measured dilatation {measured}")
    area_g = _area_g(samples)
    R = samples.height
    area = 2 * np.pi * R
    if slack is None:
        refine = 0.0
        try:
            refine = abs(area_g - _area_g(samples.subsampled()))
        except InvalidInputError:
            pass
        slack = max(10 * refine, 1e-12 * area)
    lower = area / K
    passed = area_g >= lower - slack
    report = GrotzschReport(
        K=float(K),
        measured_K=measured,
        area_g=area_g,
        area=area,
        lower_bound=lower,
        slack=float(slack),
        modulus_source=annulus_modulus(Annulus.cylinder(R)),
        modulus_image_bound=annulus_modulus(Annulus.cylinder(R)) / K,
        area_modulus=area_g / (4 * np.pi ** 2),
        passed=bool(passed),
    )
    if not passed:
        raise PropertyFailure(f"length-area certificate failed: {report}")
    return report
