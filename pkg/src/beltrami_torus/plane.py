"""Planar Beltrami problems through doubly periodic approximation.

A coefficient supported in ``[-S, S]^2`` is cut off smoothly, tiled with
period ``L`` and solved on the torus.  The lifted primitive, normalized to
fix 0 and 1, approximates the planar normalized solution as ``L`` grows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .solver import DEFAULT_TOL, BeltramiCoefficient, ConvergenceError, solve_neumann
from .spectral import InvalidInputError, PeriodicGrid, trig_eval_tensor
from .uniformize import UniformizingForm, build_uniformizing_form, evaluate_phi, lattice

__all__ = [
    "PlanarProblem",
    "NormalizedMap",
    "ConvergenceReport",
    "PlaneSolveError",
    "cutoff",
    "periodize",
    "normalized_map",
    "plane_solve_sequence",
    "planar_bump",
]

log = logging.getLogger(__name__)


class PlaneSolveError(RuntimeError):
    def __init__(self, period: float, cause: Exception):
        super().__init__(f"solve failed at period L = {period:g}: {cause}")
        self.period = period


@dataclass(frozen=True)
class PlanarProblem:
    """Coefficient ``mu_fn(z)`` on the plane, zero outside ``[-half_width, half_width]^2``.

    With ``constant`` set the coefficient is that constant everywhere and no
    cutoff is applied.
    """

    mu_fn: Callable[[np.ndarray], np.ndarray]
    half_width: float
    delta: float
    constant: Optional[complex] = None

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise InvalidInputError(f"delta >= 1 or negative: {self.delta}")
        if self.constant is not None and abs(self.constant) > self.delta:
            raise InvalidInputError("constant coefficient exceeds the certified bound")

    @classmethod
    def from_constant(cls, c: complex) -> "PlanarProblem":
        c = complex(c)
        return cls(lambda z: np.full(np.shape(z), c, dtype=complex), 0.5, abs(c), constant=c)


def planar_bump(delta: float, radius: float = 1.0) -> PlanarProblem:
    """Radial bump ``delta * exp(1 - 1/(1 - |z|^2/radius^2))`` supported in the disc of ``radius``."""
    from .corpus import bump_profile

    return PlanarProblem(lambda z: delta * bump_profile(np.abs(z) / radius).astype(complex), radius, delta)


def _smoothstep(s: np.ndarray) -> np.ndarray:
    # C-infinity transition, 1 at s <= 0 and 0 at s >= 1
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        g0 = np.where(s < 1, np.exp(-1 / np.maximum(1 - s, 1e-300)), 0.0)
        g1 = np.where(s > 0, np.exp(-1 / np.maximum(s, 1e-300)), 0.0)
    return g0 / (g0 + g1)


def cutoff(x: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """1 for ``|x| <= inner``, 0 for ``|x| >= outer``, smooth in between."""
    ax = np.abs(x)
    if outer <= inner:
        return (ax <= inner).astype(float)
    return _smoothstep((ax - inner) / (outer - inner))


def periodize(problem: PlanarProblem, L: float, margin: float, n: int) -> BeltramiCoefficient:
    """Sample the cut-off coefficient on the torus of period ``L``.

    Grid point ``x`` of ``[0, L)`` stands for the planar point ``x`` wrapped
    into ``[-L/2, L/2)``.  The cutoff is 1 on ``[-S, S]^2`` and vanishes within
    ``margin`` of the edges of that square.
    """
    S = problem.half_width
    grid = PeriodicGrid(n, L)
    if problem.constant is not None:
        return BeltramiCoefficient.from_values(grid, np.full((n, n), problem.constant, dtype=complex))
    if L < 2 * S + 2 * margin:
        raise InvalidInputError(f"period {L} too small for support half-width {S} and margin {margin}")
    x1, x2 = grid.mesh()
    w1 = (x1 + L / 2) % L - L / 2
    w2 = (x2 + L / 2) % L - L / 2
    outer = L / 2 - margin
    chi = cutoff(w1, S, outer) * cutoff(w2, S, outer)
    values = np.asarray(problem.mu_fn(w1 + 1j * w2), dtype=complex) * chi
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("planar coefficient is not finite on the grid")
    mu = BeltramiCoefficient.from_values(grid, values)
    if mu.delta > problem.delta * (1 + 1e-12):
        raise InvalidInputError(f"sampled coefficient reaches {mu.delta:.6g} > certified bound {problem.delta}")
    return mu


@dataclass(frozen=True, eq=False)
class NormalizedMap:
    """``Psi(z) = (Phi(z) - Phi(0)) / (Phi(1) - Phi(0))``; fixes 0 and 1."""

    form: UniformizingForm
    period: float
    phi0: complex = field(init=False)
    phi1: complex = field(init=False)

    def __post_init__(self):
        vals = evaluate_phi(self.form, np.array([0.0, 1.0], dtype=complex))
        object.__setattr__(self, "phi0", complex(vals[0]))
        object.__setattr__(self, "phi1", complex(vals[1]))

    def _normalize(self, z: np.ndarray, phi: np.ndarray) -> np.ndarray:
        out = (phi - self.phi0) / (self.phi1 - self.phi0)
        out = np.where(z == 0, 0.0, out)
        return np.where(z == 1, 1.0, out)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self._normalize(z, evaluate_phi(self.form, z))

    def on_tensor_grid(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Values at ``x1[i] + 1j * x2[j]``; fast separable evaluation."""
        f = self.form
        z = x1[:, None] + 1j * x2[None, :]
        psi_c = f._coeffs("psi")
        psi = trig_eval_tensor(psi_c, f.grid, x1, x2)
        psi0 = trig_eval_tensor(psi_c, f.grid, np.zeros(1), np.zeros(1))[0, 0]
        phi = f.a * z + f.b * np.conj(z) + psi - psi0
        return self._normalize(z, phi)


def normalized_map(mu: BeltramiCoefficient, tol: float = DEFAULT_TOL) -> NormalizedMap:
    report = solve_neumann(mu, tol=tol)
    form = build_uniformizing_form(report.f, mu)
    return NormalizedMap(form, mu.grid.period)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    periods: tuple
    grid_sizes: tuple
    taus: tuple
    iterations: tuple
    sup_diffs: tuple
    eval_half_width: float
    eval_points: int
    maps: tuple = field(default=(), repr=False)

    def rates(self) -> list[float]:
        d = self.sup_diffs
        return [d[i + 1] / d[i] if d[i] > 0 else float("nan") for i in range(len(d) - 1)]

    def to_dict(self) -> dict:
        return {
            "periods": list(self.periods),
            "grid_sizes": list(self.grid_sizes),
            "taus": list(self.taus),
            "iterations": list(self.iterations),
            "sup_diffs": list(self.sup_diffs),
            "observed_rates": self.rates(),
            "eval_half_width": self.eval_half_width,
            "eval_points": self.eval_points,
        }


def grid_size_for(L: float, points_per_unit: float) -> int:
    n = int(round(L * points_per_unit))
    return max(4, n + (n % 2))


def plane_solve_sequence(
    problem: PlanarProblem,
    periods: Sequence[float],
    points_per_unit: float = 8.0,
    margin: float = 0.5,
    eval_half_width: Optional[float] = None,
    eval_points: int = 64,
    tol: float = DEFAULT_TOL,
) -> ConvergenceReport:
    """Solve the periodized problem for each period; compare normalized maps on a fixed compact.

    The grid size grows with ``L`` so that the mesh width stays ``1/points_per_unit``.
    """
    periods = [float(p) for p in periods]
    if any(b <= a for a, b in zip(periods, periods[1:])):
        raise InvalidInputError(f"periods must be increasing: {periods}")
    hw = 2 * problem.half_width if eval_half_width is None else eval_half_width
    xs = np.linspace(-hw, hw, eval_points)
    sizes, taus, iters, maps = [], [], [], []
    for L in periods:
        n = grid_size_for(L, points_per_unit)
        mu = periodize(problem, L, margin, n)
        try:
            report = solve_neumann(mu, tol=tol)
            form = build_uniformizing_form(report.f, mu)
        except (ConvergenceError, ValueError, ArithmeticError) as exc:
            raise PlaneSolveError(L, exc) from exc
        nmap = NormalizedMap(form, L)
        values = nmap.on_tensor_grid(xs, xs)
        log.info("period %g: n=%d iterations=%d", L, n, report.iterations)
        sizes.append(n)
        taus.append(lattice(form).tau)
        iters.append(report.iterations)
        maps.append(values)
    diffs = [float(np.max(np.abs(a - b))) for a, b in zip(maps, maps[1:])]
    return ConvergenceReport(
        periods=tuple(periods),
        grid_sizes=tuple(sizes),
        taus=tuple(taus),
        iterations=tuple(iters),
        sup_diffs=tuple(diffs),
        eval_half_width=hw,
        eval_points=eval_points,
        maps=tuple(maps),
    )
