"""Nonvanishing solutions of ``dbar f = d(mu f)`` on the torus.

The discrete problem is the fixed point ``f = 1 + U(mu f)`` where the product
is the dealiased grid product.  ``solve_neumann`` iterates it directly;
``solve_homotopy`` transports ``f`` along ``nu = t * mu`` with classical RK4;
``dense_oracle_solve`` assembles the same linear system as a dense matrix in
the Fourier basis and eliminates it directly.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    InvalidInputError,
    PeriodicField,
    PeriodicGrid,
    Symbol,
    fft2,
    ifft2,
)

__all__ = [
    "BeltramiCoefficient",
    "SolveReport",
    "HomotopyConfig",
    "Method",
    "ConvergenceError",
    "NonvanishingWarning",
    "AccuracyWarning",
    "AliasingWarning",
    "PropertyFailure",
    "TailCheckReport",
    "solve_neumann",
    "solve_homotopy",
    "beltrami_residual",
    "dense_oracle_solve",
    "neumann_tail_check",
    "parameter_analyticity_check",
    "default_max_iter",
]

DEFAULT_TOL = 1e-10
DEFAULT_DELTA_CAP = 0.95
ALIAS_ENERGY_FRACTION = 1e-8
NONVANISHING_FLOOR = 1e-8


class ConvergenceError(RuntimeError):
    """Neumann iteration did not reach the stopping rule within ``max_iter``."""


class PropertyFailure(AssertionError):
    """A numerically checked inequality was violated."""


class NonvanishingWarning(RuntimeWarning):
    pass


class AccuracyWarning(RuntimeWarning):
    pass


class AliasingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class BeltramiCoefficient:
    """Sampled coefficient ``mu`` with ``delta = max |mu|`` recomputed from the samples."""

    mu: PeriodicField
    allow_high_delta: bool = False
    delta: float = field(init=False)

    def __post_init__(self):
        delta = float(np.max(np.abs(self.mu.values)))
        if not delta < 1:
            raise InvalidInputError(f"delta >= 1 (max |mu| = {delta:.17g})")
        if delta > DEFAULT_DELTA_CAP and not self.allow_high_delta:
            raise InvalidInputError(
                f"delta = {delta:.6g} exceeds {DEFAULT_DELTA_CAP}; pass allow_high_delta=True to override"
            )
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_values(cls, grid: PeriodicGrid, values, allow_high_delta: bool = False) -> "BeltramiCoefficient":
        return cls(PeriodicField(grid, values), allow_high_delta)

    @property
    def grid(self) -> PeriodicGrid:
        return self.mu.grid

    @property
    def values(self) -> np.ndarray:
        return self.mu.values

    def scaled(self, t: complex) -> "BeltramiCoefficient":
        return BeltramiCoefficient(self.mu.scaled(t), allow_high_delta=True)

    def alias_fraction(self) -> float:
        """Share of spectral energy outside the 2/3 band."""
        c = fft2(self.values)
        total = np.sum(np.abs(c) ** 2)
        if total == 0:
            return 0.0
        return float(np.sum(np.abs(c[~self.grid.dealias_mask()]) ** 2) / total)


class Method(str, enum.Enum):
    NEUMANN = "NEUMANN"
    HOMOTOPY = "HOMOTOPY"


@dataclass(frozen=True, eq=False)
class SolveReport:
    f: PeriodicField
    iterations: int
    residual_l2: float
    min_abs_f: float
    method: Method
    # successive-iterate L2 differences, Neumann only
    increments: tuple = ()

    def contraction_ratios(self) -> np.ndarray:
        d = np.asarray(self.increments, dtype=float)
        if d.size < 2:
            return np.empty(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = d[1:] / d[:-1]
        return r[d[:-1] > 0]

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "iterations": self.iterations,
            "residual_l2": self.residual_l2,
            "min_abs_f": self.min_abs_f,
            "mean_f": self.f.mean(),
            "n": self.f.grid.n,
            "period": self.f.grid.period,
        }


@dataclass(frozen=True)
class HomotopyConfig:
    steps: int = 64

    def __post_init__(self):
        if self.steps < 4:
            raise InvalidInputError(f"homotopy needs at least 4 steps, got {self.steps}")


def default_max_iter(delta: float, tol: float) -> int:
    if delta <= 0:
        return 16
    return math.ceil(math.log(tol * (1 - delta)) / math.log(delta)) + 16


class _Operator:
    """``g -> U P(mu g)`` on physical samples, with cached multipliers."""

    def __init__(self, mu: BeltramiCoefficient):
        grid = mu.grid
        self.grid = grid
        self.mu = mu.values
        self.keep = grid.dealias_mask()
        self.u = Symbol.U.multiplier(grid) * self.keep
        self.dz = Symbol.DZ.multiplier(grid)
        self.dzbar = Symbol.DZBAR.multiplier(grid)

    def apply_hat(self, g: np.ndarray, nu: np.ndarray | None = None) -> np.ndarray:
        nu = self.mu if nu is None else nu
        return fft2(nu * g) * self.u

    def residual(self, f: np.ndarray) -> float:
        fh = fft2(f)
        ph = fft2(self.mu * f) * self.keep
        r = self.dzbar * fh - self.dz * ph
        return float(np.sqrt(np.sum(np.abs(r) ** 2)))


def _warn_if_aliased(mu: BeltramiCoefficient) -> None:
    frac = mu.alias_fraction()
    if frac > ALIAS_ENERGY_FRACTION:
        warnings.warn(
            f"mu is under-resolved: {frac:.3g} of its spectral energy lies outside the dealiasing band",
            AliasingWarning,
            stacklevel=3,
        )


def _check_nonvanishing(f: np.ndarray) -> float:
    m = float(np.min(np.abs(f)))
    if m <= NONVANISHING_FLOOR:
        warnings.warn(f"min |f| = {m:.3g} is not bounded away from zero", NonvanishingWarning, stacklevel=3)
    return m


def solve_neumann(
    mu: BeltramiCoefficient,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
) -> SolveReport:
    """Iterate ``f <- 1 + U(mu f)`` from ``f = 1``.

    Stops once the successive-iterate difference is at most ``tol * (1 - delta)``
    and the residual is at most ``tol``.  Raises ``ConvergenceError`` when the
    difference criterion is not met within ``max_iter`` iterations.
    """
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    delta = mu.delta
    if max_iter is None:
        max_iter = default_max_iter(delta, tol)
    if max_iter < 1:
        raise InvalidInputError(f"max_iter must be >= 1, got {max_iter}")
    _warn_if_aliased(mu)

    op = _Operator(mu)
    n = mu.grid.n
    stop = tol * (1 - delta)
    fh = np.zeros((n, n), dtype=complex)
    fh[0, 0] = 1.0
    f = np.ones((n, n), dtype=complex)
    increments = []
    converged = False
    residual = math.inf
    it = 0
    while it < max_iter:
        it += 1
        new_h = op.apply_hat(f)
        new_h[0, 0] += 1.0
        d = float(np.sqrt(np.sum(np.abs(new_h - fh) ** 2)))
        increments.append(d)
        fh = new_h
        f = ifft2(fh)
        if d <= stop:
            residual = op.residual(f)
            if residual <= tol:
                converged = True
                break
    if not converged:
        if increments and increments[-1] <= stop:
            warnings.warn(
                f"increment criterion met but residual {residual:.3g} > tol {tol:.3g}",
                AccuracyWarning,
                stacklevel=2,
            )
        else:
            raise ConvergenceError(
                f"Neumann iteration not converged after {max_iter} iterations "
                f"(last increment {increments[-1]:.3g}, needed {stop:.3g})"
            )
    fmin = _check_nonvanishing(f)
    return SolveReport(
        f=PeriodicField(mu.grid, f),
        iterations=it,
        residual_l2=residual,
        min_abs_f=fmin,
        method=Method.NEUMANN,
        increments=tuple(increments),
    )


def _inverse_apply(op: _Operator, rhs_h: np.ndarray, nu: np.ndarray, delta_t: float,
                   guess: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Solve ``g = rhs + U P(nu g)`` by fixed-point iteration from ``guess``; returns samples."""
    stop = tol * (1 - delta_t)
    g = guess
    gh = fft2(g)
    for _ in range(max_iter):
        new_h = rhs_h + op.apply_hat(g, nu)
        d = float(np.sqrt(np.sum(np.abs(new_h - gh) ** 2)))
        gh = new_h
        g = ifft2(gh)
        if d <= stop:
            return g
    raise ConvergenceError(
        f"inner Neumann solve did not converge in {max_iter} iterations (last increment {d:.3g})"
    )


def solve_homotopy(
    mu: BeltramiCoefficient,
    cfg: HomotopyConfig = HomotopyConfig(),
    tol: float = DEFAULT_TOL,
) -> SolveReport:
    """Integrate ``df/dt = (Id - U t mu)^-1 U(mu f)`` from ``f(0) = 1`` to ``t = 1`` with RK4."""
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    _warn_if_aliased(mu)
    op = _Operator(mu)
    n = mu.grid.n
    delta = mu.delta
    inner_tol = tol * 1e-2
    inner_max = default_max_iter(delta, inner_tol) + 16
    h = 1.0 / cfg.steps
    f = np.ones((n, n), dtype=complex)
    warm = np.zeros((n, n), dtype=complex)

    def rate(t: float, f_now: np.ndarray) -> np.ndarray:
        nonlocal warm
        rhs_h = op.apply_hat(f_now)
        warm = _inverse_apply(op, rhs_h, t * op.mu, t * delta, warm, inner_tol, inner_max)
        return warm

    for k in range(cfg.steps):
        t = k * h
        k1 = rate(t, f)
        k2 = rate(t + h / 2, f + h / 2 * k1)
        k3 = rate(t + h / 2, f + h / 2 * k2)
        k4 = rate(t + h, f + h * k3)
        f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    residual = op.residual(f)
    # the residual is blind to the normalization mean(f) - mean(mu f) = 1
    norm_defect = abs(fft2(f)[0, 0] - 1.0 - fft2(op.mu * f)[0, 0])
    if residual > tol or norm_defect > tol:
        warnings.warn(
            f"homotopy residual {residual:.3g} / normalization defect {norm_defect:.3g} exceeds tol {tol:.3g}; "
            "increase the step count",
            AccuracyWarning,
            stacklevel=2,
        )
    fmin = _check_nonvanishing(f)
    return SolveReport(
        f=PeriodicField(mu.grid, f),
        iterations=cfg.steps,
        residual_l2=residual,
        min_abs_f=fmin,
        method=Method.HOMOTOPY,
    )


def beltrami_residual(f: PeriodicField, mu: BeltramiCoefficient) -> float:
    """L2 norm of ``dbar f - d(mu f)`` with the dealiased product."""
    if f.grid != mu.grid:
        raise InvalidInputError(f"grid mismatch: {f.grid} vs {mu.grid}")
    return _Operator(mu).residual(f.values)


def dense_oracle_solve(mu: BeltramiCoefficient) -> PeriodicField:
    """Direct solve of ``(Id - U P M_mu) f = 1`` with an explicit Fourier-basis matrix.

    The multiplication operator is assembled as the cyclic convolution matrix of
    the coefficients of ``mu`` (computed by an explicit DFT sum), so no FFT is
    involved.  Only meant for ``n <= 16``.
    """
    grid = mu.grid
    n = grid.n
    if n > 16:
        raise InvalidInputError(f"dense oracle supports n <= 16, got {n}")
    idx = np.arange(n)
    # explicit DFT matrix, x_j = j * period / n, mode m in [-n/2, n/2)
    modes = np.where(idx < n // 2, idx, idx - n)
    dft = np.exp(-2j * np.pi * np.outer(modes, idx) / n) / n
    mu_hat = dft @ mu.values @ dft.T

    m1 = np.repeat(modes, n)
    m2 = np.tile(modes, n)
    # mu_hat is stored by position (mode % n); C[k, j] = mu_hat[k - j] with wraparound
    d1 = (m1[:, None] - m1[None, :]) % n
    d2 = (m2[:, None] - m2[None, :]) % n
    conv = mu_hat[d1, d2]

    keep = 3 * np.maximum(np.abs(m1), np.abs(m2)) < n
    num = m1 - 1j * m2
    den = m1 + 1j * m2
    u = np.ones(n * n, dtype=complex)
    nz = den != 0
    u[nz] = num[nz] / den[nz]
    row_scale = u * keep
    matrix = np.eye(n * n, dtype=complex) - row_scale[:, None] * conv
    rhs = np.zeros(n * n, dtype=complex)
    rhs[(m1 == 0) & (m2 == 0)] = 1.0
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(f"oracle matrix is numerically singular (cond = {cond:.3g})")
    f_hat = np.linalg.solve(matrix, rhs).reshape(n, n)
    synth = np.exp(2j * np.pi * np.outer(idx, modes) / n)
    return PeriodicField(grid, synth @ f_hat @ synth.T)


@dataclass(frozen=True)
class TailCheckReport:
    k_max: int
    trials: int
    delta: float
    c: tuple
    max_l2_ratio: float
    max_deriv_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "trials": self.trials,
            "delta": self.delta,
            "c": list(self.c),
            "max_l2_ratio": self.max_l2_ratio,
            "max_deriv_ratio": self.max_deriv_ratio,
            "passed": self.passed,
        }


def _random_band_field(grid: PeriodicGrid, rng: np.random.Generator) -> np.ndarray:
    m1, m2 = grid.modes()
    k2 = (m1 ** 2 + m2 ** 2) * grid.scale ** 2
    c = (rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n)))
    c *= grid.dealias_mask() / (1 + k2)
    return ifft2(c)


def neumann_tail_check(mu: BeltramiCoefficient, k: int, trials: int = 100,
                       seed: int = 0, slack: float = 1e-9) -> TailCheckReport:
    """Check the norm bounds on powers of ``U o mu`` over random fields.

    For ``j = 1..k`` verifies ``|(U mu)^j v| <= delta^j |v|`` in L2 and
    ``|d/dx_r (U mu)^j v| <= c_r j delta^(j-1) |v|_H1`` with
    ``c_r = delta + max |d mu / dx_r|``.  Ratios are observed/bound; any ratio
    above ``1 + slack`` raises ``PropertyFailure``.
    """
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    grid = mu.grid
    op = _Operator(mu)
    delta = mu.delta
    m1, m2 = grid.modes()
    d1 = 1j * m1 * grid.scale
    d2 = 1j * m2 * grid.scale
    d1[grid.nyquist_mask()] = 0
    d2[grid.nyquist_mask()] = 0
    mu_h = fft2(mu.values)
    c = tuple(delta + float(np.max(np.abs(ifft2(d * mu_h)))) for d in (d1, d2))
    k2 = (m1 ** 2 + m2 ** 2) * grid.scale ** 2

    rng = np.random.default_rng(seed)
    worst_l2 = 0.0
    worst_d = 0.0
    for _ in range(trials):
        v = _random_band_field(grid, rng)
        vh = fft2(v)
        l2 = float(np.sqrt(np.sum(np.abs(vh) ** 2)))
        h1 = float(np.sqrt(np.sum((1 + k2) * np.abs(vh) ** 2)))
        g = v
        for j in range(1, k + 1):
            gh = op.apply_hat(g)
            g = ifft2(gh)
            norm = float(np.sqrt(np.sum(np.abs(gh) ** 2)))
            bound = delta ** j * l2
            if bound > 0:
                worst_l2 = max(worst_l2, norm / bound)
            elif norm > slack * l2:
                worst_l2 = math.inf
            for d, cr in zip((d1, d2), c):
                dn = float(np.sqrt(np.sum(np.abs(d * gh) ** 2)))
                dbound = cr * j * delta ** (j - 1) * h1
                if dbound > 0:
                    worst_d = max(worst_d, dn / dbound)
                elif dn > slack * h1:
                    worst_d = math.inf
    passed = worst_l2 <= 1 + slack and worst_d <= 1 + slack
    report = TailCheckReport(k, trials, delta, c, worst_l2, worst_d, passed)
    if not passed:
        raise PropertyFailure(f"Neumann tail bound violated: {report}")
    return report


def parameter_analyticity_check(mu: BeltramiCoefficient, t0: complex, h: float,
                                tol: float = 1e-13) -> float:
    """Discrete Cauchy-Riemann defect of ``t -> f_t`` (solution for ``t * mu``) at ``t0``.

    Returns ``|(f(t0+h) - f(t0-h)) + i (f(t0+ih) - f(t0-ih))|_L2 / (2h)``, which
    is ``O(h^2)`` when ``f_t`` is holomorphic in ``t``.
    """
    if not h > 0:
        raise InvalidInputError(f"h must be positive, got {h}")
    if mu.delta > 0 and not abs(t0) + h < 1 / mu.delta:
        raise InvalidInputError(f"stencil leaves the contraction region: |t0| + h >= 1/delta = {1 / mu.delta:.6g}")
    sols = {}
    for key, t in (("+", t0 + h), ("-", t0 - h), ("+i", t0 + 1j * h), ("-i", t0 - 1j * h)):
        nu = mu.scaled(t)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AccuracyWarning)
            sols[key] = solve_neumann(nu, tol=tol, max_iter=default_max_iter(nu.delta, tol) + 64).f.values
    defect = (sols["+"] - sols["-"]) + 1j * (sols["+i"] - sols["-i"])
    return float(np.sqrt(np.mean(np.abs(defect) ** 2)) / (2 * h))
