"""Builtin Beltrami coefficient generators.

Each generator samples onto a :class:`PeriodicGrid`; the resulting
:class:`BeltramiCoefficient` certifies ``max |mu| < 1`` on construction.
"""
from __future__ import annotations

import numpy as np

from .solver import BeltramiCoefficient
from .spectral import InvalidInputError, PeriodicGrid

__all__ = [
    "bump_profile",
    "constant",
    "modes",
    "radial_bump",
    "two_mode",
    "bump",
    "parse_mu_spec",
]


def bump_profile(s) -> np.ndarray:
    """``exp(1 - 1/(1 - s^2))`` for ``|s| < 1`` and 0 elsewhere; equals 1 at ``s = 0``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1 - 1 / (1 - s[inside] ** 2))
    return out


def constant(grid: PeriodicGrid, c: complex, allow_high_delta: bool = False) -> BeltramiCoefficient:
    return BeltramiCoefficient.from_values(grid, np.full((grid.n, grid.n), c, dtype=complex), allow_high_delta)


def modes(grid: PeriodicGrid, terms, allow_high_delta: bool = False) -> BeltramiCoefficient:
    """Sum of ``amplitude * exp(i (m1 x1 + m2 x2) * 2pi/period)`` over ``terms = [((m1, m2), amplitude), ...]``."""
    x1, x2 = grid.mesh()
    s = grid.scale
    values = np.zeros((grid.n, grid.n), dtype=complex)
    for (m1, m2), amp in terms:
        values += amp * np.exp(1j * s * (m1 * x1 + m2 * x2))
    return BeltramiCoefficient.from_values(grid, values, allow_high_delta)


def radial_bump(grid: PeriodicGrid, center: complex, radius: float, height: complex,
                allow_high_delta: bool = False) -> BeltramiCoefficient:
    """``height * bump_profile(r / radius)`` with ``r`` the periodic distance to ``center``."""
    x1, x2 = grid.mesh()
    p = grid.period
    dx = (x1 - center.real + p / 2) % p - p / 2
    dy = (x2 - center.imag + p / 2) % p - p / 2
    values = height * bump_profile(np.hypot(dx, dy) / radius)
    return BeltramiCoefficient.from_values(grid, values, allow_high_delta)


def two_mode(grid: PeriodicGrid, delta: float) -> BeltramiCoefficient:
    """Corpus case ``delta/2 * (cos x1 + e^{2 i x2})``; the maximum ``delta`` is attained at the origin."""
    return modes(grid, [((1, 0), delta / 4), ((-1, 0), delta / 4), ((0, 2), delta / 2)])


def bump(grid: PeriodicGrid, delta: float) -> BeltramiCoefficient:
    """Corpus case: radial bump of height ``delta`` and radius ``0.4 * period`` centred in the square."""
    c = grid.period / 2
    return radial_bump(grid, complex(c, c), 0.4 * grid.period, delta)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def parse_mu_spec(text: str, grid: PeriodicGrid, allow_high_delta: bool = False) -> BeltramiCoefficient:
    """Build a coefficient from a CLI source string.

    Accepted forms::

        const:0.3            const:0.2,0.1          (real, imag)
        modes:1,0,0.25;0,2,0.25                     (m1, m2, amplitude[, imag])
        bump:cx,cy,radius,height
        two_mode:0.5         bump_corpus:0.5
        file:path/to/header.json
    """
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "const":
            v = _floats(arg)
            c = complex(v[0], v[1] if len(v) > 1 else 0.0)
            return constant(grid, c, allow_high_delta)
        if kind == "modes":
            terms = []
            for chunk in arg.split(";"):
                v = _floats(chunk)
                if len(v) not in (3, 4):
                    raise ValueError(f"mode term needs m1,m2,amp[,amp_imag], got {chunk!r}")
                amp = complex(v[2], v[3] if len(v) == 4 else 0.0)
                terms.append(((int(v[0]), int(v[1])), amp))
            return modes(grid, terms, allow_high_delta)
        if kind == "bump":
            cx, cy, radius, height = _floats(arg)
            return radial_bump(grid, complex(cx, cy), radius, height, allow_high_delta)
        if kind == "two_mode":
            return two_mode(grid, float(arg))
        if kind == "bump_corpus":
            return bump(grid, float(arg))
        if kind == "file":
            from .fieldio import read_field

            field = read_field(arg)
            if field.grid != grid:
                raise InvalidInputError(f"field file grid {field.grid} does not match requested grid {grid}")
            return BeltramiCoefficient(field, allow_high_delta)
    except InvalidInputError:
        raise
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"cannot parse mu source {text!r}: {exc}") from exc
    raise InvalidInputError(f"unknown mu source kind {kind!r}")
