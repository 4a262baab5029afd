"""Deterministic PNG figures: mapped coordinate grids and heatmaps."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fieldio import _atomic_write  # noqa: E402
from .spectral import PeriodicField  # noqa: E402
from .uniformize import UniformizingForm, evaluate_phi, lattice  # noqa: E402

__all__ = ["plot_grid_image", "plot_heatmap"]

_SAVE_KW = {"format": "png", "dpi": 100, "metadata": {"Software": None}}


def _save(fig, path) -> Path:
    import io

    buf = io.BytesIO()
    fig.savefig(buf, **_SAVE_KW)
    plt.close(fig)
    path = Path(path)
    _atomic_write(path, buf.getvalue())
    return path


def plot_grid_image(form: UniformizingForm, path, lines: int = 16, samples: int = 200) -> Path:
    """Images of the coordinate lines of the fundamental square under ``Phi``, with the lattice cell outlined."""
    p = form.grid.period
    ticks = np.linspace(0.0, p, lines + 1)
    t = np.linspace(0.0, p, samples)
    fig, ax = plt.subplots(figsize=(6, 6))
    for c in ticks:
        ax.plot(*_xy(evaluate_phi(form, c + 1j * t)), color="0.35", lw=0.6)
        ax.plot(*_xy(evaluate_phi(form, t + 1j * c)), color="0.35", lw=0.6)
    lat = lattice(form)
    cell = np.array([0, lat.omega1, lat.omega1 + lat.omega2, lat.omega2, 0])
    ax.plot(*_xy(cell), color="tab:red", lw=1.5)
    ax.set_aspect("equal")
    ax.set_title(f"tau = {lat.tau.real:.6f} + {lat.tau.imag:.6f}i")
    return _save(fig, path)


def plot_heatmap(field: PeriodicField, path, quantity: str = "abs", title: str | None = None) -> Path:
    """Heatmap of ``|field|`` (``quantity='abs'``) or the dilatation ``(1+|mu|)/(1-|mu|)``."""
    v = np.abs(field.values)
    if quantity == "dilatation":
        v = (1 + v) / (1 - v)
    elif quantity != "abs":
        raise ValueError(f"unknown heatmap quantity {quantity!r}")
    p = field.grid.period
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(v.T, origin="lower", extent=(0, p, 0, p), cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax)
    ax.set_title(title or quantity)
    return _save(fig, path)


def _xy(w):
    w = np.asarray(w)
    return w.real, w.imag
