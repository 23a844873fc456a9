"""Matplotlib figure rendering for field and comparison reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .wigner import WignerMatrixField

__all__ = ["save_field_figure", "save_comparison_figure"]

_COMPONENTS = ("w11", "w22", "re_w12", "im_w12")
_LABELS = {
    "w11": r"$W_{11}$",
    "w22": r"$W_{22}$",
    "re_w12": r"$\mathrm{Re}\,W_{12}$",
    "im_w12": r"$\mathrm{Im}\,W_{12}$",
}


def _component_maps(field: WignerMatrixField) -> dict[str, np.ndarray]:
    shape = (field.grid.n_im, field.grid.n_re)
    w = field.w
    return {
        "w11": w[:, 0, 0].real.reshape(shape),
        "w22": w[:, 1, 1].real.reshape(shape),
        "re_w12": w[:, 0, 1].real.reshape(shape),
        "im_w12": w[:, 0, 1].imag.reshape(shape),
    }


def _extent(field: WignerMatrixField) -> list[float]:
    g = field.grid
    return [g.re_min, g.re_max, g.im_min, g.im_max]


def save_field_figure(field: WignerMatrixField, path: str | Path, title: str) -> None:
    """Four-panel pcolormesh of the field components."""
    maps = _component_maps(field)
    vmax = max(np.abs(m).max() for m in maps.values()) or 1.0
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), constrained_layout=True)
    for ax, name in zip(axes.ravel(), _COMPONENTS):
        im = ax.imshow(maps[name], origin="lower", extent=_extent(field),
                       cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
        ax.set_title(_LABELS[name])
        ax.set_xlabel(r"$\mathrm{Re}\,\alpha$")
        ax.set_ylabel(r"$\mathrm{Im}\,\alpha$")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_comparison_figure(exact: WignerMatrixField, sampled: WignerMatrixField,
                           path: str | Path) -> None:
    """Absolute-error and stderr-normalised deviation maps per component."""
    shape = (exact.grid.n_im, exact.grid.n_re)
    em = _component_maps(exact)
    sm = _component_maps(sampled)
    se = sampled.stderr if sampled.stderr is not None else np.zeros_like(sampled.w, dtype=float)
    se_maps = {
        "w11": se[:, 0, 0].reshape(shape),
        "w22": se[:, 1, 1].reshape(shape),
        "re_w12": se[:, 0, 1].reshape(shape),
        "im_w12": se[:, 1, 0].reshape(shape),
    }
    fig, axes = plt.subplots(2, 4, figsize=(16, 6.5), constrained_layout=True)
    for col, name in enumerate(_COMPONENTS):
        err = sm[name] - em[name]
        im0 = axes[0, col].imshow(np.abs(err), origin="lower", extent=_extent(exact),
                                  cmap="magma", aspect="auto")
        axes[0, col].set_title(f"|error| {_LABELS[name]}")
        fig.colorbar(im0, ax=axes[0, col], shrink=0.8)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se_maps[name] > 0, err / se_maps[name], np.where(err == 0, 0.0, np.inf))
        im1 = axes[1, col].imshow(z, origin="lower", extent=_extent(exact),
                                  cmap="RdBu_r", vmin=-4, vmax=4, aspect="auto")
        axes[1, col].set_title(f"error / stderr {_LABELS[name]}")
        fig.colorbar(im1, ax=axes[1, col], shrink=0.8)
    for ax in axes.ravel():
        ax.set_xlabel(r"$\mathrm{Re}\,\alpha$")
        ax.set_ylabel(r"$\mathrm{Im}\,\alpha$")
    fig.savefig(path, dpi=150)
    plt.close(fig)
