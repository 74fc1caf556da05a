"""PNG figures for CLI artifacts (Agg backend, no display needed).

Each function reads the arrays that were written to CSV and saves one figure
next to it, replacing the ``.csv`` suffix by ``.png``.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

__all__ = ["png_path", "plot_trace", "plot_residual_log", "plot_field", "plot_verify"]

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
}


def png_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def _save(fig, csv_path) -> Path:
    out = png_path(csv_path)
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)
    logger.info("wrote %s", out)
    return out


def plot_trace(csv_path, times: np.ndarray, recovered: np.ndarray, exact: np.ndarray | None,
               label: str, n_curves: int = 4) -> Path:
    """Recovered boundary quantity versus time on a few elements."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        cols = np.unique(np.linspace(0, recovered.shape[1] - 1, n_curves).astype(int))
        for j, col in enumerate(cols):
            color = f"C{j}"
            ax.plot(times, recovered[:, col], color=color, label=f"element {col}")
            if exact is not None:
                ax.plot(times, exact[:, col], color=color, ls="--", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel(label)
        ax.set_title(f"{label} on selected elements" + (" (dashed: exact)" if exact is not None else ""))
        ax.legend()
        return _save(fig, csv_path)


def plot_residual_log(csv_path, steps: np.ndarray, residuals: np.ndarray) -> Path:
    """Per-step linear-system residual of a marching solve."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(steps, np.maximum(residuals, 1e-300), marker=".", ms=2)
        ax.set_xlabel("step")
        ax.set_ylabel("max |residual|")
        ax.set_title("per-step residual")
        return _save(fig, csv_path)


def plot_field(csv_path, times: np.ndarray, values: np.ndarray, exact: np.ndarray | None) -> Path:
    """Field histories at probe points; ``values`` has shape (n_probes, n_times)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for p in range(values.shape[0]):
            color = f"C{p % 10}"
            ax.plot(times, values[p], color=color, label=f"probe {p}")
            if exact is not None:
                ax.plot(times, exact[p], color=color, ls="--", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("u")
        ax.set_title("field at probes" + (" (dashed: exact)" if exact is not None else ""))
        ax.legend(ncol=2)
        return _save(fig, csv_path)


def plot_verify(csv_path, labels: list[str], residuals: np.ndarray, tolerances: np.ndarray) -> Path:
    """Absolute residuals against their tolerances."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        idx = np.arange(len(labels))
        ok = np.abs(residuals) <= tolerances
        ax.bar(idx[ok], np.maximum(np.abs(residuals[ok]), 1e-18), color="C2", label="pass")
        ax.bar(idx[~ok], np.maximum(np.abs(residuals[~ok]), 1e-18), color="C3", label="fail")
        ax.scatter(idx, tolerances, marker="_", s=200, color="k", label="tolerance")
        ax.set_yscale("log")
        ax.set_xticks(idx)
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
        ax.set_ylabel("|residual|")
        ax.legend()
        return _save(fig, csv_path)
