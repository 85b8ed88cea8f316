"""Figure rendering for CLI reports (files only, non-interactive backend)."""

from __future__ import annotations

import os
from collections.abc import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .syk import SffResult  # noqa: E402

__all__ = ["plot_sff", "plot_table_series"]


def _save(fig, path: str) -> str:
    tmp = f"{path}.tmp.png"
    fig.savefig(tmp, dpi=120, metadata={"Software": None})
    plt.close(fig)
    os.replace(tmp, path)
    return path


def plot_sff(curves: Mapping[str, SffResult], path: str, title: str = "Spectral form factor") -> str:
    """Log-log SFF curves with standard-error bands."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, res in curves.items():
        ax.loglog(res.times, res.mean, label=name)
        lo = (res.mean - res.stderr).clip(min=res.mean.min() * 1e-3)
        ax.fill_between(res.times, lo, res.mean + res.stderr, alpha=0.2)
    ax.set_xlabel("t")
    ax.set_ylabel("SFF")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_table_series(
    x: Sequence[float], series: Mapping[str, Sequence[float]], path: str, xlabel: str, ylabel: str, logy: bool = False
) -> str:
    """One line per named series against ``x`` on a log2 x axis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, ys in series.items():
        ax.plot(x, ys, marker="o", label=name)
    ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
