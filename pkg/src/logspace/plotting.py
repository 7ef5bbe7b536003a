"""Figures written next to CLI reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .measure_core import PiecewiseFn  # noqa: E402

# PNG metadata without timestamps or version strings keeps files stable
_META = {"Software": None}


def _grid(f: PiecewiseFn, n: int = 400) -> tuple[np.ndarray, np.ndarray]:
    xs = []
    for lo, hi, _ in f.segments:
        w = hi - lo
        xs.append(lo + w * np.concatenate([np.geomspace(1e-4, 1e-2, 40), np.linspace(1e-2, 1.0, n)]))
    x = np.unique(np.concatenate(xs))
    return x, np.asarray(f(x), dtype=float)


def _save(fig, path: Path) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path.name


def plot_ratio(h, path: Path, title: str, log_scale: Optional[bool] = None) -> str:
    """The density ratio with the level ``h = 1`` and the regions above and below it."""
    fig, ax = plt.subplots(figsize=(6, 3.6))
    if isinstance(h, PiecewiseFn):
        x, y = _grid(h)
        ax.plot(x, y, color="C0", lw=1.6, label="h")
        ax.fill_between(x, 1.0, y, where=y > 1, color="C3", alpha=0.25, label="h > 1")
        ax.fill_between(x, y, 1.0, where=y < 1, color="C2", alpha=0.25, label="h < 1")
        if log_scale or (log_scale is None and np.nanmax(y) > 20 * max(np.nanmin(y), 1e-300)):
            ax.set_yscale("log")
    else:
        idx = np.arange(len(h))
        ax.bar(idx, h, color=np.where(np.asarray(h) > 1, "C3", "C2"))
        ax.set_xticks(idx)
    ax.axhline(1.0, color="k", lw=0.8, ls="--", label="h = 1")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_curve(x: Sequence[float], y: Sequence[float], path: Path, title: str,
               ylabel: str = "value", reference: Optional[Sequence[float]] = None) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(x, y, color="C0", lw=1.6, label=ylabel)
    if reference is not None:
        ax.plot(x, reference, color="k", lw=0.8, ls="--", label="identity")
    ax.set_xlabel("x")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_function(f: PiecewiseFn, path: Path, title: str) -> str:
    x, y = _grid(f)
    return plot_curve(x, y, path, title, ylabel="integrand")


def plot_weights(mu: Sequence[float], nu: Sequence[float], path: Path, title: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    idx = np.arange(max(len(mu), len(nu)))
    ax.bar(idx[: len(mu)] - 0.2, mu, width=0.4, label="mu")
    ax.bar(idx[: len(nu)] + 0.2, nu, width=0.4, label="nu")
    ax.set_xticks(idx)
    ax.set_xlabel("atom")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_tally(names: Sequence[str], passed: Sequence[int], failed: Sequence[int], path: Path, title: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    idx = np.arange(len(names))
    ax.bar(idx, passed, color="C2", label="passed")
    ax.bar(idx, failed, bottom=passed, color="C3", label="failed")
    ax.set_xticks(idx)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
