"""Delimited report files and the figures rendered alongside them.

CSV rules: header row, comma separator, `.` decimal point, LF line endings.
Floats are written with repr so a rerun with identical inputs produces a
byte-identical file. Figures carry no data the CSVs do not; determinism is
asserted on the CSVs only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .persist import atomic_write_bytes


def format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
    return path


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_loss_curves(path, loss_curves: list[np.ndarray], title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, curve in enumerate(loss_curves):
        ax.plot(np.arange(len(curve)), curve, label=f"step {i}")
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("squared error")
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def plot_scatter(path, points: np.ndarray, title: str, reference: np.ndarray | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    if reference is not None:
        ax.scatter(reference[:, 0], reference[:, 1], s=4, alpha=0.15, color="gray", label="reference")
    ax.scatter(points[:, 0], points[:, 1], s=6, alpha=0.6, color="tab:blue", label="samples")
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sweep(path, grid: np.ndarray, mean_dists: np.ndarray, t_cur: float, t_next: float,
               tau_star: float, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid, mean_dists, color="tab:blue")
    ax.axvline(t_cur, color="gray", linestyle="--", linewidth=1, label="interval ends")
    ax.axvline(t_next, color="gray", linestyle="--", linewidth=1)
    ax.axvline(tau_star, color="tab:red", linestyle="-", linewidth=1, label="best time input")
    ax.set_xscale("log")
    ax.set_xlabel("time input")
    ax.set_ylabel("mean distance to target")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_cumulative(path, curves: list[np.ndarray], labels: list[str], title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve, label in zip(curves, labels):
        ax.plot(np.arange(1, len(curve) + 1), curve, marker="o", markersize=3, label=label)
    ax.axhline(0.9, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("components")
    ax.set_ylabel("cumulative variance fraction")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_lines(path, x: np.ndarray, curves: list[np.ndarray], labels: list[str], title: str,
               xlabel: str, ylabel: str, logx: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve, label in zip(curves, labels):
        ax.plot(x, curve, label=label)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_bars(path, labels: list[str], values: np.ndarray, title: str, ylabel: str) -> Path:
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(labels)), 4))
    ax.bar(np.arange(len(labels)), values, color="tab:blue")
    ax.set_xticks(np.arange(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _save(fig, path)


def plot_capacity(path, taus: np.ndarray, pre: np.ndarray, post: np.ndarray, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(taus, pre, marker="o", markersize=3, label="before refit")
    ax.plot(taus, post, marker="o", markersize=3, label="after refit")
    ax.set_xscale("log")
    ax.set_xlabel("target time input")
    ax.set_ylabel("mean abs feature error")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)
