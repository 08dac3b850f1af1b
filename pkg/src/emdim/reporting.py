"""Matplotlib figures rendered next to the delimited output files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_convergence_plot(rows, slope, path):
    """Log-log error-versus-radius plot with a slope-1 reference line."""
    rows = sorted(rows)
    r = np.array([x for x, _ in rows])
    e = np.array([y for _, y in rows])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(r, e, "*-", color="#27408b", markersize=9, label="L2 error")
    anchor = e[-1] / r[-1]
    ax.loglog(r, anchor * r, ":", color="#8b2727", label="slope 1")
    ax.set_xlabel("R")
    ax.set_ylabel("potential L2 error")
    ax.set_title(f"model validation (fitted slope {slope:.2f})")
    ax.grid(True, which="both", linestyle="--", alpha=0.4)
    ax.legend(loc="upper left", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_residual_plot(history, path):
    """Relative residual per iteration of one solve."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.semilogy(np.arange(len(history)), history, color="#27408b")
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative residual")
    ax.set_title("solver convergence")
    ax.grid(True, which="both", linestyle="--", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
