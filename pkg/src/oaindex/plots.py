"""Static figure renderings of the computed tables (PNG, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import HIGH_THRESHOLD, MEDIUM_THRESHOLD  # noqa: E402
from .stats import COHORTS  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def oai_density(tables, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    bins = np.linspace(0, 1, 41)
    for t in tables:
        vals = [float(r.oai) for r in t.records]
        ax.hist(vals, bins=bins, histtype="step", linewidth=1.5, label=t.scenario, density=True)
    for thr in (MEDIUM_THRESHOLD, HIGH_THRESHOLD):
        ax.axvline(float(thr), color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel("Occupational automation index")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def matrix_heatmap(m, path):
    grid = np.array([[float(v) for v in row] for row in m.cells])
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", cmap="viridis", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(5), [str(r) for r in range(1, 6)])
    ax.set_yticks(range(4), [str(t) for t in range(4)])
    ax.set_xlabel("risk score R")
    ax.set_ylabel("tech level T")
    for t in range(4):
        for r in range(5):
            ax.text(r, t, f"{grid[t, r]:.1f}", ha="center", va="center", color="w" if grid[t, r] < 0.6 else "k")
    ax.set_title(m.name)
    fig.colorbar(im, ax=ax, label="automation index")
    fig.tight_layout()
    _save(fig, path)


def cognitive_gap(grid, path):
    strata = list(grid)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.25
    x = np.arange(len(strata))
    for i, c in enumerate(COHORTS):
        vals = [float(grid[s][c].mean) if grid[s][c] is not None else np.nan for s in strata]
        ax.bar(x + (i - 1) * width, vals, width, label=c.value)
    ax.set_xticks(x, [s.value for s in strata])
    ax.set_ylabel("mean risk rating")
    ax.set_ylim(1, 5)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
