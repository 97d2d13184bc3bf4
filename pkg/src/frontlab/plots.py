"""Static figures for a finished run directory.

Everything is drawn from the CSV artifacts, never from in-memory state, so
`frontlab` can re-plot an old run.  Output is SVG with a fixed hash salt and
no date metadata: plotting the same directory twice gives identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .pipeline import read_snapshots_csv

__all__ = ["render_run"]

_SAVE = {"format": "svg", "metadata": {"Date": None}}


def _style():
    plt.rcParams["svg.hashsalt"] = "frontlab"
    plt.rcParams["figure.figsize"] = (7.0, 4.2)
    plt.rcParams["axes.grid"] = True
    plt.rcParams["grid.alpha"] = 0.3


def _plot_front(run, out):
    t, x, u, wl, wu = read_snapshots_csv(run / "snapshots.csv")
    idx = np.unique(np.linspace(0, len(t) - 1, 6).round().astype(int))
    fig, ax = plt.subplots()
    colors = plt.cm.viridis(np.linspace(0.1, 0.9, len(idx)))
    for k, j in enumerate(idx):
        ax.plot(x, u[j], color=colors[k], lw=1.4, label=f"t = {t[j]:.3g}")
        ax.plot(x, wl[j], color=colors[k], lw=0.8, ls="--")
        ax.plot(x, wu[j], color=colors[k], lw=0.8, ls=":")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("front snapshots (solid u, dashed lower, dotted upper)")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(out / "front.svg", **_SAVE)
    plt.close(fig)


def _diagnostics(run):
    data = np.loadtxt(run / "diagnostics.csv", delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1], data[:, 2]


def _plot_position(run, out):
    t, X, _ = _diagnostics(run)
    fig, ax = plt.subplots()
    ax.plot(t, X, "o-", ms=3, lw=1.2, color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("X(t)")
    ax.set_title("interface position (rightmost crossing of 1/2)")
    fig.savefig(out / "position.svg", **_SAVE)
    plt.close(fig)


def _plot_width(run, out):
    t, _, width = _diagnostics(run)
    fig, ax = plt.subplots()
    ax.plot(t, width, "o-", ms=3, lw=1.2, color="tab:red", label="measured")
    cert = run / "certificate.json"
    if cert.exists():
        details = {r["name"]: r for r in
                   json.loads(cert.read_text())["records"]}.get("width", {})
        d = details.get("details", {})
        for key, style, label in (("bound_stated", "--", "stated bound"),
                                  ("bound_ratio", ":", "ratio bound")):
            val = d.get(key)
            if val is not None and math.isfinite(val):
                ax.axhline(val, ls=style, color="k", lw=1.0, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("interface width")
    ax.set_title("interface width against its uniform bounds")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(out / "width.svg", **_SAVE)
    plt.close(fig)


def render_run(run_dir, out_dir=None):
    """Write front.svg, position.svg, width.svg next to the run's CSVs."""
    run = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else run
    out.mkdir(parents=True, exist_ok=True)
    _style()
    made = []
    if (run / "snapshots.csv").exists():
        _plot_front(run, out)
        made.append("front.svg")
    if (run / "diagnostics.csv").exists():
        _plot_position(run, out)
        _plot_width(run, out)
        made.extend(["position.svg", "width.svg"])
    return made
