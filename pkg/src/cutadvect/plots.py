"""Figure rendering for the report path.

Writes PNG files next to the delimited output: a cut-cell map of the
solved field with both interfaces overlaid, and the error-versus-h plot
of a convergence study.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402


def solution_figure(summary, plot_dir: str) -> str:
    domain = summary.domain
    space = summary.space
    polys = []
    values = []
    for cell, cc in domain.cut_cells.items():
        for ring in cc.pieces:
            cx = sum(p[0] for p in ring) / len(ring)
            cy = sum(p[1] for p in ring) / len(ring)
            polys.append(ring)
            values.append(space.evaluate(summary.solution, cell, (cx, cy)))

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    coll = PolyCollection(polys, array=values, cmap="viridis",
                          edgecolors="none")
    ax.add_collection(coll)
    for segs, color, style, label in (
            (domain.gamma_new, "white", "-", "new interface"),
            (domain.gamma_old, "0.6", "--", "old interface")):
        lines = [(s.a, s.b) for s in segs]
        ax.add_collection(LineCollection(lines, colors=color,
                                         linestyles=style, linewidths=0.9,
                                         label=label))
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    cfg = summary.config
    ax.set_title(f"{cfg.case}, {cfg.ncells}x{cfg.ncells} cells")
    fig.colorbar(coll, ax=ax, shrink=0.85)
    os.makedirs(plot_dir, exist_ok=True)
    path = os.path.join(plot_dir, f"solution_{cfg.case}_{cfg.ncells}.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def convergence_figure(records, plot_dir: str, case: str) -> str:
    hs = [r.h for r in records]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for key, marker in (("l1", "o"), ("l2", "s"), ("linf", "^")):
        ax.loglog(hs, [getattr(r, key) for r in records],
                  marker=marker, label=key.upper())
    ref = [records[-1].l1 * h / hs[-1] for h in hs]
    ax.loglog(hs, ref, "k--", linewidth=0.8, label="order 1")
    ax.set_xlabel("h")
    ax.set_ylabel("interface error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    os.makedirs(plot_dir, exist_ok=True)
    path = os.path.join(plot_dir, f"convergence_{case}.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
