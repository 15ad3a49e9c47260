"""Figure rendering for the report path.

Figures are presentational only: they cast exact rationals to floats
for drawing, while the JSON and CSV outputs keep the exact values.
Rendering uses the Agg backend so the CLI works headless.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .slaloms import Slalom


def _axes(path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    return plt, fig, ax


def density_figure(members: Sequence[tuple[str, Slalom]], path: str) -> str:
    plt, fig, ax = _axes(path)
    for name, s in members:
        xs = list(range(s.horizon))
        ys = [float(s.density(n)) for n in xs]
        ax.step(xs, ys, where="mid", label=name)
    ax.set_xlabel("level")
    ax.set_ylabel("density |S(n)| / 2^n")
    if len(members) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def decay_figure(points: Sequence[tuple[int, Fraction]], path: str,
                 ylabel: str = "tail bound") -> str:
    plt, fig, ax = _axes(path)
    xs = [p[0] for p in points]
    ys = [float(p[1]) for p in points]
    ax.plot(xs, ys, marker="o", markersize=3)
    ax.set_xlabel("level")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def convergence_figure(rows: Sequence[tuple[int, int, Fraction]], path: str) -> str:
    """Rows are (window level, on-generator flag, nu - delta)."""
    plt, fig, ax = _axes(path)
    on = [(m, float(v)) for m, flag, v in rows if flag]
    off = [(m, float(v)) for m, flag, v in rows if not flag]
    if on:
        ax.scatter([p[0] for p in on], [p[1] for p in on], s=12, label="on generator")
    if off:
        ax.scatter([p[0] for p in off], [p[1] for p in off], s=12, marker="x",
                   label="off generator")
    ax.axhline(0.0, linewidth=0.6, color="grey")
    ax.set_xlabel("window level")
    ax.set_ylabel("nu - delta")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def window_figure(rows: Sequence[tuple[int, Fraction, Fraction]], path: str) -> str:
    """Rows are (window index, window sum, window bound)."""
    plt, fig, ax = _axes(path)
    xs = [r[0] for r in rows]
    ax.bar(xs, [float(r[1]) for r in rows], width=0.7, label="window sum")
    ax.plot(xs, [float(r[2]) for r in rows], color="firebrick", marker="_",
            linestyle="none", markersize=14, label="bound n/2^n")
    ax.set_xlabel("window")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def series_figure(partials: Sequence[Fraction], path: str) -> str:
    plt, fig, ax = _axes(path)
    ax.plot(range(1, len(partials) + 1), [float(p) for p in partials], marker=".")
    ax.set_xlabel("resolved summands")
    ax.set_ylabel("partial sum")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
