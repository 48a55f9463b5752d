"""SVG figures for traces and stepsize curves.

Figures are built with the object-oriented matplotlib API (no pyplot state)
and saved through the SVG backend with a fixed hash salt and no date stamp,
so identical inputs give identical files. Each curve carries the gid
``curve-<i>`` so tests and scripts can find its path in the SVG.
"""

from __future__ import annotations

from itertools import count
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

LINESTYLES = ("-", "--", "-.", ":")
MARKERS = (None, "o", "s", "^", "v", "D")
STYLE = {
    "svg.hashsalt": "aicn",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

PANELS = (
    # file stem, y quantity, x quantity, log y, title
    ("f_vs_k", "f", "k", False, "$f(x_k)$"),
    ("subopt_vs_k", "subopt", "k", True, "$f(x_k) - f_*$"),
    ("subopt_vs_time", "subopt", "time_s", True, "$f(x_k) - f_*$"),
    ("grad_vs_k", "grad_l2", "k", True, r"$\|\nabla f(x_k)\|_2$"),
)


def clamp_positive(values):
    """Replace entries ``<= 0`` by the smallest positive entry (1.0 if none).

    Log axes cannot show nonpositive suboptimality; at the floor the
    reference optimum and the iterates agree to all digits.
    """
    v = np.asarray(values, dtype=float)
    pos = v[v > 0]
    floor = pos.min() if pos.size else 1.0
    return np.where(v > 0, v, floor)


def _styles():
    colors = matplotlib.rcParams["axes.prop_cycle"].by_key()["color"]
    for i in count():
        yield (colors[i % len(colors)], LINESTYLES[i % len(LINESTYLES)],
               MARKERS[(i // len(LINESTYLES)) % len(MARKERS)])


def _series(trace, quantity, f_star):
    if quantity == "k":
        return np.array([r.k for r in trace], dtype=float)
    if quantity == "subopt":
        return np.array([r.f - f_star for r in trace])
    return np.array([getattr(r, quantity) for r in trace])


def _save(fig: Figure, path: Path) -> Path:
    FigureCanvasSVG(fig)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def emit_plots(traces: dict, f_star, out_dir, prefix: str = "") -> list[Path]:
    """One SVG per panel with a curve per trace; returns the written paths.

    ``traces`` maps legend labels to traces. Suboptimality panels are
    skipped when ``f_star`` is None.
    """
    out_dir = Path(out_dir)
    paths = []
    with matplotlib.rc_context(STYLE):
        for stem, yq, xq, logy, title in PANELS:
            if yq == "subopt" and f_star is None:
                continue
            fig = Figure(figsize=(6, 4))
            ax = fig.add_subplot()
            ys_all = {label: _series(tr, yq, f_star) for label, tr in traces.items()}
            if yq == "subopt":
                pooled = clamp_positive(np.concatenate(list(ys_all.values()) or [np.ones(1)]))
                floor = pooled.min()
                ys_all = {k: np.where(v > 0, v, floor) for k, v in ys_all.items()}
            for i, ((label, tr), (color, ls, marker)) in enumerate(zip(traces.items(), _styles())):
                xs = _series(tr, xq, f_star)
                ys = ys_all[label]
                (line,) = ax.plot(xs, ys, color=color, linestyle=ls, marker=marker,
                                  markevery=max(1, len(xs) // 10), markersize=4, label=label)
                line.set_gid(f"curve-{i}")
            if logy:
                ax.set_yscale("log")
            ax.set_xlabel("time, s" if xq == "time_s" else "iteration $k$")
            ax.set_title(title)
            if traces:
                ax.legend(fontsize=8)
            fig.tight_layout()
            paths.append(_save(fig, out_dir / f"{prefix}{stem}.svg"))
    return paths


def plot_stepsizes(rows, path, L: float) -> Path:
    rows = np.asarray(rows, dtype=float)
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(6, 4))
        ax = fig.add_subplot()
        names = ("AICN", r"$1/(1+G_1)$", r"$(1+G_1)/(1+G_1+G_1^2)$")
        for i, (name, (color, ls, _)) in enumerate(zip(names, _styles())):
            (line,) = ax.loglog(rows[:, 0], rows[:, i + 1], color=color, linestyle=ls, label=name)
            line.set_gid(f"curve-{i}")
        ax.set_xlabel(r"$\|\nabla f(x)\|_x^*$")
        ax.set_ylabel("stepsize")
        ax.set_title(f"damped Newton stepsizes, L = {L:g}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        return _save(fig, Path(path))
