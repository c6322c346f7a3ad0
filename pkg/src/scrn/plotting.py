"""Matplotlib renderings of 2-D datasets, decision boundaries and reports.

Figures are written as SVG with a fixed hash salt and no date stamp so that
repeated runs produce byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.spatial import ConvexHull, QhullError  # noqa: E402

from .errors import DimensionMismatch  # noqa: E402

GRID = 200
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
_HATCHES = ["//", "\\\\", "xx", "..", "++", "oo", "--", "||"]

STYLE = {
    "svg.hashsalt": "scrn",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _bounds(points, pad=0.15):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    return lo - pad * span, hi + pad * span


def _outputs(model, XY):
    y = np.asarray(model.forward(XY))
    return y.reshape(len(XY), -1)


def _hull_patch(ax, pts, color, hatch):
    if len(pts) >= 3:
        try:
            hull = ConvexHull(pts)
            poly = pts[hull.vertices]
        except QhullError:
            poly = pts
    else:
        poly = pts
    if len(poly) >= 3:
        ax.fill(poly[:, 0], poly[:, 1], facecolor="none", edgecolor=color, hatch=hatch, lw=0.8)
    elif len(poly) == 2:
        ax.plot(poly[:, 0], poly[:, 1], color=color, lw=2.5, alpha=0.6)
    else:
        ax.scatter(poly[:, 0], poly[:, 1], s=160, facecolors="none", edgecolors=color, lw=1.2)


def _line(ax, w, b, lo, hi, **kw):
    w = np.asarray(w, dtype=float)
    if abs(w[1]) >= abs(w[0]):
        xs = np.array([lo[0], hi[0]])
        ys = -(w[0] * xs + b) / w[1]
    else:
        ys = np.array([lo[1], hi[1]])
        xs = -(w[1] * ys + b) / w[0]
    ax.plot(xs, ys, **kw)


def plot_dataset(dataset, path, model=None, report=None, title=None):
    """Scatter a 2-D dataset; optionally overlay a model's zero level sets
    and a decomposition report (hatched subset hulls, separator lines)."""
    if dataset.dim != 2:
        raise DimensionMismatch(f"plotting needs 2-D data, got {dataset.dim}-D")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        lo, hi = _bounds(dataset.points)

        if model is not None:
            gx = np.linspace(lo[0], hi[0], GRID)
            gy = np.linspace(lo[1], hi[1], GRID)
            XX, YY = np.meshgrid(gx, gy)
            Y = _outputs(model, np.column_stack([XX.ravel(), YY.ravel()]))
            for k in range(Y.shape[1]):
                Z = Y[:, k].reshape(XX.shape)
                if Z.min() < 0 < Z.max():
                    color = _COLORS[k % len(_COLORS)] if Y.shape[1] > 1 else "k"
                    ax.contour(XX, YY, Z, levels=[0.0], colors=[color], linewidths=1.2)
                    ax.contourf(XX, YY, Z, levels=[0.0, np.inf], colors=[color], alpha=0.08)

        if report is not None:
            _draw_report(ax, dataset, report, lo, hi)

        for k in range(dataset.n_classes):
            pts = dataset.class_points(k)
            ax.scatter(pts[:, 0], pts[:, 1], s=28, color=_COLORS[k % len(_COLORS)],
                       edgecolors="k", linewidths=0.5, label=f"class {k}", zorder=3)
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_aspect("equal")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def _draw_report(ax, dataset, report, lo, hi):
    neg = dataset.points[dataset.labels == report.get("neg_label", 1)]
    pos = dataset.points[dataset.labels == report.get("pos_label", 0)]
    if report["kind"] == "drill":
        groups = [(node["neg_members"], node["leaves"]) for node in report["nodes"]]
        for i, (members, leaves) in enumerate(groups):
            color = _COLORS[(i + 2) % len(_COLORS)]
            _hull_patch(ax, neg[members], color, _HATCHES[i % len(_HATCHES)])
            for leaf in leaves:
                _hull_patch(ax, pos[leaf["pos_members"]], color, "..")
                sep = leaf["separator"]
                _line(ax, sep["w"], sep["b"], lo, hi, color=color, lw=0.8, ls="--")
        return
    for i, sub in enumerate(report["subsets"]):
        color = _COLORS[(i + 2) % len(_COLORS)]
        _hull_patch(ax, neg[sub["members"]], color, _HATCHES[i % len(_HATCHES)])
        sep = sub["separator"]
        if "w" in sep:
            _line(ax, sep["w"], sep["b"], lo, hi, color=color, lw=0.8, ls="--")


def plot_trace(trace, path):
    """Objective per MM step (log scale when strictly positive)."""
    obj = trace.objectives
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        steps = np.arange(len(obj))
        ax.plot(steps, obj, marker="o", ms=2.5, lw=1.0, color=_COLORS[0])
        if np.all(obj > 0):
            ax.set_yscale("log")
        ax.set_xlabel("MM step")
        ax.set_ylabel("objective")
        fig.tight_layout()
        _save(fig, path)
