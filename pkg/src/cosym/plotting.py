"""Figures for a scenario report: moment body, holonomy orbit, residual summary."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import CHECKS  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "figure.figsize": (4.5, 4.0),
}


def savefig(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight", pad_inches=0.1)
    plt.close(fig)
    return path


def _polygon(vertices: np.ndarray) -> np.ndarray:
    """Order 2-D hull vertices counter-clockwise around their centroid."""
    c = vertices.mean(axis=0)
    ang = np.arctan2(vertices[:, 1] - c[1], vertices[:, 0] - c[0])
    v = vertices[np.argsort(ang)]
    return np.vstack([v, v[:1]])


def plot_moment_body(body, title: str = ""):
    inside = body.samples[body.in_box()]
    box = body.clip_box
    with plt.rc_context(STYLE):
        if body.dim == 1:
            fig, ax = plt.subplots(figsize=(4.5, 1.6))
            ax.plot(inside[:, 0], np.zeros(len(inside)), "|", color="0.4", ms=8, label="samples")
            lo, hi = body.vertices[:, 0].min(), body.vertices[:, 0].max()
            ax.plot([lo, hi], [0, 0], color="C0", lw=3, alpha=0.6, label="hull")
            ax.set_xlim(*box[0])
            ax.set_yticks([])
            ax.set_xlabel(r"$\mu_1$")
        elif body.dim == 2:
            fig, ax = plt.subplots()
            poly = _polygon(body.vertices)
            ax.fill(poly[:, 0], poly[:, 1], color="C0", alpha=0.2, lw=0)
            ax.plot(poly[:, 0], poly[:, 1], color="C0", lw=1)
            ax.plot(inside[:, 0], inside[:, 1], ".", color="0.4", ms=2, label="samples")
            for h in body.facets:
                _facet_line(ax, h, box)
            ax.set_xlim(*box[0])
            ax.set_ylim(*box[1])
            ax.set_xlabel(r"$\mu_1$")
            ax.set_ylabel(r"$\mu_2$")
            ax.set_aspect("equal")
        else:
            fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
            for ax, (i, j) in zip(axes, [(0, 1), (0, 2), (1, 2)]):
                ax.plot(inside[:, i], inside[:, j], ".", color="0.4", ms=2)
                ax.plot(body.vertices[:, i], body.vertices[:, j], "o", color="C0", ms=3)
                ax.set_xlabel(rf"$\mu_{i + 1}$")
                ax.set_ylabel(rf"$\mu_{j + 1}$")
        if title:
            fig.suptitle(title)
    return fig


def _facet_line(ax, h, box):
    n, b = h.normal, h.offset
    t = np.linspace(-1, 1, 2) * 10
    p0 = n * b
    d = np.array([-n[1], n[0]])
    pts = p0 + np.outer(t, d)
    ax.plot(pts[:, 0], pts[:, 1], "--", color="C3", lw=1)
    ax.set_xlim(*box[0])
    ax.set_ylim(*box[1])


def plot_holonomy(orbit: np.ndarray, descriptor: str, title: str = ""):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        pts = np.asarray(orbit)
        if pts.shape[1] >= 2:
            ax.plot(pts[:, 0], pts[:, 1], ".", color="C0", ms=4)
            ax.plot(pts[:1, 0], pts[:1, 1], "o", mfc="none", color="C3", ms=8, label="test point")
            ax.plot([0], [0], "+", color="k", ms=8)
            ax.set_aspect("equal")
            ax.set_xlabel("transversal 1")
            ax.set_ylabel("transversal 2")
        else:
            ax.plot(np.arange(len(pts)), pts[:, 0], ".-", color="C0")
            ax.set_xlabel("iterate")
        ax.legend(loc="upper right")
        ax.set_title(f"{title} {descriptor}".strip())
    return fig


def plot_residuals(checks: dict, title: str = ""):
    names, values = [], []
    for name in CHECKS:
        res = checks[name].get("residuals")
        if res:
            names.append(name)
            values.append(max(float(v) for v in res.values()))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 0.35 * max(len(names), 2) + 1))
        floor = 1e-17
        y = np.arange(len(names))
        ax.barh(y, np.maximum(values, floor), color=["C0" if checks[n]["verdict"] == "pass" else "C3"
                                                    for n in names])
        ax.set_xscale("log")
        ax.set_yticks(y)
        ax.set_yticklabels(names)
        ax.invert_yaxis()
        ax.set_xlabel("max residual")
        if title:
            ax.set_title(title)
    return fig


def render_figures(report, directory) -> list[Path]:
    from .report import slug

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    base = slug(report.scenario)
    out = [savefig(plot_residuals(report.checks, report.scenario), d / f"{base}_residuals.png")]
    body = report.artifacts.get("body_object")
    if body is not None and report.moment_body is not None:
        out.append(savefig(plot_moment_body(body, report.scenario), d / f"{base}_moment_body.png"))
    orbit = report.artifacts.get("holonomy_orbit")
    if orbit is not None and report.holonomy is not None:
        fig = plot_holonomy(orbit, report.holonomy["descriptor"], report.scenario)
        out.append(savefig(fig, d / f"{base}_holonomy.png"))
    return out
