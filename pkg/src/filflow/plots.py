"""File-only matplotlib rendering for the report path.

Every function takes a target path and writes a PNG; nothing is shown
interactively.  Plots are a convenience companion to the CSV/JSON reports,
so they favour legibility over configurability.  Three-dimensional data is
drawn as its first-two-coordinates projection.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = ["plot_trajectory", "plot_orbit", "plot_cubes",
           "plot_continuation"]

_FIELD_COLORS = {"X": "tab:blue", "Y": "tab:orange", "Zs": "tab:red"}


def _switch_curve(ax, system, lo, hi):
    """Zero contour of the switching polynomial over the viewport."""
    xs = np.linspace(lo[0], hi[0], 400)
    ys = np.linspace(lo[1], hi[1], 400)
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    if system.nvars == 3:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    hh = system.h(pts).reshape(xx.shape)
    ax.contour(xx, yy, hh, levels=[0.0], colors="0.4",
               linewidths=1.0, linestyles="--")


def _viewport(points, margin=0.08):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    pad = margin * np.maximum(hi - lo, 1e-3)
    return lo - pad, hi + pad


def plot_trajectory(trajectory, system, path, title=None):
    fig, ax = plt.subplots(figsize=(7.0, 5.6))
    all_pts = []
    seen = set()
    for arc in trajectory.arcs:
        pts = np.asarray(arc.points, dtype=float)
        all_pts.append(pts[:, :2])
        fid = str(arc.field_id)
        label = fid if fid not in seen else None
        seen.add(fid)
        ax.plot(pts[:, 0], pts[:, 1], color=_FIELD_COLORS.get(fid, "k"),
                lw=1.4, label=label)
    pts = np.vstack(all_pts)
    lo, hi = _viewport(pts)
    _switch_curve(ax, system, lo, hi)
    p0 = np.asarray(trajectory.arcs[0].start_point, dtype=float)
    ax.plot([p0[0]], [p0[1]], "ko", ms=5, label="start")
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title or "trajectory (%s)" % trajectory.status)
    ax.legend(loc="best", fontsize=9)
    ax.set_aspect("equal", adjustable="box")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_orbit(orbit, system, path, spec=None):
    fig, ax = plt.subplots(figsize=(7.0, 5.6))
    all_pts = []
    for arc in orbit.orbit_trajectory.arcs:
        pts = np.asarray(arc.points, dtype=float)
        all_pts.append(pts[:, :2])
        ax.plot(pts[:, 0], pts[:, 1],
                color=_FIELD_COLORS.get(str(arc.field_id), "k"), lw=1.8)
    pts = np.vstack(all_pts)
    lo, hi = _viewport(pts, margin=0.15)
    _switch_curve(ax, system, lo, hi)
    bp = np.asarray(orbit.base_point, dtype=float)
    ax.plot([bp[0]], [bp[1]], "k*", ms=11, label="base point")
    if spec is not None:
        frame = spec.frame()
        a = spec.anchor - spec.radius * frame[0]
        b = spec.anchor + spec.radius * frame[0]
        ax.plot([a[0], b[0]], [a[1], b[1]], color="tab:green", lw=2.0,
                label="section")
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("%s orbit, period %.6f" % (orbit.kind, orbit.period))
    ax.legend(loc="best", fontsize=9)
    ax.set_aspect("equal", adjustable="box")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _cube_patches(ax, cubes, color, label):
    grid = cubes.grid
    first = True
    for cid in sorted(cubes.ids):
        lo, hi = grid.cube_bounds(grid.coords_of(cid))
        ax.add_patch(plt.Rectangle((lo[0], lo[1]), hi[0] - lo[0],
                                   hi[1] - lo[1], facecolor=color,
                                   edgecolor="none", alpha=0.8,
                                   label=label if first else None))
        first = False


def plot_cubes(report, path, orbit=None):
    """Neighborhood / exit-set / invariant-part cube layers, orbit overlay."""
    fig, ax = plt.subplots(figsize=(7.0, 5.6))
    _cube_patches(ax, report.neighborhood, "0.85", "neighborhood")
    if len(report.exit_set):
        _cube_patches(ax, report.exit_set, "tab:orange", "exit set")
    if len(report.invariant):
        _cube_patches(ax, report.invariant, "tab:blue", "invariant part")
    if orbit is not None:
        for arc in orbit.orbit_trajectory.arcs:
            pts = np.asarray(arc.points, dtype=float)
            ax.plot(pts[:, 0], pts[:, 1], color="k", lw=1.0)
    box = report.grid.box
    ax.set_xlim(box.lo[0], box.hi[0])
    ax.set_ylim(box.lo[1], box.hi[1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("index pair: %s, betti %s" % (report.verdict,
                                               list(report.betti)))
    ax.legend(loc="best", fontsize=9)
    ax.set_aspect("equal", adjustable="box")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_continuation(report, path):
    ok = [e for e in report.entries if e["success"]]
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    if ok:
        eps = [e["eps"] for e in ok]
        drift = [abs(e["drift"]) for e in ok]
        period = [e["period"] for e in ok]
        axes[0].loglog(eps, drift, "o-", color="tab:blue")
        axes[0].set_xlabel("eps")
        axes[0].set_ylabel("|period drift|")
        axes[0].set_title("smooth-orbit period drift")
        axes[1].semilogx(eps, period, "o-", color="tab:blue",
                         label="blended")
        axes[1].axhline(report.filippov_period, color="0.3", ls="--",
                        label="nonsmooth")
        axes[1].set_xlabel("eps")
        axes[1].set_ylabel("period")
        axes[1].set_title("period continuation")
        axes[1].legend(fontsize=9)
    failed = [e for e in report.entries if not e["success"]]
    if failed:
        axes[0].set_title("smooth-orbit period drift (%d failures)"
                          % len(failed))
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
