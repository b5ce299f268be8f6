"""Topological certification of detected periodic orbits.

The pipeline covers a neighborhood of the numerically detected orbit with
grid cubes, builds the sampled outer map of the time-tau flow, extracts the
combinatorial invariant part, checks isolation, constructs an index pair,
and computes its relative homology.  A periodic verdict is issued when the
Betti numbers show the alternating rank pattern of a hyperbolic closed
orbit (consecutive equal pairs starting at degree 0 or degree 1) and the
section validation certificate is supplied, so the homological evidence is
backed by a transversal return map on the same region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubical import (CubicalGrid, CubicalSet, build_outer_map,
                      check_isolating, index_pair, invariant_part)
from .homology import HomologySummary, relative_homology
from .system import Box, PiecewiseSystem, Tolerances

__all__ = ["ConleyReport", "periodic_verdict", "build_orbit_neighborhood",
           "certify_periodic_orbit", "certify_region"]

VERDICT_CERTIFIED = "PeriodicOrbitCertified"
VERDICT_INCONCLUSIVE = "Inconclusive"
VERDICT_NOT_ISOLATING = "NotIsolating"

# Landing points only need to be resolved to a fraction of a grid cell, so
# the cube-map stage runs the integrator far looser than orbit detection.
CUBE_FLOW_RTOL = 1e-6
CUBE_FLOW_ATOL = 1e-9


@dataclass
class ConleyReport:
    """Everything the certification pipeline measured, JSON-ready."""

    isolating: bool
    betti: tuple
    torsion: tuple
    verdict: str
    grid: CubicalGrid
    tau: float
    bloat: int
    neighborhood: CubicalSet
    exit_set: CubicalSet
    invariant: CubicalSet
    homology: HomologySummary

    def to_dict(self):
        return {
            "isolating": self.isolating,
            "bettiPerDegree": list(self.betti),
            "torsion": [list(t) for t in self.torsion],
            "verdict": self.verdict,
            "grid": self.grid.to_dict(),
            "tau": self.tau,
            "bloat": self.bloat,
            "cubes": {
                "neighborhood": len(self.neighborhood),
                "exitSet": len(self.exit_set),
                "invariant": len(self.invariant),
            },
        }


def _pairs_equal(seq):
    b = list(seq)
    if len(b) % 2:
        b.append(0)
    return all(b[i] == b[i + 1] for i in range(0, len(b), 2))


def _certificate_ok(certificate):
    if certificate is None:
        return False
    if isinstance(certificate, bool):
        return certificate
    return bool(getattr(certificate, "ok"))


def periodic_verdict(report, section_certificate=None):
    """Combine homological evidence with the section certificate.

    Certified requires: the neighborhood isolates, the relative Betti
    numbers are not all zero and pair up as equal consecutive ranks
    (B0=B1, B2=B3, ... or B0=0, B1=B2, B3=B4, ...), and a passing section
    validation was supplied.  A non-isolating neighborhood gets its own
    verdict since refining the grid may still rescue it.
    """
    if not report.isolating:
        return VERDICT_NOT_ISOLATING
    betti = report.betti
    pattern = _pairs_equal(betti) or _pairs_equal([0] + list(betti))
    if pattern and any(betti) and _certificate_ok(section_certificate):
        return VERDICT_CERTIFIED
    return VERDICT_INCONCLUSIVE


def _trace_cubes(trajectory, grid):
    """Cube ids visited by a trajectory, with inter-sample gaps subdivided
    below half a cube width so thin diagonal passes are not skipped."""
    min_width = float(np.min(grid.widths))
    ids = set()

    def mark(point):
        c = grid.cube_of_point(point)
        if c is not None:
            ids.add(grid.id_of(c))

    for arc in trajectory.arcs:
        pts = np.asarray(arc.points, dtype=float)
        ts = np.asarray(arc.times, dtype=float)
        for k in range(len(ts)):
            mark(pts[k])
            if k + 1 == len(ts):
                break
            gap = float(np.max(np.abs(pts[k + 1] - pts[k])))
            if gap > 0.4 * min_width:
                extra = int(np.ceil(gap / (0.4 * min_width)))
                for t in np.linspace(ts[k], ts[k + 1], extra + 1)[1:-1]:
                    mark(trajectory.evaluate(t))
    return ids


def build_orbit_neighborhood(system: PiecewiseSystem, trajectory,
                             grid: CubicalGrid, tau: float,
                             pad_cells: int = 2, samples_per_axis: int = 2,
                             bloat_cells: int = 1, margin_cells: int | None = None,
                             tol: Tolerances | None = None,
                             flow_cache: dict | None = None,
                             max_rounds: int = 64):
    """Cover the orbit, pad it, and absorb forward images until the set maps
    strictly inside itself.

    Each round adds the cube images dilated by `margin_cells` (default
    bloat + 1), so at the fixpoint every image stays `margin_cells` away
    from the rim.  That strictness is what makes the pipeline work on an
    attracting orbit: no cube exits (empty exit set), and the rim is not in
    the image of anything, so the backward pruning of invariant_part peels
    it away and the invariant band cannot touch the boundary collar.

    Returns the neighborhood together with the outer map already built on it
    (the loop ends exactly when the map's dilated images all stay inside, so
    the final map is reusable).  Raises ValueError when images leave the
    grid box or absorption does not settle, both signs that the box is too
    small for this orbit and time step.
    """
    cache = flow_cache if flow_cache is not None else {}
    if margin_cells is None:
        margin_cells = bloat_cells + 1
    N = CubicalSet(grid, _trace_cubes(trajectory, grid)).dilate(pad_cells)
    for _ in range(max_rounds):
        F = build_outer_map(system, grid, N, tau,
                            samples_per_axis=samples_per_axis,
                            bloat_cells=bloat_cells, tol=tol, flow_cache=cache)
        if F.exits:
            raise ValueError(
                "orbit neighborhood leaks off the grid box at %d cubes; "
                "enlarge the box" % len(F.exits))
        hit = set()
        for img in F.images.values():
            hit |= img
        grow = CubicalSet(grid, hit).dilate(margin_cells).ids - N.ids
        if not grow:
            return N, F
        N = N.union(grow)
    raise ValueError("orbit neighborhood did not settle after %d absorption "
                     "rounds" % max_rounds)


def _certify(system, grid, N, F, tau, bloat_cells, section_certificate):
    inv = invariant_part(F, N)
    isolating = check_isolating(F, N, inv)
    n_set, exit_set = index_pair(F, N)
    summary = relative_homology(n_set, exit_set)
    report = ConleyReport(
        isolating=isolating, betti=summary.betti, torsion=summary.torsion,
        verdict="", grid=grid, tau=float(tau), bloat=int(bloat_cells),
        neighborhood=n_set, exit_set=exit_set, invariant=inv,
        homology=summary)
    report.verdict = periodic_verdict(report, section_certificate)
    return report


def default_orbit_box(orbit_trajectory, domain: Box, margin: float = 0.18):
    """Orbit bounding box padded by a fraction of its extent, clipped to the
    domain box."""
    pts = np.vstack([np.asarray(arc.points, dtype=float)
                     for arc in orbit_trajectory.arcs])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = margin * np.maximum(hi - lo, 1e-3)
    lo = np.maximum(lo - pad, np.asarray(domain.lo, dtype=float))
    hi = np.minimum(hi + pad, np.asarray(domain.hi, dtype=float))
    return Box(tuple(lo), tuple(hi))


def certify_periodic_orbit(system: PiecewiseSystem, orbit,
                           box: Box | None = None, resolution=64,
                           tau: float | None = None, bloat_cells: int = 1,
                           samples_per_axis: int = 2, pad_cells: int = 4,
                           section_certificate=None,
                           tol: Tolerances | None = None,
                           flow_cache: dict | None = None) -> ConleyReport:
    """Full certification pipeline for a detected periodic orbit.

    The time step defaults to one full return period.  Over a whole loop
    the sliding segment synchronizes nearby trajectories onto the orbit, so
    the padded tube maps strictly inside itself and isolation follows.  A
    fractional step would expose the transverse stretch of the spiral legs,
    under which the absorbed neighborhood outgrows any box that fits in the
    domain; only the full return is uniformly contracting.
    """
    if tau is None:
        tau = float(orbit.period)
    if box is None:
        box = default_orbit_box(orbit.orbit_trajectory, system.domain)
    if tol is None:
        tol = system.tol.with_overrides(rk_rtol=CUBE_FLOW_RTOL,
                                        rk_atol=CUBE_FLOW_ATOL)
    grid = CubicalGrid(box, resolution)
    N, F = build_orbit_neighborhood(
        system, orbit.orbit_trajectory, grid, tau, pad_cells=pad_cells,
        samples_per_axis=samples_per_axis, bloat_cells=bloat_cells,
        tol=tol, flow_cache=flow_cache)
    return _certify(system, grid, N, F, tau, bloat_cells, section_certificate)


def certify_region(system: PiecewiseSystem, grid: CubicalGrid,
                   region: Box | CubicalSet | None, tau: float,
                   bloat_cells: int = 1, samples_per_axis: int = 2,
                   section_certificate=None,
                   tol: Tolerances | None = None,
                   flow_cache: dict | None = None) -> ConleyReport:
    """Certification pipeline on an explicitly given neighborhood.

    `region` may be a box (covered by all intersecting cubes), an existing
    cube set, or None for the whole grid.
    """
    if region is None:
        N = CubicalSet.full(grid)
    elif isinstance(region, CubicalSet):
        N = region
    else:
        N = CubicalSet.from_box(grid, region)
    if not len(N):
        raise ValueError("the region covers no grid cubes")
    if tol is None:
        tol = system.tol.with_overrides(rk_rtol=CUBE_FLOW_RTOL,
                                        rk_atol=CUBE_FLOW_ATOL)
    F = build_outer_map(system, grid, N, tau,
                        samples_per_axis=samples_per_axis,
                        bloat_cells=bloat_cells, tol=tol,
                        flow_cache=flow_cache)
    return _certify(system, grid, N, F, tau, bloat_cells, section_certificate)
