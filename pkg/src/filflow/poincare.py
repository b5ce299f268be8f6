"""Planar sections, return maps, and periodic-orbit detection.

A section is a flat disk: anchor point, unit normal, radius, plus a crossing
sense and a uniqueness time window.  The return map rides the semiflow with a
section probe, so the crossing time is located by the same event machinery
(and to the same tolerance) as the switching events.  `find_periodic` runs a
secant (planar) or Broyden (higher-dimensional) iteration on the displacement
map of the section chart and certifies the result by one independent
re-integration over the computed period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import null_space

from .errors import LeftNeighborhood, NoConvergence, NoReturn
from .integrate import EventKind, SectionProbe
from .semiflow import Trajectory, select_field, semiflow
from .sliding import eval_sliding
from .system import (Box, FieldId, PiecewiseSystem, Tolerances,
                     classify_tangency)

_SENSE_NAMES = {"positive": 1, "negative": -1, "both": 0}
_RATE_FLOOR = 1e-9              # slower plane crossings count as tangential
_PLANE_RESIDUAL = 1e-8


def _parse_sense(value):
    if isinstance(value, str):
        try:
            return _SENSE_NAMES[value]
        except KeyError:
            raise ValueError("crossing sense must be one of %s, got %r"
                             % (sorted(_SENSE_NAMES), value)) from None
    iv = int(value)
    if iv not in (-1, 0, 1):
        raise ValueError("crossing sense must be -1, 0, or +1, got %r" % (value,))
    return iv


@dataclass
class SectionSpec:
    """A flat disk transverse to the flow.

    `crossing_sense` picks which plane piercings count: "positive" (along the
    normal), "negative" (against it), or "both"; the integers +1/-1/0 are
    accepted as synonyms.  `xi_window` is the uniqueness window: a valid
    section is crossed at most once in any time interval of that length.
    """

    anchor: np.ndarray
    normal: np.ndarray
    radius: float
    crossing_sense: str = "both"
    xi_window: float = 1.0

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float)
        self.normal = np.asarray(self.normal, dtype=float)
        if self.anchor.shape != self.normal.shape or self.anchor.ndim != 1:
            raise ValueError("anchor and normal must be vectors of equal length")
        norm = float(np.linalg.norm(self.normal))
        if norm < 1e-12:
            raise ValueError("section normal must be nonzero")
        self.normal = self.normal / norm
        self.radius = float(self.radius)
        if self.radius <= 0.0:
            raise ValueError("section radius must be positive")
        self.sense = _parse_sense(self.crossing_sense)
        self.crossing_sense = {1: "positive", -1: "negative", 0: "both"}[self.sense]
        self.xi_window = float(self.xi_window)
        if self.xi_window <= 0.0:
            raise ValueError("xi_window must be positive")
        self._frame = None

    @property
    def dimension(self):
        return len(self.anchor)

    def frame(self):
        """Orthonormal basis of the disk plane, one row per chart coordinate."""
        if self._frame is None:
            self._frame = null_space(self.normal[None, :]).T
        return self._frame

    def plane_value(self, point):
        return float((np.asarray(point, dtype=float) - self.anchor) @ self.normal)

    def chart(self, point):
        """In-plane coordinates of a point (its plane offset is discarded)."""
        return self.frame() @ (np.asarray(point, dtype=float) - self.anchor)

    def point_at(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return self.anchor + self.frame().T @ xi

    def snap(self, point):
        """Orthogonal projection onto the section plane."""
        p = np.asarray(point, dtype=float)
        return p - self.plane_value(p) * self.normal

    def contains(self, point, plane_tol=_PLANE_RESIDUAL):
        p = np.asarray(point, dtype=float)
        return (abs(self.plane_value(p)) <= plane_tol
                and np.linalg.norm(p - self.anchor) <= self.radius + 1e-12)

    def probe(self, t_min=0.0):
        return SectionProbe(anchor=self.anchor, normal=self.normal,
                            radius=self.radius, sense=self.sense,
                            t_min=t_min, rate_floor=_RATE_FLOOR)

    def to_dict(self):
        return {
            "anchor": [float(v) for v in self.anchor],
            "normal": [float(v) for v in self.normal],
            "radius": self.radius,
            "crossingSense": self.crossing_sense,
            "xiWindow": self.xi_window,
        }


@dataclass
class ReturnRecord:
    """One application of the first-return map."""

    start: np.ndarray
    image: np.ndarray
    return_time: float
    trajectory: Trajectory

    def to_dict(self):
        return {
            "start": [float(v) for v in self.start],
            "image": [float(v) for v in self.image],
            "returnTime": float(self.return_time),
        }


def return_map(system: PiecewiseSystem, spec: SectionSpec, x,
               t_cap: float = 200.0, tol: Tolerances | None = None) -> ReturnRecord:
    """First return of the semiflow from `x` to the section disk.

    `x` is projected onto the section plane before launch.  Raises NoReturn
    when no admissible crossing happens within `t_cap`, LeftNeighborhood when
    the motion exits the domain box first.
    """
    tol = tol or system.tol
    x0 = spec.snap(x)
    if np.linalg.norm(x0 - spec.anchor) > spec.radius + 1e-9:
        raise ValueError("start point %s is off the section disk"
                         % (tuple(float(v) for v in x0),))
    t_min = 10.0 * tol.event_tol
    traj = semiflow(system, x0, t_cap, tol=tol, section=spec.probe(t_min))
    if traj.status == "SectionHit":
        ev = traj.arcs[-1].terminal_event
        return ReturnRecord(start=x0, image=ev.point.copy(),
                            return_time=float(ev.time), trajectory=traj)
    if traj.status == "DomainExit":
        raise LeftNeighborhood(
            "motion left the domain box at t=%.6g before returning"
            % traj.total_time)
    raise NoReturn("no admissible section crossing within t=%g (status %s)"
                   % (t_cap, traj.status))


def return_map_derivative(system, spec, xi_star, delta=None,
                          t_cap: float = 200.0, tol: Tolerances | None = None):
    """Finite-difference Jacobian of the chart return map at `xi_star`.

    Central differences; returns a scalar for planar systems, an
    (n-1, n-1) matrix otherwise.
    """
    xi_star = np.atleast_1d(np.asarray(xi_star, dtype=float))
    m = len(xi_star)
    if delta is None:
        delta = 1e-4 * (1.0 + float(np.linalg.norm(xi_star)))

    def pi(xi):
        rec = return_map(system, spec, spec.point_at(xi), t_cap, tol)
        return spec.chart(rec.image)

    cols = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = delta
        cols.append((pi(xi_star + e) - pi(xi_star - e)) / (2.0 * delta))
    jac = np.column_stack(cols)
    return float(jac[0, 0]) if m == 1 else jac


@dataclass
class PeriodicOrbit:
    """A closed orbit found on a section, with its closure certificate."""

    base_point: np.ndarray
    period: float
    closure_error: float
    orbit_trajectory: Trajectory
    kind: str = "smooth"         # smooth | polyI | polyII | polyIII
    hyperbolic: bool | None = None
    eta_prime: float | None = None
    fold_census: dict = dc_field(default_factory=dict)
    arc_kinds: list = dc_field(default_factory=list)
    system: PiecewiseSystem | None = None
    spec: SectionSpec | None = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "period": float(self.period),
            "closureError": float(self.closure_error),
            "basePoint": [float(v) for v in self.base_point],
            "foldCensus": dict(self.fold_census),
            "arcKinds": list(self.arc_kinds),
            "hyperbolic": self.hyperbolic,
            "etaPrime": self.eta_prime,
        }


def _displacement(system, spec, xi, t_cap, tol):
    rec = return_map(system, spec, spec.point_at(xi), t_cap, tol)
    return spec.chart(rec.image) - np.atleast_1d(xi), rec


def find_periodic(system: PiecewiseSystem, spec: SectionSpec, seed,
                  max_iter: int = 50, t_cap: float = 200.0,
                  settle: float = 0.0, fp_tol: float = 1e-8,
                  tol: Tolerances | None = None) -> PeriodicOrbit:
    """Fixed point of the first-return map, refined from `seed`.

    Planar systems use a secant iteration on the single chart coordinate,
    higher dimensions a Broyden update seeded with a finite-difference
    Jacobian.  With `settle` > 0 the seed is first flowed until it crosses
    the section, which pulls it onto the attractor before the iteration
    starts.  Raises NoConvergence when `max_iter` applications of the map do
    not pin the fixed point down.
    """
    tol = tol or system.tol
    seed = np.asarray(seed, dtype=float)
    if settle > 0.0:
        pre = semiflow(system, seed, settle, tol=tol,
                       section=spec.probe(10.0 * tol.event_tol))
        if pre.status == "SectionHit":
            seed = pre.final_point
    xi = spec.chart(spec.snap(seed))
    m = len(xi)
    loose_tol = max(100.0 * fp_tol, 1e-6)

    def step_error(exc):
        raise NoConvergence("return map failed during the iteration: %s"
                            % exc) from exc

    try:
        f, rec = _displacement(system, spec, xi, t_cap, tol)
    except (NoReturn, LeftNeighborhood) as exc:
        raise NoConvergence("return map failed at the seed: %s" % exc) from exc
    best = (float(np.linalg.norm(f)), xi.copy(), rec)

    if m == 1:
        x_prev, f_prev = float(xi[0]), float(f[0])
        x_cur = x_prev + f_prev          # natural first probe step
        converged = abs(f_prev) <= fp_tol
        it = 0
        while not converged and it < max_iter:
            it += 1
            if abs(x_cur) > spec.radius:
                raise NoConvergence(
                    "iterate left the section disk after %d steps" % it)
            try:
                f_vec, rec = _displacement(system, spec, np.array([x_cur]),
                                           t_cap, tol)
            except (NoReturn, LeftNeighborhood) as exc:
                step_error(exc)
            f_cur = float(f_vec[0])
            if abs(f_cur) < best[0]:
                best = (abs(f_cur), np.array([x_cur]), rec)
            if abs(f_cur) <= fp_tol:
                xi = np.array([x_cur])
                converged = True
                break
            denom = f_cur - f_prev
            if abs(denom) < 1e-15 * (1.0 + abs(f_cur)):
                x_next = x_cur + f_cur   # flat secant: fall back to iteration
            else:
                x_next = x_cur - f_cur * (x_cur - x_prev) / denom
            x_prev, f_prev, x_cur = x_cur, f_cur, x_next
        if not converged:
            if best[0] <= loose_tol:
                _, xi, rec = best
            else:
                raise NoConvergence(
                    "displacement stayed at %.3e after %d returns"
                    % (best[0], max_iter))
    else:
        if float(np.linalg.norm(f)) > fp_tol:
            delta = 1e-5 * (1.0 + float(np.linalg.norm(xi)))
            jac = np.zeros((m, m))
            for i in range(m):
                e = np.zeros(m)
                e[i] = delta
                try:
                    fp, _ = _displacement(system, spec, xi + e, t_cap, tol)
                except (NoReturn, LeftNeighborhood) as exc:
                    step_error(exc)
                jac[:, i] = (fp - f) / delta
            converged = False
            for it in range(max_iter):
                # rank floor: directions the map moves by less than ~1e-6
                # of the dominant one get a zero (minimum-norm) step, not a
                # noise-amplified jump
                dxi, *_ = np.linalg.lstsq(jac, -f, rcond=1e-6)
                step_norm = float(np.linalg.norm(dxi))
                if step_norm > 0.5 * spec.radius:
                    dxi *= 0.5 * spec.radius / step_norm
                xi_new = xi + dxi
                if np.linalg.norm(xi_new) > spec.radius:
                    raise NoConvergence(
                        "iterate left the section disk after %d steps" % (it + 1))
                try:
                    f_new, rec_new = _displacement(system, spec, xi_new,
                                                   t_cap, tol)
                except (NoReturn, LeftNeighborhood) as exc:
                    step_error(exc)
                if float(np.linalg.norm(f_new)) < best[0]:
                    best = (float(np.linalg.norm(f_new)), xi_new.copy(), rec_new)
                df = f_new - f
                denom = float(dxi @ dxi)
                if denom > 0.0:
                    jac += np.outer(df - jac @ dxi, dxi) / denom
                xi, f, rec = xi_new, f_new, rec_new
                if float(np.linalg.norm(f)) <= fp_tol:
                    converged = True
                    break
            if not converged:
                if best[0] <= loose_tol:
                    _, xi, rec = best
                else:
                    raise NoConvergence(
                        "displacement stayed at %.3e after %d returns"
                        % (best[0], max_iter))

    base_point = spec.point_at(xi)
    period = rec.return_time
    # independent certificate: one fresh run over the period, no probe
    orbit_traj = semiflow(system, base_point, period, tol=tol)
    closure = float(np.linalg.norm(orbit_traj.final_point - base_point))
    orbit = PeriodicOrbit(base_point=base_point, period=float(period),
                          closure_error=closure, orbit_trajectory=orbit_traj,
                          system=system, spec=spec)
    evidence = classify_orbit(orbit, tol=tol)
    orbit.kind = evidence["kind"]
    orbit.hyperbolic = evidence["hyperbolic"]
    orbit.eta_prime = evidence["etaPrime"]
    orbit.fold_census = evidence["foldCensus"]
    orbit.arc_kinds = evidence["arcKinds"]
    return orbit


_VISIBLE_CASES = ("A1", "A4", "B1")


def _census_label(census, label):
    if label == "A1":
        census["visibleFolds"] += 1
    elif label == "A2":
        census["invisibleFolds"] += 1
    elif label in ("A3", "A4"):
        census["cusps"] += 1
        if label == "A4":
            census["visibleFolds"] += 1   # odd-order visible launch point
    elif label in ("B1", "B2"):
        census["doubleContacts"] += 1
    else:
        census["otherContacts"] += 1


def classify_orbit(orbit: PeriodicOrbit, tol: Tolerances | None = None) -> dict:
    """Census of the orbit's surface incidences and the resulting kind.

    kind "smooth": the orbit never touches the switching surface;
    "polyI": only transversal crossings (hyperbolic when the return-map
    slope is bounded away from one); "polyII": the whole orbit slides on the
    surface; "polyIII": at least one sliding arc, visible contact, or graze.
    """
    system, traj = orbit.system, orbit.orbit_trajectory
    tol = tol or system.tol
    census = {
        "transversalCrossings": 0,
        "visibleFolds": 0,
        "invisibleFolds": 0,
        "cusps": 0,
        "doubleContacts": 0,
        "otherContacts": 0,
        "slidingArcs": 0,
        "edgeTouches": 0,
    }
    incidences = []

    def classify_at(point):
        try:
            info = classify_tangency(system, point, tol)
        except ValueError:
            return None
        return info

    for ev in traj.switches:
        if ev.kind == EventKind.TRANSVERSAL_HIT:
            census["transversalCrossings"] += 1
        elif ev.kind == EventKind.TANGENCY_HIT:
            label = ev.detail.get("caseLabel")
            _census_label(census, label)
            incidences.append({"time": ev.time, "caseLabel": label})
        elif ev.kind == EventKind.SLIDING_BOUNDARY_EXIT:
            info = classify_at(ev.point)
            label = info.case_label if info is not None else None
            _census_label(census, label)
            incidences.append({"time": ev.time, "caseLabel": label,
                               "edge": ev.detail.get("boundary")})
    for arc in traj.arcs:
        if arc.field_id == FieldId.SLIDING:
            census["slidingArcs"] += 1
        for g in arc.grazes:
            if "boundary" in g:
                census["edgeTouches"] += 1
                continue
            label = g.get("caseLabel")
            _census_label(census, label)
            incidences.append({"time": g["time"], "caseLabel": label,
                               "graze": True})

    all_sliding = bool(traj.arcs) and all(
        a.field_id == FieldId.SLIDING for a in traj.arcs)
    touched = (census["slidingArcs"] or incidences
               or census["transversalCrossings"])
    if all_sliding:
        kind = "polyII"
    elif census["slidingArcs"] or incidences:
        kind = "polyIII"
    elif census["transversalCrossings"]:
        kind = "polyI"
    else:
        kind = "smooth"

    # arc flavor: sliding arcs slide; an arc launched from a visible contact
    # is focal (clean flight to the landing) or graphic (one graze en route)
    arc_kinds = []
    for i, arc in enumerate(traj.arcs):
        if arc.field_id == FieldId.SLIDING:
            arc_kinds.append("sliding")
            continue
        launched = False
        if i > 0:
            prev_ev = traj.switches[i - 1] if i - 1 < len(traj.switches) else None
            if prev_ev is not None and prev_ev.kind in (
                    EventKind.TANGENCY_HIT, EventKind.SLIDING_BOUNDARY_EXIT):
                info = classify_at(arc.start_point)
                launched = info is not None and info.case_label in _VISIBLE_CASES
        if launched:
            interior = sum(1 for g in arc.grazes if "boundary" not in g)
            arc_kinds.append("focal" if interior == 0
                             else "graphic" if interior == 1 else "multiFold")
        else:
            arc_kinds.append("regular")

    eta = None
    hyperbolic = None
    if kind in ("smooth", "polyI") and orbit.spec is not None:
        xi_star = orbit.spec.chart(orbit.base_point)
        try:
            jac = return_map_derivative(system, orbit.spec, xi_star, tol=tol)
        except (NoReturn, LeftNeighborhood):
            jac = None
        if jac is not None:
            if np.isscalar(jac):
                eta = float(jac)
                hyperbolic = abs(eta - 1.0) > tol.hyperbolicity_margin
            else:
                moduli = np.abs(np.linalg.eigvals(jac))
                eta = float(moduli.max())
                hyperbolic = bool(np.all(np.abs(moduli - 1.0)
                                         > tol.hyperbolicity_margin))
    elif kind == "polyIII":
        # hyperbolic when the non-crossing incidences stay on one side of
        # the surface decomposition: sliding-only or escaping-only motion
        has_sliding = census["slidingArcs"] > 0 or census["visibleFolds"] > 0
        has_escaping = False   # the forward engine never rides escaping arcs
        hyperbolic = not (has_sliding and has_escaping)

    return {
        "kind": kind,
        "hyperbolic": hyperbolic,
        "etaPrime": eta,
        "foldCensus": census,
        "arcKinds": arc_kinds,
        "incidences": incidences,
        "touchedSurface": bool(touched),
    }


@dataclass
class SectionReport:
    """Result of the sampled section validity checks."""

    ok: bool
    issues: list
    min_transversality: float
    return_fraction: float
    samples: int

    def to_dict(self):
        return {
            "ok": self.ok,
            "issues": list(self.issues),
            "minTransversality": self.min_transversality,
            "returnFraction": self.return_fraction,
            "samples": self.samples,
        }


def _disk_points(spec, count):
    """Deterministic spread over the disk chart: grid for a segment, a
    sunflower spiral for a true disk."""
    m = spec.dimension - 1
    if m == 1:
        xs = np.linspace(-spec.radius, spec.radius, count)
        return [np.array([x]) for x in xs]
    golden = math.pi * (3.0 - math.sqrt(5.0))
    pts = []
    for i in range(count):
        r = spec.radius * math.sqrt((i + 0.5) / count)
        theta = i * golden
        vec = np.zeros(m)
        vec[0] = r * math.cos(theta)
        vec[1] = r * math.sin(theta)
        pts.append(vec)
    return pts


def validate_section(system: PiecewiseSystem, region: Box | None,
                     spec: SectionSpec, samples: int = 200,
                     t_cap: float = 100.0, disk_samples: int = 32,
                     rng_seed: int = 0,
                     tol: Tolerances | None = None) -> SectionReport:
    """Sampled checks that the disk is a working section for `region`.

    Three checks: the flow pierces the disk with speed bounded away from
    zero and does not re-cross within the uniqueness window (sampled on the
    disk, restricted to `region` when given); the disk actually meets the
    region; and every sampled start in the region reaches the section within
    `t_cap` (sampled recurrence).  The report lists violations; it never
    raises.
    """
    tol = tol or system.tol
    issues = []
    t_min = 10.0 * tol.event_tol

    disk = _disk_points(spec, disk_samples)
    on_disk = [spec.point_at(xi) for xi in disk]
    if region is not None:
        inside = [p for p in on_disk if region.contains(p, slack=1e-12)]
        if not inside:
            issues.append("section disk misses the region entirely")
        on_disk = inside or on_disk

    min_trans = math.inf
    tangent_pts = 0
    recross_pts = 0
    for p in on_disk:
        try:
            fid, _, _ = select_field(system, p, tol)
        except Exception as exc:        # escaping or unsupported contact
            issues.append("no forward field on the disk at %s (%s)"
                          % (tuple(round(float(v), 6) for v in p),
                             type(exc).__name__))
            continue
        vec = (eval_sliding(system, p, tol) if fid == FieldId.SLIDING
               else np.asarray(system.field(fid)(p), dtype=float))
        rate = abs(float(spec.normal @ vec))
        min_trans = min(min_trans, rate)
        if rate < 1e-6:
            tangent_pts += 1
            continue
        try:
            probe_traj = semiflow(system, p, spec.xi_window, tol=tol,
                                  section=spec.probe(t_min))
        except Exception:
            continue    # recurrence phase will report flow failures
        if probe_traj.status == "SectionHit":
            recross_pts += 1
    if tangent_pts:
        issues.append("flow is tangent to the disk at %d of %d sample points"
                      % (tangent_pts, len(on_disk)))
    if recross_pts:
        issues.append("section re-crossed within the uniqueness window at "
                      "%d of %d sample points" % (recross_pts, len(on_disk)))

    returned = 0
    tried = 0
    failures = []
    if region is not None and samples > 0:
        rng = np.random.default_rng(rng_seed)
        lo = np.asarray(region.lo, dtype=float)
        hi = np.asarray(region.hi, dtype=float)
        for _ in range(samples):
            seed = rng.uniform(lo, hi)
            tried += 1
            try:
                traj = semiflow(system, seed, t_cap, tol=tol,
                                section=spec.probe(t_min))
            except Exception as exc:
                failures.append((seed, type(exc).__name__))
                continue
            if traj.status == "SectionHit":
                returned += 1
            else:
                failures.append((seed, traj.status))
        if failures:
            shown = ", ".join("%s (%s)"
                              % (tuple(round(float(v), 4) for v in s), why)
                              for s, why in failures[:3])
            issues.append("%d of %d region samples never reached the section; "
                          "first: %s" % (len(failures), tried, shown))

    return SectionReport(
        ok=not issues,
        issues=issues,
        min_transversality=None if math.isinf(min_trans) else float(min_trans),
        return_fraction=(returned / tried) if tried else None,
        samples=tried,
    )
