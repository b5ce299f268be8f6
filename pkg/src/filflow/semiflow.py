"""Forward motion of the piecewise system: field selection and arc chaining.

`select_field` resolves which field carries the motion from a point (the
convention: interior and crossing points follow the field of the side being
entered, attracting surface points follow the sliding combination, supported
contact points launch with the visible tangent field or stay on the surface).
`semiflow` chains arcs into a Trajectory until the time budget, the domain
boundary, or an equilibrium stops it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (EscapingPoint, MaxSwitchesExceeded, StepUnderflow,
                     UnsupportedTangency)
from .integrate import (ArcSegment, EventKind, EventRecord, SectionProbe,
                        integrate_arc)
from .sliding import sliding_lie_sign
from .system import (FieldId, PiecewiseSystem, RegionLabel, Tolerances,
                     _one_field_order, classify_point)

PROGRESS_EPS = 1e-13
MAX_STALLED_ARCS = 32


def select_field(system: PiecewiseSystem, point, tol: Tolerances | None = None):
    """Field that carries the forward motion from `point`.

    Returns (field_id, region_label, tangency_info_or_None).  Raises
    EscapingPoint on the repelling part of the surface and
    UnsupportedTangency at contact points outside the supported case table.
    """
    tol = tol or system.tol
    label, info = classify_point(system, point, tol)
    if label in (RegionLabel.INTERIOR_PLUS, RegionLabel.CROSSING_PLUS):
        return FieldId.X, label, info
    if label in (RegionLabel.INTERIOR_MINUS, RegionLabel.CROSSING_MINUS):
        return FieldId.Y, label, info
    if label == RegionLabel.SLIDING:
        return FieldId.SLIDING, label, info
    if label == RegionLabel.ESCAPING:
        raise EscapingPoint(
            "no forward selection on the repelling surface at %s"
            % (tuple(float(v) for v in np.asarray(point)),))
    # tangency
    case = info.case_label if info is not None else "Unsupported"
    if case in ("A1", "A4"):
        # single visible contact: launch with the tangent field
        fid = FieldId.X if info.tangent_fields[0] == "X" else FieldId.Y
        return fid, label, info
    if case == "B1":
        fid = FieldId.X if info.visible_x else FieldId.Y
        return fid, label, info
    if case in ("A2", "A3", "B2"):
        return FieldId.SLIDING, label, info
    raise UnsupportedTangency(
        "contact point outside the supported case table at %s: %s"
        % (tuple(float(v) for v in np.asarray(point)),
           info.detail if info is not None else "no detail"))


@dataclass
class Trajectory:
    """Piecewise solution assembled from arcs of single fields."""

    system: PiecewiseSystem
    initial_point: np.ndarray
    requested_time: float
    arcs: list
    status: str   # NoExit | TimeBudget | EquilibriumReached | DomainExit | SectionHit
    switches: list = dc_field(default_factory=list)   # EventRecord per handoff

    @property
    def total_time(self):
        return self.arcs[-1].end_time if self.arcs else 0.0

    @property
    def final_point(self):
        return self.arcs[-1].end_point if self.arcs else self.initial_point

    @property
    def switch_count(self):
        return len(self.switches)

    @property
    def grazes(self):
        out = []
        for arc in self.arcs:
            for g in arc.grazes:
                rec = dict(g)
                rec["fieldId"] = arc.field_id.value
                out.append(rec)
        return out

    def evaluate(self, t):
        """State at time t in [0, total_time]; t=0 returns the exact start."""
        if t == 0.0:
            return self.initial_point.copy()
        if t < 0.0 or t > self.total_time * (1 + 1e-12) + 1e-12:
            raise ValueError("time %g outside the trajectory range [0, %g]"
                             % (t, self.total_time))
        lo, hi = 0, len(self.arcs) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.arcs[mid].end_time < t:
                lo = mid + 1
            else:
                hi = mid
        return self.arcs[lo].evaluate(t)

    def sample(self, times):
        return np.asarray([self.evaluate(t) for t in np.asarray(times, dtype=float)])

    def to_dict(self):
        return {
            "status": self.status,
            "requestedTime": float(self.requested_time),
            "totalTime": float(self.total_time),
            "initialPoint": [float(v) for v in self.initial_point],
            "finalPoint": [float(v) for v in self.final_point],
            "switchCount": self.switch_count,
            "switches": [ev.to_dict() for ev in self.switches],
            "grazes": self.grazes,
            "arcs": [
                {
                    "fieldId": arc.field_id.value,
                    "startTime": float(arc.start_time),
                    "endTime": float(arc.end_time),
                    "startPoint": [float(v) for v in arc.start_point],
                    "endPoint": [float(v) for v in arc.end_point],
                    "event": arc.terminal_event.to_dict(),
                    "equilibrium": arc.equilibrium,
                }
                for arc in self.arcs
            ],
        }

    def write_csv(self, path):
        """Sample rows `t,x1..xn,fieldId,segmentIndex`; handoff times appear
        twice, once with each adjacent arc."""
        n = len(self.initial_point)
        header = "t," + ",".join("x%d" % (i + 1) for i in range(n)) \
                 + ",fieldId,segmentIndex\n"
        with open(path, "w") as fh:
            fh.write(header)
            for k, arc in enumerate(self.arcs):
                fid = arc.field_id.value
                for t, row in zip(arc.times, arc.points):
                    fh.write("%.17g,%s,%s,%d\n"
                             % (t, ",".join("%.17g" % v for v in row), fid, k))


def semiflow(system: PiecewiseSystem, p0, t_total, tol: Tolerances | None = None,
             section: SectionProbe | None = None) -> Trajectory:
    """Run the piecewise motion from `p0` for `t_total` time units.

    With a `section` probe the run stops early at the first admissible
    crossing of the probe plane (status "SectionHit").
    """
    tol = tol or system.tol
    p = np.asarray(p0, dtype=float)
    if not system.domain.contains(p, slack=1e-9):
        raise ValueError("initial point %s lies outside the domain box"
                         % (tuple(float(v) for v in p),))
    arcs = []
    switches = []
    elapsed = 0.0
    stalled = 0
    initial = p.copy()
    while True:
        fid, _, _ = select_field(system, p, tol)
        arc = integrate_arc(system, fid, p, t_total - elapsed,
                            t_offset=elapsed, tol=tol, section=section)
        arcs.append(arc)
        ev = arc.terminal_event
        if ev.kind == EventKind.NO_EXIT:
            if arc.equilibrium:
                status = "EquilibriumReached"
            elif not switches:
                status = "NoExit"
            else:
                status = "TimeBudget"
            break
        if ev.kind == EventKind.DOMAIN_EXIT:
            status = "DomainExit"
            break
        if ev.kind == EventKind.SECTION_HIT:
            status = "SectionHit"
            break
        switches.append(ev)
        if len(switches) > tol.max_switches:
            raise MaxSwitchesExceeded(
                "more than %d field handoffs before the time budget"
                % tol.max_switches)
        if arc.duration < PROGRESS_EPS:
            stalled += 1
            if stalled >= MAX_STALLED_ARCS:
                raise StepUnderflow(
                    "no forward progress across %d consecutive handoffs near %s"
                    % (stalled, tuple(float(v) for v in ev.point)))
        else:
            stalled = 0
        p = ev.point
        elapsed = ev.time
        if t_total - elapsed <= 1e-15:
            status = "TimeBudget"
            break
    return Trajectory(system=system, initial_point=initial,
                      requested_time=float(t_total), arcs=arcs,
                      status=status, switches=switches)


def flow_map(system: PiecewiseSystem, p0, t, tol: Tolerances | None = None):
    """(end point, status, trajectory) after time t."""
    traj = semiflow(system, p0, t, tol)
    return traj.final_point, traj.status, traj


# ---------------------------------------------------------------------------
# time to leave the closed region of a single field


@dataclass
class ExitTimeResult:
    time: float                  # 0.0, finite, or +inf
    kind: str                    # ImmediateExit | TransversalExit | TangencyExit |
    #                              SlidingBoundaryExit | DomainExit | Equilibrium | CapLimited
    field_id: FieldId
    point: np.ndarray | None
    grazes: list = dc_field(default_factory=list)
    cap: float | None = None

    @property
    def infinite(self):
        return math.isinf(self.time)

    def to_dict(self):
        return {
            "exitTime": None if self.infinite else float(self.time),
            "infinite": self.infinite,
            "kind": self.kind,
            "fieldId": self.field_id.value,
            "point": None if self.point is None else [float(v) for v in self.point],
            "grazes": list(self.grazes),
            "cap": self.cap,
        }


def _immediate_single_field_exit(system, p, which, tol):
    """True if the orbit of the named field leaves its closed half-region at
    once when started on the surface."""
    rate = system.xh(p) if which == "X" else system.yh(p)
    outward = -1.0 if which == "X" else 1.0
    if rate * outward > tol.eps_tan:
        return True
    if abs(rate) <= tol.eps_tan:
        order, visible = _one_field_order(system, p, which, tol)
        if order is None:
            raise UnsupportedTangency(
                "degenerate contact at the start point %s"
                % (tuple(float(v) for v in p),))
        return not visible
    return False


def _immediate_sliding_exit(system, p, tol):
    a, b = system.xh(p), system.yh(p)
    if a > tol.eps_tan or b < -tol.eps_tan:
        raise ValueError("start point is not in the closed sliding set")
    for g, out_sign in ((system.xh, 1.0), (system.yh, -1.0)):
        gv = g(p)
        if abs(gv) > tol.eps_tan:
            continue   # not on this edge
        _, sgn = sliding_lie_sign(system, g, p, order=1)
        if sgn * out_sign > 0:
            return True
        if sgn == 0:
            _, sgn2 = sliding_lie_sign(system, g, p, order=2)
            if sgn2 * out_sign >= 0:
                return True
    return False


def exit_time(system: PiecewiseSystem, p0, field_id: FieldId | None = None,
              t_cap: float = 100.0, tol: Tolerances | None = None) -> ExitTimeResult:
    """Time for the orbit of one field to leave that field's closed region.

    The region is the closed upper/lower side of the surface for X/Y and the
    closure of the sliding set for the combined field.  Grazing contacts of
    the region boundary (visible folds, quadratic edge touches) do not count
    as leaving; invisible contact and transversal crossings do.  The result
    is 0 when the start point departs at once, +inf when the orbit never
    leaves within `t_cap` time units.
    """
    tol = tol or system.tol
    p = np.asarray(p0, dtype=float)
    if field_id is None:
        field_id, _, _ = select_field(system, p, tol)

    h0 = system.h(p)
    if field_id in (FieldId.X, FieldId.Y):
        which = "X" if field_id == FieldId.X else "Y"
        own_sign = 1.0 if field_id == FieldId.X else -1.0
        if h0 * own_sign < -tol.eps_sigma:
            raise ValueError("start point is outside the closed region of %s"
                             % field_id.value)
        if abs(h0) <= tol.eps_sigma and _immediate_single_field_exit(
                system, p, which, tol):
            return ExitTimeResult(0.0, "ImmediateExit", field_id, p.copy(),
                                  cap=t_cap)
    else:
        if _immediate_sliding_exit(system, p, tol):
            return ExitTimeResult(0.0, "ImmediateExit", field_id, p.copy(),
                                  cap=t_cap)

    arc = integrate_arc(system, field_id, p, t_cap, t_offset=0.0, tol=tol)
    ev = arc.terminal_event
    if ev.kind == EventKind.TRANSVERSAL_HIT:
        kind = "TransversalExit"
    elif ev.kind == EventKind.TANGENCY_HIT:
        kind = "TangencyExit"
    elif ev.kind == EventKind.SLIDING_BOUNDARY_EXIT:
        kind = "SlidingBoundaryExit"
    elif ev.kind == EventKind.DOMAIN_EXIT:
        kind = "DomainExit"
    else:
        kind = "Equilibrium" if ev.detail.get("reason") == "equilibrium" \
            else "CapLimited"
        return ExitTimeResult(math.inf, kind, field_id, arc.end_point.copy(),
                              grazes=list(arc.grazes), cap=t_cap)
    return ExitTimeResult(float(ev.time), kind, field_id,
                          None if ev.point is None else ev.point.copy(),
                          grazes=list(arc.grazes), cap=t_cap)
