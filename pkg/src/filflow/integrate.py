"""Single-arc integration with event detection.

One arc = the motion of a single field (upper X, lower Y, or the sliding
combination) until it hits something: the switching surface (transversally or
tangentially), the boundary of the sliding set, the domain box, or the time
budget.  The stepper is an embedded Runge-Kutta 5(4) pair (scipy's RK45)
driven manually so we control:

* event location by sign-change bracketing over a dense sample of each
  accepted step, polished with brentq on the dense output;
* graze handling: an even-order contact of the watched surface (the value
  dips to ~0 without a genuine sign change) is located through the extremum
  of the value along the step; a visible-fold contact does not terminate the
  arc, while invisible or degenerate contact does;
* post-step orthogonal projection back onto the surface for sliding arcs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from .errors import DenominatorVanishes, NonFiniteState, StepUnderflow
from .polynomial import PolyBundle, Polynomial
from .sliding import sliding_field
from .system import FieldId, PiecewiseSystem, Tolerances, classify_tangency

SAMPLES_PER_STEP = 10
ARM_FACTOR = 100.0           # arming threshold = factor * eps_sigma
EXTREMUM_SCAN_BAND = 1e-3    # polish extrema only when samples come this close to zero
EQUILIBRIUM_NORM = 1e-11


class EventKind(str, enum.Enum):
    TRANSVERSAL_HIT = "TransversalHit"
    TANGENCY_HIT = "TangencyHit"
    SLIDING_BOUNDARY_EXIT = "SlidingBoundaryExit"
    DOMAIN_EXIT = "DomainExit"
    SECTION_HIT = "SectionHit"
    NO_EXIT = "NoExit"

    def __str__(self):
        return self.value


@dataclass
class SectionProbe:
    """Extra terminal watch: stop at an admissible crossing of a plane disk.

    A crossing is admissible when it happens after `t_min` (absolute
    trajectory time), lands within `radius` of `anchor`, and the flow pierces
    the plane faster than `rate_floor` in the direction given by `sense`
    (+1 along the normal, -1 against it, 0 for either).  Inadmissible
    crossings are ignored and the arc continues.
    """

    anchor: np.ndarray
    normal: np.ndarray          # unit length
    radius: float
    sense: int = 0
    t_min: float = 0.0
    rate_floor: float = 1e-9

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float)
        self.normal = np.asarray(self.normal, dtype=float)


@dataclass
class EventRecord:
    kind: EventKind
    time: float                 # absolute trajectory time; +inf for NO_EXIT
    point: np.ndarray | None
    field_id: FieldId
    detail: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "time": None if math.isinf(self.time) else self.time,
            "location": None if self.point is None else [float(v) for v in self.point],
            "caseLabel": self.detail.get("caseLabel"),
            "fieldId": self.field_id.value,
            "detail": dict(self.detail),
        }


@dataclass
class ArcSegment:
    field_id: FieldId
    start_time: float
    end_time: float
    start_point: np.ndarray
    end_point: np.ndarray
    times: np.ndarray            # absolute sample times, both ends included
    points: np.ndarray           # (k, n) sample states
    terminal_event: EventRecord
    grazes: list = dc_field(default_factory=list)
    equilibrium: bool = False
    dense: list = dc_field(default_factory=list)  # [(t_lo, t_hi, DenseOutput)] local time

    @property
    def duration(self):
        return self.end_time - self.start_time

    def evaluate(self, t_abs):
        """State at an absolute time inside [start_time, end_time]."""
        t = t_abs - self.start_time
        if t <= 0.0:
            return self.start_point.copy()
        if t >= self.duration:
            return self.end_point.copy()
        if self.equilibrium or not self.dense:
            return self.start_point.copy()
        lo, hi = 0, len(self.dense) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.dense[mid][1] < t:
                lo = mid + 1
            else:
                hi = mid
        return np.asarray(self.dense[lo][2](t), dtype=float)


class _Monitor:
    """One scalar watch function along an arc.

    role: "surface" (h along an X/Y arc), "boundary" (one edge of the sliding
    set along a sliding arc), "box" (distance to the domain faces), "section"
    (signed distance to a probe plane).  `side` is the sign the value keeps
    while the arc stays in its region; 0 means no preferred sign.
    """

    def __init__(self, name, role, index, side, can_graze, detail=None):
        self.name = name
        self.role = role
        self.index = index          # column in the joint value table; -1 = box
        self.side = side
        self.can_graze = can_graze
        self.detail = detail or {}
        self.armed = False
        self.last_t = 0.0
        self.last_v = 0.0
        self.last_dv = None


def _box_values(points, lo, hi):
    pts = np.atleast_2d(points)
    d = np.minimum(pts - lo[None, :], hi[None, :] - pts)
    return d.min(axis=1)


class _ArcProblem:
    """Field-specific plumbing for one arc: rhs, monitors, projection."""

    def __init__(self, system: PiecewiseSystem, field_id: FieldId,
                 tol: Tolerances, section: SectionProbe | None = None):
        self.system = system
        self.field_id = field_id
        self.tol = tol
        self.section = section
        self.lo = np.asarray(system.domain.lo, dtype=float)
        self.hi = np.asarray(system.domain.hi, dtype=float)
        self.project_each_step = field_id == FieldId.SLIDING
        if field_id == FieldId.X:
            fld = system.x_field
            self.rhs = lambda t, y: fld(y)
            self.value_bundle = PolyBundle([system.h, system.xh])
            self.monitors = [_Monitor("surface", "surface", 0, +1, True)]
            self.deriv_index = {0: 1}   # d/dt of h along X is xh
        elif field_id == FieldId.Y:
            fld = system.y_field
            self.rhs = lambda t, y: fld(y)
            self.value_bundle = PolyBundle([system.h, system.yh])
            self.monitors = [_Monitor("surface", "surface", 0, -1, True)]
            self.deriv_index = {0: 1}
        elif field_id == FieldId.SLIDING:
            rf = sliding_field(system)
            nums = PolyBundle(list(rf.numerators) + [rf.denominator])
            floor = tol.denominator_floor
            n = system.nvars

            def rhs(t, y, _nums=nums, _n=n, _floor=floor):
                vals = _nums(y)
                den = vals[_n]
                if abs(den) < _floor:
                    raise DenominatorVanishes(
                        "sliding denominator %.3e below floor %.0e" % (den, _floor))
                return vals[:_n] / den

            self.rhs = rhs
            # time derivative of each edge function along the sliding motion,
            # numerator only (the denominator is positive on the sliding set)
            dxh = Polynomial.zero(system.nvars)
            dyh = Polynomial.zero(system.nvars)
            for num, gx, gy in zip(rf.numerators, system.xh.gradient(),
                                   system.yh.gradient()):
                dxh = dxh + num * gx
                dyh = dyh + num * gy
            self.value_bundle = PolyBundle([system.xh, system.yh, dxh, dyh])
            self.monitors = [
                _Monitor("edgeX", "boundary", 0, -1, True, {"boundary": "X"}),
                _Monitor("edgeY", "boundary", 1, +1, True, {"boundary": "Y"}),
            ]
            self.deriv_index = {0: 2, 1: 3}
        else:
            raise ValueError("unknown field id %r" % (field_id,))
        self.monitors.append(_Monitor("box", "box", -1, +1, False))
        if section is not None:
            # side 0: no preferred sign, any armed sign change is a candidate
            self.monitors.append(_Monitor("section", "section", -2, 0, False))

    def section_values(self, points):
        return (np.atleast_2d(points) - self.section.anchor[None, :]) \
            @ self.section.normal

    def tables_at(self, points):
        tab = self.value_bundle(np.atleast_2d(points))
        box = _box_values(points, self.lo, self.hi)
        sec = None if self.section is None else self.section_values(points)
        return tab, box, sec

    def monitor_values(self, tab, box, sec, mon):
        if mon.role == "box":
            return box
        if mon.role == "section":
            return sec
        return tab[:, mon.index]

    def monitor_derivs(self, tab, mon):
        if mon.role in ("box", "section"):
            return None
        return tab[:, self.deriv_index[mon.index]]

    def scalar(self, mon, point):
        if mon.role == "box":
            return float(_box_values(point[None, :], self.lo, self.hi)[0])
        if mon.role == "section":
            return float(self.section_values(point[None, :])[0])
        return float(self.value_bundle(point)[mon.index])

    def deriv_scalar(self, mon, point):
        return float(self.value_bundle(point)[self.deriv_index[mon.index]])

    def project_surface(self, point, iterations=3):
        p = np.asarray(point, dtype=float).copy()
        for _ in range(iterations):
            v = self.system.h(p)
            if abs(v) < 1e-16:
                break
            g = self.system.grad_h_at(p)
            p = p - v * g / (g @ g)
        return p


def _graze_action(system, point, own_field, tol):
    """Decide whether a tangential surface contact ends the arc.

    ("continue", info) for a visible even-order contact the arc just touches,
    ("terminate", info) for contacts that hand the point back to the field
    selector (invisible or degenerate contact, double tangency).
    """
    try:
        info = classify_tangency(system, point, tol)
    except ValueError:
        return "continue", None
    own = own_field.value
    if own not in info.tangent_fields:
        return "continue", info   # near miss: the field is not actually tangent
    if len(info.tangent_fields) == 2:
        return "terminate", info
    order = info.order_x if own == "X" else info.order_y
    visible = info.visible_x if own == "X" else info.visible_y
    if order == 2 and visible:
        return "continue", info
    return "terminate", info


def integrate_arc(system: PiecewiseSystem, field_id: FieldId, p0, t_budget,
                  t_offset=0.0, tol: Tolerances | None = None,
                  section: SectionProbe | None = None) -> ArcSegment:
    """Integrate one arc of `field_id` from `p0` for at most `t_budget`.

    The terminal event explains why the arc stopped; NO_EXIT (with +inf
    sentinel time) means the budget ran out without any event.  Grazes of the
    watched surfaces are recorded on the segment but do not stop it.  With a
    `section` probe, an admissible crossing of the probe plane ends the arc
    with SECTION_HIT.
    """
    tol = tol or system.tol
    p0 = np.asarray(p0, dtype=float)
    prob = _ArcProblem(system, field_id, tol, section)
    arm_eps = ARM_FACTOR * tol.eps_sigma
    graze_band = max(tol.eps_sigma, 10.0 * tol.rk_atol)
    trans_floor = max(1e3 * tol.eps_tan, 1e-6)
    scale = system.domain.scale()

    def make_arc(end_t_local, end_point, event, times, points, grazes,
                 dense, equilibrium=False):
        return ArcSegment(
            field_id=field_id,
            start_time=t_offset,
            end_time=t_offset + end_t_local,
            start_point=p0.copy(),
            end_point=np.asarray(end_point, dtype=float),
            times=np.asarray(times, dtype=float),
            points=np.asarray(points, dtype=float),
            terminal_event=event,
            grazes=grazes,
            equilibrium=equilibrium,
            dense=dense,
        )

    if t_budget <= 1e-15:
        ev = EventRecord(EventKind.NO_EXIT, math.inf, p0.copy(), field_id,
                         {"reason": "zero budget"})
        return make_arc(max(t_budget, 0.0), p0, ev, [t_offset], [p0], [], [])

    f0 = np.asarray(prob.rhs(0.0, p0), dtype=float)
    eq_tol = EQUILIBRIUM_NORM * (1.0 + float(np.linalg.norm(p0)))
    if np.linalg.norm(f0) < eq_tol:
        ev = EventRecord(EventKind.NO_EXIT, math.inf, p0.copy(), field_id,
                         {"reason": "equilibrium"})
        return make_arc(t_budget, p0, ev,
                        [t_offset, t_offset + t_budget], [p0, p0], [], [],
                        equilibrium=True)

    solver = RK45(prob.rhs, 0.0, p0, t_bound=t_budget,
                  rtol=tol.rk_rtol, atol=tol.rk_atol,
                  max_step=0.2 * (1.0 + scale))

    times = [t_offset]
    points = [p0.copy()]
    grazes = []
    dense_segs = []

    def arm_state(v, mon):
        return abs(v) > arm_eps and (mon.side == 0 or np.sign(v) == mon.side)

    tab0, box0, sec0 = prob.tables_at(p0[None, :])
    for mon in prob.monitors:
        v0 = float(prob.monitor_values(tab0, box0, sec0, mon)[0])
        dv0 = prob.monitor_derivs(tab0, mon)
        mon.last_t, mon.last_v = 0.0, v0
        mon.last_dv = None if dv0 is None else float(dv0[0])
        mon.armed = arm_state(v0, mon)

    def roll_monitors(t_at, q_at):
        tab_i, box_i, sec_i = prob.tables_at(q_at[None, :])
        for mon in prob.monitors:
            v = float(prob.monitor_values(tab_i, box_i, sec_i, mon)[0])
            dv = prob.monitor_derivs(tab_i, mon)
            mon.last_t, mon.last_v = t_at, v
            mon.last_dv = None if dv is None else float(dv[0])
            mon.armed = arm_state(v, mon)

    def scan_window(t_lo, t_hi, dense):
        """Earliest incident in (t_lo, t_hi] or None.

        Returns (what, mon, t, point, genuine) with what in {"cross",
        "graze"}.  `genuine` marks a sign change whose wrong-side magnitude
        exceeds the noise band (a real crossing rather than a grazing dip).
        With no incident, monitor walk states advance to t_hi; with one, all
        states are rolled to the incident time.
        """
        k = max(4, SAMPLES_PER_STEP)
        tt = np.linspace(t_lo, t_hi, k + 1)[1:]
        yy = np.asarray(dense(tt), dtype=float).T
        tab, box, sec = prob.tables_at(yy)
        incidents = []
        finals = {}
        for mon in prob.monitors:
            vv = prob.monitor_values(tab, box, sec, mon)
            dvv = prob.monitor_derivs(tab, mon)
            pt_t, pt_v, pt_dv = mon.last_t, mon.last_v, mon.last_dv
            armed = mon.armed
            hit = None
            for j in range(len(tt)):
                t_j, v_j = float(tt[j]), float(vv[j])
                dv_j = None if dvv is None else float(dvv[j])
                if not armed:
                    if abs(v_j) > arm_eps:
                        if mon.side == 0 or np.sign(v_j) == mon.side:
                            armed = True
                        else:
                            hit = ("cross", pt_t, t_j, True)
                            break
                elif pt_v * v_j <= 0.0 and (pt_v != 0.0 or v_j != 0.0):
                    wrong = v_j if np.sign(v_j) != mon.side else pt_v
                    hit = ("cross", pt_t, t_j, abs(wrong) > graze_band)
                    break
                elif (mon.can_graze and dv_j is not None and pt_dv is not None
                      and min(abs(pt_v), abs(v_j)) < EXTREMUM_SCAN_BAND * (1 + scale)
                      and np.sign(pt_dv) == -mon.side and np.sign(dv_j) == mon.side):
                    # the value headed toward zero and turned around: locate
                    # the extremum and see how close it came
                    t_x = _polish_root(
                        lambda t: prob.deriv_scalar(mon, np.asarray(dense(t))),
                        pt_t, t_j, tol.event_tol)
                    v_x = prob.scalar(mon, np.asarray(dense(t_x)))
                    if abs(v_x) <= graze_band:
                        hit = ("graze", t_x, t_x, False)
                        break
                    if v_x * mon.side <= 0.0:
                        hit = ("cross", pt_t, t_x, True)
                        break
                    # harmless dip, keep walking
                pt_t, pt_v, pt_dv = t_j, v_j, dv_j
            finals[mon.name] = (armed, pt_t, pt_v, pt_dv)
            if hit is not None:
                incidents.append((mon, hit))

        if not incidents:
            for mon in prob.monitors:
                mon.armed, mon.last_t, mon.last_v, mon.last_dv = finals[mon.name]
            return None

        resolved = []
        for mon, (what, a, b, genuine) in incidents:
            if what == "cross":
                t_r = _polish_root(
                    lambda t: prob.scalar(mon, np.asarray(dense(t))),
                    a, b, tol.event_tol)
                resolved.append((t_r, "cross", mon, genuine))
            else:
                resolved.append((a, "graze", mon, False))
        resolved.sort(key=lambda item: item[0])
        t_inc, what, mon_inc, genuine = resolved[0]
        q_inc = np.asarray(dense(t_inc), dtype=float)
        roll_monitors(t_inc, q_inc)
        return what, mon_inc, t_inc, q_inc, genuine

    def finish_event(mon, t_ev, q_ev, genuine):
        """Terminal EventRecord for an incident, or None for a graze."""
        if mon.role == "section":
            probe = prob.section
            t_abs = t_offset + t_ev
            if t_abs <= probe.t_min:
                return None
            if np.linalg.norm(q_ev - probe.anchor) > probe.radius + 1e-12:
                return None
            rate = float(probe.normal
                         @ np.asarray(prob.rhs(t_ev, q_ev), dtype=float))
            if abs(rate) <= probe.rate_floor:
                return None
            if probe.sense != 0 and (rate > 0.0) != (probe.sense > 0):
                return None
            return EventRecord(EventKind.SECTION_HIT, t_abs,
                               np.asarray(q_ev, dtype=float).copy(),
                               field_id, {"rate": rate})
        if mon.role == "box":
            q = np.asarray(system.domain.clip(q_ev), dtype=float)
            face = int(np.argmin(np.minimum(q - prob.lo, prob.hi - q)))
            return EventRecord(EventKind.DOMAIN_EXIT, t_offset + t_ev, q,
                               field_id, {"face": face})
        q = prob.project_surface(q_ev) if mon.role == "surface" else q_ev
        if mon.role == "boundary":
            if not genuine:
                return None   # quadratic touch of the sliding-set edge
            return EventRecord(EventKind.SLIDING_BOUNDARY_EXIT,
                               t_offset + t_ev, q, field_id, dict(mon.detail))
        own_rate = system.xh(q) if field_id == FieldId.X else system.yh(q)
        if abs(own_rate) > trans_floor:
            return EventRecord(EventKind.TRANSVERSAL_HIT, t_offset + t_ev, q,
                               field_id, {"rate": float(own_rate)})
        action, info = _graze_action(system, q, field_id, tol)
        if action == "terminate":
            return EventRecord(EventKind.TANGENCY_HIT, t_offset + t_ev, q,
                               field_id,
                               {"caseLabel": info.case_label if info else None})
        if genuine:
            # the sign really changed; a shallow transversal crossing close
            # to (but not at) a contact point
            return EventRecord(EventKind.TRANSVERSAL_HIT, t_offset + t_ev, q,
                               field_id, {"rate": float(own_rate),
                                          "shallow": True})
        return None

    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            y = solver.y
            if np.linalg.norm(np.asarray(prob.rhs(solver.t, y), dtype=float)) < 1e3 * eq_tol:
                ev = EventRecord(EventKind.NO_EXIT, math.inf, y.copy(), field_id,
                                 {"reason": "equilibrium"})
                times.append(t_offset + solver.t)
                points.append(y.copy())
                return make_arc(t_budget, y, ev, times, points, grazes,
                                dense_segs, equilibrium=True)
            raise StepUnderflow(message or "integrator failed to advance")
        if not np.all(np.isfinite(solver.y)):
            raise NonFiniteState("non-finite state at t=%g" % solver.t)
        dense = solver.dense_output()
        t_lo, t_hi = dense.t_min, dense.t_max
        dense_segs.append((t_lo, t_hi, dense))

        cursor = t_lo
        terminal = None
        while True:
            inc = scan_window(cursor, t_hi, dense)
            if inc is None:
                break
            what, mon, t_inc, q_inc, genuine = inc
            if what == "graze":
                q = prob.project_surface(q_inc)
                if mon.role == "surface":
                    action, info = _graze_action(system, q, field_id, tol)
                    if action == "terminate":
                        terminal = EventRecord(
                            EventKind.TANGENCY_HIT, t_offset + t_inc, q,
                            field_id,
                            {"caseLabel": info.case_label if info else None})
                        break
                    grazes.append({"time": t_offset + t_inc,
                                   "point": [float(v) for v in q],
                                   "caseLabel": info.case_label if info else None})
                else:
                    grazes.append({"time": t_offset + t_inc,
                                   "point": [float(v) for v in q],
                                   "caseLabel": None,
                                   "boundary": mon.detail.get("boundary")})
            else:
                ev = finish_event(mon, t_inc, q_inc, genuine)
                if ev is not None:
                    terminal = ev
                    break
                if mon.role == "section":
                    # inadmissible plane crossing: pass through silently
                    mon.armed = False
                else:
                    # classified as a touch despite the sign flicker
                    q = prob.project_surface(q_inc)
                    _, info = _graze_action(system, q, field_id, tol)
                    grazes.append({"time": t_offset + t_inc,
                                   "point": [float(v) for v in q],
                                   "caseLabel": info.case_label if info else None})
                    mon.armed = False
            cursor = t_inc + max(tol.event_tol, 1e-12 * (t_hi - t_lo))
            if cursor >= t_hi:
                break

        if terminal is not None:
            t_ev_local = terminal.time - t_offset
            frac = (t_ev_local - t_lo) / max(t_hi - t_lo, 1e-300)
            k = max(2, int(round(SAMPLES_PER_STEP * frac)))
            for t_s in np.linspace(t_lo, t_ev_local, k, endpoint=False)[1:]:
                times.append(t_offset + t_s)
                points.append(np.asarray(dense(t_s), dtype=float))
            times.append(terminal.time)
            points.append(terminal.point.copy())
            return make_arc(t_ev_local, terminal.point, terminal,
                            times, points, grazes, dense_segs)

        for t_s in np.linspace(t_lo, t_hi, 5)[1:]:
            times.append(t_offset + t_s)
            points.append(np.asarray(dense(t_s), dtype=float))
        if prob.project_each_step:
            projected = prob.project_surface(solver.y)
            if not np.array_equal(projected, solver.y):
                solver.y = projected
                solver.f = solver.fun(solver.t, projected)
            points[-1] = projected.copy()

    end_point = solver.y.copy()
    ev = EventRecord(EventKind.NO_EXIT, math.inf, end_point, field_id,
                     {"reason": "budget"})
    if times[-1] < t_offset + t_budget:
        times.append(t_offset + t_budget)
        points.append(end_point.copy())
    return make_arc(t_budget, end_point, ev, times, points, grazes, dense_segs)


def _polish_root(f, a, b, xtol):
    """brentq with defensive bracketing; falls back to the right end."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        tt = np.linspace(a, b, 33)
        vals = [f(t) for t in tt]
        for x0, x1, v0, v1 in zip(tt[:-1], tt[1:], vals[:-1], vals[1:]):
            if v0 * v1 <= 0.0:
                a, b, fa, fb = x0, x1, v0, v1
                break
        else:
            return b
    return float(brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps,
                        maxiter=200))
