"""Piecewise-smooth systems: two polynomial fields glued along a switching
surface, plus point/tangency classification.

The state space is a compact axis-aligned box.  The switching surface is the
zero set of a polynomial h whose gradient must not vanish there; the field X
governs {h > 0} and Y governs {h < 0}.  On the surface itself a point is a
crossing, sliding, escaping or tangency point depending on the signs of the
directional derivatives of h along X and Y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationFailure
from .polynomial import Polynomial


class FieldId(str, enum.Enum):
    X = "X"           # active on the upper region {h > 0}
    Y = "Y"           # active on the lower region {h < 0}
    SLIDING = "Zs"    # convex-combination field on the sliding set

    def __str__(self):
        return self.value


class RegionLabel(str, enum.Enum):
    INTERIOR_PLUS = "InteriorPlus"
    INTERIOR_MINUS = "InteriorMinus"
    CROSSING_PLUS = "CrossingPlus"    # both fields push upward through h=0
    CROSSING_MINUS = "CrossingMinus"  # both push downward
    SLIDING = "Sliding"               # X down, Y up: surface attracts
    ESCAPING = "Escaping"             # X up, Y down: surface repels
    TANGENCY = "Tangency"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds used throughout the package (all overridable)."""

    eps_sigma: float = 1e-9        # |h| below this counts as on-surface
    eps_tan: float = 1e-9         # |Xh| below this counts as tangent
    eps_reg: float = 1e-6         # minimum |grad h| on the surface
    eps_pe: float = 1e-8          # pseudo-equilibrium residual acceptance
    eps_glue: float = 1e-7        # arc endpoint gluing mismatch cap
    rk_rtol: float = 1e-9         # integrator relative tolerance
    rk_atol: float = 1e-12        # integrator absolute tolerance
    event_tol: float = 1e-10      # event-time root polish accuracy
    denominator_floor: float = 1e-12
    cusp_rank_floor: float = 1e-8  # singular-value floor for cusp independence
    curve_angle_tol: float = 1e-4  # fold-curve tangency heuristic
    hyperbolicity_margin: float = 1e-4
    closure_tol: float = 1e-6
    max_switches: int = 10**4

    def with_overrides(self, **kw):
        return replace(self, **kw)


class SmoothField:
    """A polynomial vector field on R^n, n = 2 or 3."""

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise ValueError("empty component list")
        n = comps[0].nvars
        if len(comps) != n:
            raise ValueError("field needs exactly nvars components")
        if any(c.nvars != n for c in comps):
            raise ValueError("component variable counts differ")
        self.components = comps
        self.nvars = n
        self._bundle = None

    def __call__(self, point):
        if self._bundle is None:
            from .polynomial import PolyBundle
            self._bundle = PolyBundle(self.components)
        return self._bundle(point)

    def jacobian(self):
        return [[c.diff(j) for j in range(self.nvars)] for c in self.components]

    def __repr__(self):
        return "SmoothField(%s)" % (", ".join(repr(c) for c in self.components),)


def lie_derivative(f: SmoothField, g: Polynomial) -> Polynomial:
    """Directional derivative of g along f, computed exactly."""
    if f.nvars != g.nvars:
        raise ValueError("variable count mismatch")
    out = Polynomial.zero(g.nvars)
    for i, comp in enumerate(f.components):
        out = out + comp * g.diff(i)
    return out


def lie_derivative_k(f: SmoothField, g: Polynomial, k: int) -> Polynomial:
    """k-fold iterated derivative of g along f; degree grows fast, so k <= 4."""
    if not 1 <= k <= 4:
        raise ValueError("iterated derivative order must be in 1..4")
    out = g
    for _ in range(k):
        out = lie_derivative(f, out)
    return out


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box corner dimension mismatch")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent on every axis")

    @property
    def nvars(self):
        return len(self.lo)

    def contains(self, point, slack=0.0):
        return all(a - slack <= x <= b + slack
                   for x, a, b in zip(point, self.lo, self.hi))

    def clip(self, point):
        return np.minimum(np.maximum(point, self.lo), self.hi)

    def scale(self):
        return max(b - a for a, b in zip(self.lo, self.hi))


@dataclass
class TangencyInfo:
    """Result of classifying a point where at least one field is tangent."""

    point: tuple
    tangent_fields: tuple           # subset of ("X", "Y")
    order_x: int | None = None      # 2 = fold, 3 = cusp, None = not tangent/degenerate
    order_y: int | None = None
    visible_x: bool | None = None
    visible_y: bool | None = None
    case_label: str = "Unsupported"  # A1..A4, B1, B2, or Unsupported
    heuristic: bool = False          # True when a sampled curve test decided it
    detail: str = ""

    def to_dict(self):
        return {
            "point": list(self.point),
            "tangentFields": list(self.tangent_fields),
            "orderX": self.order_x,
            "orderY": self.order_y,
            "visibleX": self.visible_x,
            "visibleY": self.visible_y,
            "caseLabel": self.case_label,
            "heuristic": self.heuristic,
            "detail": self.detail,
        }


class PiecewiseSystem:
    """Two smooth fields, a switching polynomial and a compact domain box."""

    def __init__(self, x_field: SmoothField, y_field: SmoothField,
                 h: Polynomial, domain: Box, tol: Tolerances | None = None,
                 name: str = ""):
        n = h.nvars
        if x_field.nvars != n or y_field.nvars != n or domain.nvars != n:
            raise ValueError("dimension mismatch between fields, h and domain")
        self.x_field = x_field
        self.y_field = y_field
        self.h = h
        self.domain = domain
        self.tol = tol or Tolerances()
        self.name = name
        self.nvars = n
        # first- and higher-order directional derivatives of h, exact
        self.xh = lie_derivative(x_field, h)
        self.yh = lie_derivative(y_field, h)
        self.x2h = lie_derivative(x_field, self.xh)
        self.y2h = lie_derivative(y_field, self.yh)
        self.x3h = lie_derivative(x_field, self.x2h)
        self.y3h = lie_derivative(y_field, self.y2h)
        self.grad_h = h.gradient()

    def field(self, fid: FieldId) -> SmoothField:
        if fid == FieldId.X:
            return self.x_field
        if fid == FieldId.Y:
            return self.y_field
        raise ValueError("no smooth field with id %r" % (fid,))

    def grad_h_at(self, point):
        return np.array([g(point) for g in self.grad_h])

    def __repr__(self):
        return "PiecewiseSystem(%s, n=%d)" % (self.name or "unnamed", self.nvars)


# ---------------------------------------------------------------------------
# classification


def _tangent_dirs_on_surface(system, point):
    """Orthonormal basis of the tangent space of {h=0} at `point`."""
    g = system.grad_h_at(point)
    g = g / np.linalg.norm(g)
    n = system.nvars
    dirs = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        v = e - (e @ g) * g
        for d in dirs:
            v = v - (v @ d) * d
        norm = np.linalg.norm(v)
        if norm > 1e-9:
            dirs.append(v / norm)
    return dirs[: n - 1]


def _project_to_surface(system, point, max_iter=8):
    p = np.asarray(point, dtype=float).copy()
    for _ in range(max_iter):
        v = system.h(p)
        if abs(v) < 1e-15:
            break
        g = system.grad_h_at(p)
        p = p - v * g / (g @ g)
    return p


def _fold_curve_direction(system, point, which):
    """Tangent direction of the fold curve {Wh = 0} inside the surface (3-D)."""
    wh = system.xh if which == "X" else system.yh
    gh = system.grad_h_at(point)
    gw = np.array([wh.diff(i)(np.asarray(point, float)) for i in range(system.nvars)])
    d = np.cross(gh, gw)
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        return None
    return d / norm


def _one_field_order(system, point, which, tol):
    """(order, visible) for a field tangent at `point`; (None, None) if the
    configuration is degenerate beyond the supported case table."""
    pt = np.asarray(point, dtype=float)
    if which == "X":
        d2, d3 = system.x2h(pt), system.x3h(pt)
        vis_sign = 1.0   # upper field: visible when the second derivative is positive
    else:
        d2, d3 = system.y2h(pt), system.y3h(pt)
        vis_sign = -1.0  # lower field: convention switched
    if abs(d2) > tol.eps_tan:
        return 2, (vis_sign * d2 > 0)
    if system.nvars < 3:
        return None, None  # cusps need three dimensions
    if abs(d3) <= tol.eps_tan:
        return None, None
    # cusp: require independence of the differentials of h, Wh, W^2h
    h = system.h
    wh = system.xh if which == "X" else system.yh
    w2h = system.x2h if which == "X" else system.y2h
    rows = []
    for g in (h, wh, w2h):
        rows.append([g.diff(i)(pt) for i in range(system.nvars)])
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    if sv[-1] < tol.cusp_rank_floor:
        return None, None
    return 3, (vis_sign * d3 > 0)


def classify_tangency(system: PiecewiseSystem, point, tol: Tolerances | None = None) -> TangencyInfo:
    """Classify a switching-surface point where at least one field is tangent.

    Returns the case label of the supported taxonomy: A1 (visible fold against
    a transversal opposing field), A2 (invisible fold), A3 (invisible cusp),
    A4 (visible cusp), B1 (double fold, one side visible, crossing on both
    sides), B2 (invisible cusp meeting an invisible fold along a common
    tangent direction), or Unsupported.
    """
    tol = tol or system.tol
    pt = np.asarray(point, dtype=float)
    hv = system.h(pt)
    if abs(hv) > max(tol.eps_sigma, 1e-7):
        raise ValueError("point is not on the switching surface (h=%g)" % hv)
    a = system.xh(pt)
    b = system.yh(pt)
    tangent = []
    if abs(a) <= tol.eps_tan:
        tangent.append("X")
    if abs(b) <= tol.eps_tan:
        tangent.append("Y")
    info = TangencyInfo(point=tuple(pt), tangent_fields=tuple(tangent))
    if not tangent:
        info.detail = "no tangent field"
        return info

    if tangent == ["X"]:
        order, visible = _one_field_order(system, pt, "X", tol)
        info.order_x, info.visible_x = order, visible
        if order is None:
            info.detail = "degenerate contact of the upper field"
            return info
        if b <= tol.eps_tan:
            info.detail = "opposing field does not push upward"
            return info
        if order == 2:
            info.case_label = "A1" if visible else "A2"
        else:
            info.case_label = "A4" if visible else "A3"
        return info

    if tangent == ["Y"]:
        order, visible = _one_field_order(system, pt, "Y", tol)
        info.order_y, info.visible_y = order, visible
        if order is None:
            info.detail = "degenerate contact of the lower field"
            return info
        if a >= -tol.eps_tan:
            info.detail = "opposing field does not push downward"
            return info
        if order == 2:
            info.case_label = "A1" if visible else "A2"
        else:
            info.case_label = "A4" if visible else "A3"
        return info

    # both fields tangent
    ox, vx = _one_field_order(system, pt, "X", tol)
    oy, vy = _one_field_order(system, pt, "Y", tol)
    info.order_x, info.visible_x = ox, vx
    info.order_y, info.visible_y = oy, vy
    if ox is None or oy is None:
        info.detail = "degenerate double contact"
        return info

    if ox == 2 and oy == 2:
        if vx == vy:
            info.detail = "double fold with matching visibility"
            return info
        # double fold, opposite visibility: check that both crossing sign
        # patterns appear next to the point and sliding/escaping does not
        if _double_fold_is_crossing_boundary(system, pt, tol):
            info.case_label = "B1"
            info.heuristic = True
        else:
            info.detail = "double fold bordered by sliding/escaping"
        return info

    cusp_fold = (ox == 3 and not vx and oy == 2 and not vy) or \
                (oy == 3 and not vy and ox == 2 and not vx)
    if cusp_fold and system.nvars == 3:
        dx = _fold_curve_direction(system, pt, "X")
        dy = _fold_curve_direction(system, pt, "Y")
        if dx is not None and dy is not None:
            angle = math.acos(min(1.0, abs(float(dx @ dy))))
            if angle < tol.curve_angle_tol:
                info.case_label = "B2"
                info.heuristic = True
                return info
            info.detail = "contact curves meet transversally"
            return info
    info.detail = "double tangency outside the supported table"
    return info


def _double_fold_is_crossing_boundary(system, pt, tol):
    """Sampled test: near a double fold, do both crossing sign patterns appear
    while sliding/escaping does not?  Probes a ring of on-surface offsets."""
    dirs = _tangent_dirs_on_surface(system, pt)
    if not dirs:
        return False
    delta = 1e-3 * max(1.0, system.domain.scale())
    offsets = []
    if len(dirs) == 1:
        offsets = [dirs[0], -dirs[0]]
    else:
        for k in range(8):
            ang = math.pi * k / 4.0
            offsets.append(math.cos(ang) * dirs[0] + math.sin(ang) * dirs[1])
    saw_plus = saw_minus = False
    for u in offsets:
        q = _project_to_surface(system, pt + delta * u)
        a, b = system.xh(q), system.yh(q)
        if abs(a) <= tol.eps_tan or abs(b) <= tol.eps_tan:
            continue  # probe landed on a contact curve, skip
        if a > 0 and b > 0:
            saw_plus = True
        elif a < 0 and b < 0:
            saw_minus = True
        else:
            return False  # sliding or escaping borders the point
    return saw_plus and saw_minus


def classify_point(system: PiecewiseSystem, point, tol: Tolerances | None = None):
    """Region label for a point, with tangency detail when applicable.

    Returns (RegionLabel, TangencyInfo | None).
    """
    tol = tol or system.tol
    pt = np.asarray(point, dtype=float)
    hv = system.h(pt)
    if hv > tol.eps_sigma:
        return RegionLabel.INTERIOR_PLUS, None
    if hv < -tol.eps_sigma:
        return RegionLabel.INTERIOR_MINUS, None
    a = system.xh(pt)
    b = system.yh(pt)
    if abs(a) <= tol.eps_tan or abs(b) <= tol.eps_tan:
        return RegionLabel.TANGENCY, classify_tangency(system, pt, tol)
    if a > 0 and b > 0:
        return RegionLabel.CROSSING_PLUS, None
    if a < 0 and b < 0:
        return RegionLabel.CROSSING_MINUS, None
    if a < 0 and b > 0:
        return RegionLabel.SLIDING, None
    return RegionLabel.ESCAPING, None


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    issues: list = field(default_factory=list)
    surface_samples: int = 0
    min_gradient: float = float("inf")
    label_counts: dict = field(default_factory=dict)
    escaping_points: list = field(default_factory=list)
    unsupported_points: list = field(default_factory=list)
    tangency_cases: list = field(default_factory=list)

    def to_dict(self):
        return {
            "ok": self.ok,
            "issues": list(self.issues),
            "surfaceSamples": self.surface_samples,
            "minGradient": self.min_gradient if math.isfinite(self.min_gradient) else None,
            "labelCounts": {str(k): v for k, v in sorted(self.label_counts.items())},
            "escapingPoints": [list(p) for p in self.escaping_points[:20]],
            "unsupportedPoints": [list(p) for p in self.unsupported_points[:20]],
            "tangencyCases": self.tangency_cases,
        }


def _surface_samples(system, per_axis):
    """Deterministic sample of the switching surface inside the domain box:
    bisect every grid edge along which h changes sign."""
    box = system.domain
    n = system.nvars
    axes = [np.linspace(box.lo[i], box.hi[i], per_axis) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    hv = system.h(grid).reshape([per_axis] * n)
    pts = []
    for axis in range(n):
        sl_lo = [slice(None)] * n
        sl_hi = [slice(None)] * n
        sl_lo[axis] = slice(0, -1)
        sl_hi[axis] = slice(1, None)
        prod = hv[tuple(sl_lo)] * hv[tuple(sl_hi)]
        idx = np.argwhere(prod <= 0)
        for multi in idx:
            lo_pt = np.array([axes[i][multi[i]] for i in range(n)])
            hi_pt = lo_pt.copy()
            hi_pt[axis] = axes[axis][multi[axis] + 1]
            va, vb = system.h(lo_pt), system.h(hi_pt)
            if va == vb:
                continue
            # bisection to the surface
            a_pt, b_pt = lo_pt, hi_pt
            for _ in range(60):
                mid = 0.5 * (a_pt + b_pt)
                vm = system.h(mid)
                if va * vm <= 0:
                    b_pt, vb = mid, vm
                else:
                    a_pt, va = mid, vm
            pts.append(0.5 * (a_pt + b_pt))
    return pts


def _refine_zero_on_segment(system, poly, p, q):
    """Bisect poly along the on-surface segment p-q (projected back each step)."""
    va, vb = poly(p), poly(q)
    if va * vb > 0:
        return None
    a_pt, b_pt = np.asarray(p, float), np.asarray(q, float)
    for _ in range(60):
        mid = _project_to_surface(system, 0.5 * (a_pt + b_pt))
        vm = poly(mid)
        if va * vm <= 0:
            b_pt, vb = mid, vm
        else:
            a_pt, va = mid, vm
    return _project_to_surface(system, 0.5 * (a_pt + b_pt))


def validate_system(system: PiecewiseSystem, per_axis: int = 24,
                    tol: Tolerances | None = None) -> ValidationReport:
    """Sampled admissibility check.

    Verifies that the switching polynomial has a regular zero set inside the
    domain, that no sampled surface point is escaping, and that every sampled
    contact point falls inside the supported tangency table.  The check is a
    deterministic grid sample, so it cannot certify the absence of bad points
    between samples; it reliably rejects the standard counterexamples.
    """
    tol = tol or system.tol
    rep = ValidationReport(ok=True)
    pts = _surface_samples(system, per_axis)
    rep.surface_samples = len(pts)
    if not pts:
        # no surface inside the box: nothing more to check
        return rep

    for p in pts:
        g = np.linalg.norm(system.grad_h_at(p))
        rep.min_gradient = min(rep.min_gradient, g)
    if rep.min_gradient < tol.eps_reg:
        rep.ok = False
        rep.issues.append("gradient of h drops to %g on the surface" % rep.min_gradient)

    for p in pts:
        label, _ = classify_point(system, p, tol)
        rep.label_counts[label.value] = rep.label_counts.get(label.value, 0) + 1
        if label == RegionLabel.ESCAPING:
            rep.escaping_points.append(tuple(p))

    if rep.escaping_points:
        rep.ok = False
        rep.issues.append("escaping region detected (%d sample points)"
                          % len(rep.escaping_points))

    # hunt for contact points: zeros of Xh and Yh along the sampled surface
    candidates = []
    for poly, which in ((system.xh, "X"), (system.yh, "Y")):
        vals = [poly(p) for p in pts]
        order = sorted(range(len(pts)), key=lambda i: tuple(pts[i]))
        for i, j in zip(order[:-1], order[1:]):
            if vals[i] * vals[j] < 0 and np.linalg.norm(pts[i] - pts[j]) < 4.0 * system.domain.scale() / per_axis:
                z = _refine_zero_on_segment(system, poly, pts[i], pts[j])
                if z is not None:
                    candidates.append(z)
    seen = []
    for z in candidates:
        if any(np.linalg.norm(z - s) < 1e-6 * system.domain.scale() for s in seen):
            continue
        seen.append(z)
        info = classify_tangency(system, z, tol)
        rep.tangency_cases.append({"point": [float(v) for v in z],
                                   "caseLabel": info.case_label})
        if info.case_label == "Unsupported":
            rep.unsupported_points.append(tuple(z))
    if rep.unsupported_points:
        rep.ok = False
        rep.issues.append("unsupported tangency configuration (%d points)"
                          % len(rep.unsupported_points))
    return rep


def require_valid(system: PiecewiseSystem, per_axis: int = 24):
    rep = validate_system(system, per_axis)
    if not rep.ok:
        raise ValidationFailure("; ".join(rep.issues))
    return rep
