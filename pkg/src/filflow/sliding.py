"""Sliding dynamics on the switching surface.

Where the surface attracts from both sides (X pushes down, Y pushes up), the
forward motion follows the convex combination of X and Y that is tangent to
the surface.  Written with exact polynomial numerators and denominator:

    numerator_i = Yh * X_i - Xh * Y_i
    denominator = Yh - Xh

The same rational expression evaluated where the surface repels gives the
escaping field (the time-reversed construction lands on the identical
formula).  At the boundary of the sliding set the combination degenerates to
one of the one-sided fields, and where both directional derivatives vanish
the point is at rest for the sliding flow (a pseudo-equilibrium candidate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DenominatorVanishes
from .polynomial import Polynomial
from .system import FieldId, PiecewiseSystem, RegionLabel, Tolerances, classify_point


@dataclass
class RationalField:
    """Rational vector field numerators/denominator, all exact polynomials."""

    numerators: tuple
    denominator: Polynomial

    @property
    def nvars(self):
        return self.denominator.nvars

    def __call__(self, point, floor=1e-12):
        den = self.denominator(np.asarray(point, dtype=float))
        if abs(den) < floor:
            raise DenominatorVanishes(
                "sliding denominator %.3e below floor %.0e" % (den, floor))
        return np.array([p(point) for p in self.numerators]) / den

    def numerator_values(self, point):
        return np.array([p(point) for p in self.numerators])


def sliding_field(system: PiecewiseSystem) -> RationalField:
    """Exact rational sliding field of the system (cached on the system)."""
    cached = getattr(system, "_sliding_field", None)
    if cached is not None:
        return cached
    xh, yh = system.xh, system.yh
    nums = tuple(yh * xc - xh * yc
                 for xc, yc in zip(system.x_field.components,
                                   system.y_field.components))
    rf = RationalField(numerators=nums, denominator=yh - xh)
    system._sliding_field = rf
    return rf


def eval_sliding(system: PiecewiseSystem, point, tol: Tolerances | None = None):
    """Value of the sliding field at an on-surface point.

    Boundary behaviour: where only X is tangent the combination equals X,
    where only Y is tangent it equals Y, and where both directional
    derivatives vanish the sliding motion is at rest (zero vector).
    """
    tol = tol or system.tol
    pt = np.asarray(point, dtype=float)
    a = system.xh(pt)
    b = system.yh(pt)
    if abs(a) <= tol.eps_tan and abs(b) <= tol.eps_tan:
        return np.zeros(system.nvars)
    if abs(a) <= tol.eps_tan:
        return system.x_field(pt)
    if abs(b) <= tol.eps_tan:
        return system.y_field(pt)
    return sliding_field(system)(pt, floor=tol.denominator_floor)


def eval_escaping(system: PiecewiseSystem, point, tol: Tolerances | None = None):
    """Value of the escaping-region field (same rational expression, used on
    the repelling part of the surface)."""
    tol = tol or system.tol
    pt = np.asarray(point, dtype=float)
    a = system.xh(pt)
    b = system.yh(pt)
    if abs(a) <= tol.eps_tan and abs(b) <= tol.eps_tan:
        return np.zeros(system.nvars)
    return sliding_field(system)(pt, floor=tol.denominator_floor)


def sliding_lie_sign(system: PiecewiseSystem, g: Polynomial, point, order: int = 1):
    """Sign data of the iterated derivative of g along the sliding field.

    Returns (value, derivative_sign) where `value` is the numerator of the
    rational derivative evaluated at the point divided by the appropriate
    power of the (positive-on-sliding) denominator, so its sign equals the
    sign of the derivative.  order=1 or 2.
    """
    rf = sliding_field(system)
    pt = np.asarray(point, dtype=float)
    den = rf.denominator
    u1 = Polynomial.zero(g.nvars)
    for num, gi in zip(rf.numerators, g.gradient()):
        u1 = u1 + num * gi
    if order == 1:
        d = den(pt)
        return u1(pt) / d, float(np.sign(u1(pt) / d))
    if order != 2:
        raise ValueError("order must be 1 or 2")
    # second derivative of g along nums/den: (<nums, grad u1> den - u1 <nums, grad den>) / den^3
    t1 = Polynomial.zero(g.nvars)
    for num, gi in zip(rf.numerators, u1.gradient()):
        t1 = t1 + num * gi
    t2 = Polynomial.zero(g.nvars)
    for num, gi in zip(rf.numerators, den.gradient()):
        t2 = t2 + num * gi
    numer = t1 * den - u1 * t2
    d = den(pt)
    val = numer(pt) / d**3
    return val, float(np.sign(val))


@dataclass
class PseudoEquilibrium:
    point: tuple
    residual: float
    kind: str  # "interior" (inside the sliding set) or "boundary" (double tangency)

    def to_dict(self):
        return {"point": [float(v) for v in self.point],
                "residual": self.residual, "kind": self.kind}


def _surface_seed_grid(system, per_axis):
    box = system.domain
    n = system.nvars
    axes = [np.linspace(box.lo[i], box.hi[i], per_axis) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    hv = np.abs(system.h(pts))
    # keep points near the surface: within one grid cell of h=0 by value/gradient
    keep = []
    for p, v in zip(pts, hv):
        g = np.linalg.norm(system.grad_h_at(p))
        if g > 0 and v / g < 2.0 * system.domain.scale() / per_axis:
            keep.append(p)
    return keep


def pseudo_equilibria(system: PiecewiseSystem, per_axis: int = 17,
                      depth: int = 12, tol: Tolerances | None = None):
    """Rest points of the sliding flow inside the domain box.

    Deterministic seeding (coarse grid near the surface, refined by bisection
    depth `depth` along the residual landscape) followed by a least-squares
    Newton polish of the square system {h = 0, all sliding numerators = 0}.
    Sampling search: finds the standard cases, offers no completeness
    guarantee.
    """
    tol = tol or system.tol
    rf = sliding_field(system)
    polys = [system.h] + list(rf.numerators)

    def residual(p):
        return np.array([q(p) for q in polys])

    def jac(p):
        return np.array([[q.diff(j)(p) for j in range(system.nvars)] for q in polys])

    seeds = _surface_seed_grid(system, per_axis)
    # bisection-style refinement: keep halving the neighbourhood of the best
    # candidates so clustered seeds converge before the expensive polish
    scale = system.domain.scale()
    found = []
    for seed in seeds:
        p = np.asarray(seed, dtype=float)
        step = scale / per_axis
        for _ in range(depth):
            best, best_r = p, np.linalg.norm(residual(p))
            for delta in np.eye(system.nvars):
                for s in (-step, step):
                    q = p + s * delta
                    if not system.domain.contains(q):
                        continue
                    r = np.linalg.norm(residual(q))
                    if r < best_r:
                        best, best_r = q, r
            p = best
            step *= 0.5
        if np.linalg.norm(residual(p)) > 1e3 * tol.eps_pe:
            # not promising enough to polish
            if np.linalg.norm(residual(p)) > 0.05 * max(1.0, scale):
                continue
        sol = least_squares(residual, p, jac=jac, xtol=1e-14, ftol=1e-14,
                            gtol=1e-14, max_nfev=200)
        q = sol.x
        if not system.domain.contains(q, slack=1e-9):
            continue
        if np.linalg.norm(residual(q)) > tol.eps_pe:
            continue
        if any(np.linalg.norm(q - np.asarray(f.point)) < 1e-6 * max(1.0, scale)
               for f in found):
            continue
        a, b = system.xh(q), system.yh(q)
        kind = "boundary" if (abs(a) <= tol.eps_tan and abs(b) <= tol.eps_tan) \
            else "interior"
        if kind == "interior":
            label, _ = classify_point(system, q, tol)
            if label not in (RegionLabel.SLIDING, RegionLabel.ESCAPING,
                             RegionLabel.TANGENCY):
                continue  # numerators vanish but the point is a crossing: spurious
        found.append(PseudoEquilibrium(point=tuple(float(v) for v in q),
                                       residual=float(np.linalg.norm(residual(q))),
                                       kind=kind))
    found.sort(key=lambda pe: pe.point)
    return found
