"""Independent recomputation routes used to cross-check the library.

Nothing here shares code with `src/filflow`: Lie derivatives and the
sliding combination are rebuilt in sympy, homology is recomputed on a
Freudenthal (permutation-chain) triangulation with an integer Smith
reduction, and the relay oscillator's orbit is assembled from the
closed-form spiral of its linear upper field plus exact quadrature of the
scalar sliding equation.  Tests pass only when both routes agree.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import sympy as sp

# ---------------------------------------------------------------------------
# sympy bridge


def sym_vars(nvars):
    return sp.symbols("x1:%d" % (nvars + 1))


def sym_poly(poly, xs):
    expr = sp.Integer(0)
    for expo, coeff in poly.term_list():
        term = sp.Rational(coeff.numerator, coeff.denominator)
        for x, e in zip(xs, expo):
            term *= x ** e
        expr += term
    return sp.expand(expr)


def sym_fields(system):
    xs = sym_vars(system.nvars)
    X = [sym_poly(c, xs) for c in system.x_field.components]
    Y = [sym_poly(c, xs) for c in system.y_field.components]
    h = sym_poly(system.h, xs)
    return xs, X, Y, h


def lie(field, g, xs):
    return sp.expand(sum(f * sp.diff(g, x) for f, x in zip(field, xs)))


def sliding_numerators(X, Y, h, xs):
    """Numerators and denominator of the convex sliding combination."""
    a = lie(X, h, xs)
    b = lie(Y, h, xs)
    nums = [sp.expand(b * Xi - a * Yi) for Xi, Yi in zip(X, Y)]
    return nums, sp.expand(b - a)


def sliding_tangency_defect(system):
    """<sliding numerators, grad h> as an expanded polynomial.

    The combination is built to annihilate the growth of h, so this must be
    the zero polynomial for every system, not merely zero on the surface.
    """
    xs, X, Y, h = sym_fields(system)
    nums, _ = sliding_numerators(X, Y, h, xs)
    return sp.expand(sum(n * sp.diff(h, x) for n, x in zip(nums, xs)))


def exact_subs(expr, xs, point):
    """Evaluate with exact rational substitution (no floats)."""
    subs = {x: sp.Rational(v).limit_denominator(10 ** 12) if not isinstance(v, int)
            else sp.Integer(v) for x, v in zip(xs, point)}
    return sp.simplify(expr.subs(subs))


# ---------------------------------------------------------------------------
# brute-force region labels (plain sign evaluation)


def brute_label(system, point, eps_sigma, eps_tan):
    """Region label from literal sign evaluation, or None inside the
    undecidable tolerance band."""
    xs, X, Y, h = sym_fields(system)
    fh = sp.lambdify(xs, h, "numpy")
    fa = sp.lambdify(xs, lie(X, h, xs), "numpy")
    fb = sp.lambdify(xs, lie(Y, h, xs), "numpy")
    hv = float(fh(*point))
    if hv > eps_sigma:
        return "InteriorPlus"
    if hv < -eps_sigma:
        return "InteriorMinus"
    a = float(fa(*point))
    b = float(fb(*point))
    if abs(a) <= eps_tan or abs(b) <= eps_tan:
        return None
    if a > 0 and b > 0:
        return "CrossingPlus"
    if a < 0 and b < 0:
        return "CrossingMinus"
    if a < 0 < b:
        return "Sliding"
    return "Escaping"


def batch_brute_labels(system, points, eps_sigma, eps_tan):
    """Vectorized version of brute_label for large point batches."""
    xs, X, Y, h = sym_fields(system)
    pts = np.asarray(points, dtype=float)
    cols = [pts[:, i] for i in range(pts.shape[1])]
    hv = np.asarray(sp.lambdify(xs, h, "numpy")(*cols), dtype=float)
    a = np.broadcast_to(
        np.asarray(sp.lambdify(xs, lie(X, h, xs), "numpy")(*cols), dtype=float),
        hv.shape)
    b = np.broadcast_to(
        np.asarray(sp.lambdify(xs, lie(Y, h, xs), "numpy")(*cols), dtype=float),
        hv.shape)
    out = []
    for i in range(len(pts)):
        if hv[i] > eps_sigma:
            out.append("InteriorPlus")
        elif hv[i] < -eps_sigma:
            out.append("InteriorMinus")
        elif abs(a[i]) <= eps_tan or abs(b[i]) <= eps_tan:
            out.append(None)
        elif a[i] > 0 and b[i] > 0:
            out.append("CrossingPlus")
        elif a[i] < 0 and b[i] < 0:
            out.append("CrossingMinus")
        elif a[i] < 0 < b[i]:
            out.append("Sliding")
        else:
            out.append("Escaping")
    return out


# ---------------------------------------------------------------------------
# symbolic contact data at a surface point


def contact_signs(system, point):
    """Exact iterated Lie-derivative data of both fields at a surface point.

    Returns a dict of sympy Rationals: a1..a3 for the upper field, b1..b3
    for the lower one (k-th derivative of h along the field).
    """
    xs, X, Y, h = sym_fields(system)
    out = {}
    g = h
    for k in (1, 2, 3):
        g = lie(X, g, xs)
        out["a%d" % k] = exact_subs(g, xs, point)
    g = h
    for k in (1, 2, 3):
        g = lie(Y, g, xs)
        out["b%d" % k] = exact_subs(g, xs, point)
    return out


def case_from_signs(signs):
    """Contact-case label from exact sign data, written independently.

    Only the single-tangency folds/cusps and the double fold are decided;
    anything else returns None (the library handles those with geometric
    side conditions this oracle does not reproduce).
    """
    a1, a2, a3 = signs["a1"], signs["a2"], signs["a3"]
    b1, b2, b3 = signs["b1"], signs["b2"], signs["b3"]
    if a1 == 0 and b1 != 0:
        if b1 < 0:
            return None
        if a2 != 0:
            return "A1" if a2 > 0 else "A2"
        if a3 != 0:
            return "A4" if a3 > 0 else "A3"
        return None
    if b1 == 0 and a1 != 0:
        if a1 > 0:
            return None
        if b2 != 0:
            return "A1" if b2 < 0 else "A2"
        if b3 != 0:
            return "A4" if b3 < 0 else "A3"
        return None
    if a1 == 0 and b1 == 0 and a2 != 0 and b2 != 0:
        vis_x = a2 > 0
        vis_y = b2 < 0
        if vis_x != vis_y:
            return "B1"
        return None
    return None


# ---------------------------------------------------------------------------
# simplicial homology on the Freudenthal triangulation


def _cube_simplices(base):
    """Top-dimensional simplices of the unit cube at an integer corner."""
    d = len(base)
    for perm in itertools.permutations(range(d)):
        verts = [tuple(base)]
        cur = list(base)
        for axis in perm:
            cur[axis] += 1
            verts.append(tuple(cur))
        yield tuple(sorted(verts))


def _closure(simplices):
    seen = set()
    stack = list(simplices)
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        if len(s) > 1:
            for i in range(len(s)):
                stack.append(s[:i] + s[i + 1:])
    return seen


def _snf_diagonal_exact(rows):
    """Textbook integer Smith reduction (exact, for small residues)."""
    M = [list(r) for r in rows]
    m = len(M)
    n = len(M[0]) if m else 0
    diag = []
    t = 0
    while t < min(m, n):
        # locate the smallest nonzero entry in the submatrix
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = abs(M[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        _, bi, bj = best
        M[t], M[bi] = M[bi], M[t]
        for row in M:
            row[t], row[bj] = row[bj], row[t]
        while True:
            dirty = False
            for i in range(t + 1, m):
                if M[i][t]:
                    q = M[i][t] // M[t][t]
                    M[i] = [x - q * y for x, y in zip(M[i], M[t])]
                    if M[i][t]:
                        M[t], M[i] = M[i], M[t]
                        dirty = True
            for j in range(t + 1, n):
                if M[t][j]:
                    q = M[t][j] // M[t][t]
                    for row in M:
                        row[j] -= q * row[t]
                    if M[t][j]:
                        for row in M:
                            row[t], row[j] = row[j], row[t]
                        dirty = True
            if not dirty:
                break
        # pivot must divide every remaining entry for true divisor chains
        p = M[t][t]
        fixed = True
        for i in range(t + 1, m):
            for j in range(t + 1, n):
                if M[i][j] % p:
                    M[t] = [x + y for x, y in zip(M[t], M[i])]
                    fixed = False
                    break
            if not fixed:
                break
        if not fixed:
            continue
        diag.append(abs(p))
        t += 1
    return [d for d in diag if d]


def snf_diagonal(mat):
    """Diagonal of the Smith form: fast unit-pivot sweep, exact residue."""
    M = np.array(mat, dtype=np.int64)
    if M.size == 0:
        return []
    units = 0
    t = 0
    m, n = M.shape
    while t < min(m, n):
        hits = np.argwhere(np.abs(M[t:, t:]) == 1)
        if len(hits) == 0:
            break
        i, j = hits[0]
        i += t
        j += t
        M[[t, i]] = M[[i, t]]
        M[:, [t, j]] = M[:, [j, t]]
        p = int(M[t, t])
        col = M[t + 1:, t].copy()
        if np.any(col):
            M[t + 1:, :] -= np.outer(col * p, M[t, :])
        M[t, t + 1:] = 0
        M[t, t] = 1
        if np.abs(M).max() > 2 ** 40:       # keep far away from overflow
            rest = _snf_diagonal_exact(M[t + 1:, t + 1:].tolist())
            return [1] * (units + 1) + rest
        units += 1
        t += 1
    rest = _snf_diagonal_exact(M[t:, t:].tolist())
    return [1] * units + rest


def simplicial_pair_homology(n_coords, a_coords=()):
    """Integral homology of the cube pair via an independent triangulation.

    Returns (betti, torsion) tuples indexed by degree 0..d, in the same
    shape the library's cubical engine reports.
    """
    n_coords = [tuple(int(v) for v in c) for c in n_coords]
    a_coords = [tuple(int(v) for v in c) for c in a_coords]
    if not n_coords:
        return (0,), ((),)
    d = len(n_coords[0])
    n_top = {s for c in n_coords for s in _cube_simplices(c)}
    a_top = {s for c in a_coords for s in _cube_simplices(c)}
    n_all = _closure(n_top)
    a_all = _closure(a_top)
    rel = sorted(n_all - a_all, key=lambda s: (len(s), s))
    by_dim = [[] for _ in range(d + 1)]
    for s in rel:
        by_dim[len(s) - 1].append(s)
    index = [{s: i for i, s in enumerate(lvl)} for lvl in by_dim]

    ranks = [0] * (d + 2)
    divisors = [[] for _ in range(d + 2)]
    for k in range(1, d + 1):
        if not by_dim[k] or not by_dim[k - 1]:
            continue
        mat = np.zeros((len(by_dim[k - 1]), len(by_dim[k])), dtype=np.int64)
        for j, s in enumerate(by_dim[k]):
            for i_v in range(len(s)):
                face = s[:i_v] + s[i_v + 1:]
                row = index[k - 1].get(face)
                if row is not None:
                    mat[row, j] = (-1) ** i_v
        diag = snf_diagonal(mat)
        ranks[k] = len(diag)
        divisors[k] = [v for v in diag if v > 1]

    betti = tuple(len(by_dim[k]) - ranks[k] - ranks[k + 1]
                  for k in range(d + 1))
    torsion = tuple(tuple(divisors[k + 1]) for k in range(d + 1))
    return betti, torsion


# ---------------------------------------------------------------------------
# closed-form relay oscillator

RELAY_CENTER = np.array([0.0, 1.0])
RELAY_RATE = 0.2
RELAY_FOLD_X = 0.2


def relay_spiral(p0, t):
    """Exact upper-field flow: expanding spiral about the interior focus."""
    r = np.asarray(p0, dtype=float) - RELAY_CENTER
    c, s = math.cos(t), math.sin(t)
    rot = np.array([c * r[0] - s * r[1], s * r[0] + c * r[1]])
    return RELAY_CENTER + math.exp(RELAY_RATE * t) * rot


def relay_fall_time(p0, t_lo=0.05, t_hi=8.0, steps=2000):
    """First positive time the spiral from p0 comes back to the surface."""
    from scipy.optimize import brentq

    f = lambda t: relay_spiral(p0, t)[1]
    grid = np.linspace(t_lo, t_hi, steps)
    vals = [f(t) for t in grid]
    for k in range(len(grid) - 1):
        if vals[k] > 0 >= vals[k + 1]:
            return brentq(f, grid[k], grid[k + 1], xtol=1e-14)
    raise AssertionError("spiral never returned to the surface")


def relay_slide_time(x_from, x_to):
    """Exact sliding traversal time between surface abscissas.

    On the surface the sliding speed is (0.2*x+1)/(1.2-x); separating the
    variables gives the antiderivative 31*log(0.2*x+1) - 25*(0.2*x+1).
    """
    F = lambda x: 31.0 * math.log(RELAY_RATE * x + 1.0) \
        - 25.0 * (RELAY_RATE * x + 1.0)
    return F(x_to) - F(x_from)


def relay_oracle():
    """Closed-form period decomposition of the relay's periodic orbit.

    Returns (period, landing_x, arc_time, slide_time): launch at the fold,
    follow the exact spiral until it lands back on the surface, then slide
    back to the fold in exactly quadrature time.
    """
    launch = np.array([RELAY_FOLD_X, 0.0])
    t_arc = relay_fall_time(launch)
    landing = relay_spiral(launch, t_arc)
    t_slide = relay_slide_time(landing[0], RELAY_FOLD_X)
    return t_arc + t_slide, float(landing[0]), t_arc, t_slide
