"""The sliding combination: exactness, confinement, and boundary signs."""

from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from filflow import get_builtin
from filflow.errors import DenominatorVanishes
from filflow.polynomial import Polynomial
from filflow.sliding import (eval_sliding, sliding_field, sliding_lie_sign)
from filflow.system import Box, PiecewiseSystem, SmoothField

from oracles import lie, sliding_numerators, sliding_tangency_defect, sym_fields


def coeffs():
    return st.fractions(min_value=-9, max_value=9, max_denominator=6)


@st.composite
def random_system(draw, nvars):
    def poly():
        terms = {}
        for _ in range(draw(st.integers(1, 4))):
            expo = tuple(draw(st.integers(0, 2)) for _ in range(nvars))
            if sum(expo) > 3:
                expo = (1,) + (0,) * (nvars - 1)
            terms[expo] = draw(coeffs())
        return Polynomial(nvars, terms)

    X = SmoothField([poly() for _ in range(nvars)])
    Y = SmoothField([poly() for _ in range(nvars)])
    # keep grad h nonzero somewhere: force a linear term
    h = poly() + Polynomial.variable(nvars, draw(st.integers(0, nvars - 1)))
    box = Box((-2.0,) * nvars, (2.0,) * nvars)
    return PiecewiseSystem(X, Y, h, box, name="random")


@given(random_system(2))
@settings(max_examples=40, deadline=None)
def test_sliding_annihilates_h_growth_2d(system):
    assert sliding_tangency_defect(system) == 0


@given(random_system(3))
@settings(max_examples=25, deadline=None)
def test_sliding_annihilates_h_growth_3d(system):
    assert sliding_tangency_defect(system) == 0


def test_sliding_field_matches_cas_formula():
    system = get_builtin("relay_focus").system
    xs, X, Y, h = sym_fields(system)
    nums, den = sliding_numerators(X, Y, h, xs)
    rf = sliding_field(system)
    rng = np.random.default_rng(3)
    for _ in range(25):
        x1 = rng.uniform(-2.5, 0.1)       # inside the sliding region
        p = (x1, 0.0)
        ours = eval_sliding(system, p)
        subs = {xs[0]: x1, xs[1]: 0.0}
        theirs = [float(n.subs(subs)) / float(den.subs(subs)) for n in nums]
        assert np.allclose(ours, theirs, atol=1e-12)
        assert np.allclose(rf(p), theirs, atol=1e-12)


def test_sliding_keeps_h_flat_exactly():
    # <numerators, grad h> is the zero polynomial, so along the combined
    # motion h has zero derivative in exact arithmetic, not merely small
    system = get_builtin("sliding_circle").system
    rf = sliding_field(system)
    g = Polynomial.zero(system.nvars)
    for num, hi in zip(rf.numerators, system.h.gradient()):
        g = g + num * hi
    assert g.is_zero()


def test_boundary_values():
    system = get_builtin("relay_focus").system
    # at the fold only X is tangent: the combination equals X
    fold = (0.2, 0.0)
    assert np.allclose(eval_sliding(system, fold), system.x_field(fold))
    # double tangency rests
    system_b1 = get_builtin("fold_fold_B1").system
    assert np.allclose(eval_sliding(system_b1, (0.0, 0.0, 0.0)), 0.0)


def test_denominator_floor_raises():
    system = get_builtin("relay_focus").system
    rf = sliding_field(system)
    # Yh - Xh = 1.2 - x1 - 0.2*x2 vanishes here
    with pytest.raises(DenominatorVanishes):
        rf((1.2, 0.0))


# ---------------------------------------------------------------------------
# signs of the fold-boundary derivative along the sliding motion


def test_visible_fold_exit_sign():
    system = get_builtin("fold_visible").system
    val, sign = sliding_lie_sign(system, system.xh, (0.0, 0.3, 0.0))
    assert sign > 0  # sliding orbits leave through a visible fold


def test_invisible_fold_entry_sign():
    system = get_builtin("fold_invisible").system
    val, sign = sliding_lie_sign(system, system.xh, (0.0, 0.3, 0.0))
    assert sign < 0  # sliding orbits turn back inside at an invisible fold


def test_visible_cusp_grazes_the_fold_curve():
    system = get_builtin("cusp_visible").system
    p = (0.0, 0.0, 0.0)
    val1, _ = sliding_lie_sign(system, system.xh, p, order=1)
    val2, sign2 = sliding_lie_sign(system, system.xh, p, order=2)
    assert abs(val1) < 1e-14
    assert sign2 > 0  # nondegenerate exit through the cusp


def test_lie_sign_matches_cas():
    system = get_builtin("relay_focus").system
    xs, X, Y, h = sym_fields(system)
    nums, den = sliding_numerators(X, Y, h, xs)
    g = sp.expand(lie(X, h, xs))      # Xh as the observable
    dg = sp.expand(sum(n * sp.diff(g, x) for n, x in zip(nums, xs)))
    for x1 in (-2.0, -1.0, -0.3):
        subs = {xs[0]: sp.Rational(x1), xs[1]: 0}
        want = sp.Rational(dg.subs(subs), den.subs(subs))
        got, _ = sliding_lie_sign(system, system.xh, (x1, 0.0))
        assert abs(got - float(want)) < 1e-10
