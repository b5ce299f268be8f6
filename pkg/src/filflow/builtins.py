"""Ready-made example systems.

Each entry wires a small polynomial two-zone system together with default
task settings the command line falls back to.  They cover the supported
contact taxonomy (visible/invisible folds, the visible cusp, a double fold
bordered by crossing), pure sliding motion, a planar relay with a stable
sliding periodic orbit, a circular orbit made entirely of sliding motion,
and one deliberately invalid system whose surface repels (validation must
refuse it).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .polynomial import Polynomial
from .system import Box, PiecewiseSystem, SmoothField


def _vars(n):
    return [Polynomial.variable(n, i) for i in range(n)]


def _const(n, v):
    return Polynomial.constant(n, v)


@dataclass
class BuiltinScenario:
    name: str
    description: str
    system: PiecewiseSystem
    defaults: dict = dc_field(default_factory=dict)


def _constant_sliding():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([zero, zero, -one]),
        SmoothField([zero, zero, one]),
        x3,
        Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        name="constant_sliding",
    )
    return BuiltinScenario(
        "constant_sliding",
        "opposed vertical fields; every surface point is a resting "
        "pseudo-equilibrium of the sliding combination",
        sys,
        {"simulate": {"start": (0.0, 0.0, 1.0), "time": 2.5}},
    )


def _crossing_tower():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([zero, zero, one]),
        SmoothField([zero, zero, one]),
        x3,
        Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        name="crossing_tower",
    )
    return BuiltinScenario(
        "crossing_tower",
        "both fields push upward: the whole surface is crossing, orbits pass "
        "straight through",
        sys,
        {"simulate": {"start": (0.0, 0.0, -0.5), "time": 1.0}},
    )


def _fold_visible():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([one, zero, x1]),
        SmoothField([zero, zero, one]),
        x3,
        Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        name="fold_visible",
    )
    return BuiltinScenario(
        "fold_visible",
        "upper field grazes the surface along a visible fold line {x1=0}; "
        "the default run touches the surface once and leaves the box",
        sys,
        {"simulate": {"start": (-1.0, 0.0, 0.5), "time": 5.0},
         "exit": {"start": (-1.0, 0.0, 0.5), "field": "X", "cap": 10.0}},
    )


def _fold_invisible():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([one, zero, -x1]),
        SmoothField([zero, zero, one]),
        x3,
        Box((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
        name="fold_invisible",
    )
    return BuiltinScenario(
        "fold_invisible",
        "upper field folds invisibly along {x1=0}: orbits cross the surface "
        "with cubic-free contact elsewhere and land on the sliding set",
        sys,
        {"simulate": {"start": (-1.0, 0.0, 0.5), "time": 6.0}},
    )


def _cusp_visible():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([one, zero, x2 + x1 * x1]),
        SmoothField([zero, zero, one]),
        x3,
        Box((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
        name="cusp_visible",
    )
    return BuiltinScenario(
        "cusp_visible",
        "cubic contact of the upper field at the origin (visible cusp); the "
        "fold curve {x2=-x1^2} splits into visible and invisible halves",
        sys,
        {"simulate": {"start": (0.0, -0.5, 0.0), "time": 4.0}},
    )


def _fold_fold_B1():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    two = _const(n, 2)
    sys = PiecewiseSystem(
        SmoothField([one, zero, x1]),
        SmoothField([two, zero, x1 * (x2 + 3)]),
        x3,
        Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        name="fold_fold_B1",
    )
    return BuiltinScenario(
        "fold_fold_B1",
        "both fields fold along {x1=0} with opposite visibility and crossing "
        "regions on both sides (the supported double-fold case)",
        sys,
        {"simulate": {"start": (0.0, 0.0, -0.5), "time": 2.0}},
    )


def _relay_focus():
    n = 2
    x1, x2 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    a = Fraction(1, 5)
    # upper field: expanding focus around (0, 1), lower field: constant upward
    fx1 = a * x1 - x2 + 1
    fx2 = x1 + a * x2 - a
    sys = PiecewiseSystem(
        SmoothField([fx1, fx2]),
        SmoothField([zero, one]),
        x2,
        Box((-4.0, -2.0), (4.0, 4.0)),
        name="relay_focus",
    )
    return BuiltinScenario(
        "relay_focus",
        "planar relay: an unstable focus above the switch line feeds a "
        "sliding segment that relaunches at a visible fold, giving a stable "
        "periodic orbit with one sliding arc",
        sys,
        {
            "simulate": {"start": (0.0, 2.5), "time": 30.0},
            "detect": {
                "section": {"anchor": (0.0, 2.3), "normal": (1.0, 0.0),
                            "radius": 1.2, "sense": -1, "xi_window": 1.0},
                "seed": (0.0, 2.5),
                "settle": 30.0,
                "max_iter": 50,
                "region": ((-2.8, -0.3), (1.4, 2.9)),
            },
            "conley": {"resolution": 64, "bloat": 1},
            "regularize": {"eps": (0.1, 0.05, 0.025, 0.0125)},
        },
    )


def _sliding_circle():
    n = 2
    x1, x2 = _vars(n)
    half = Fraction(1, 2)
    sys = PiecewiseSystem(
        SmoothField([-x1 + half * x2, -x2 - half * x1]),
        SmoothField([x1 - x2, x2 + x1]),
        x1 * x1 + x2 * x2 - 1,
        Box((-2.0, -2.0), (2.0, 2.0)),
        name="sliding_circle",
    )
    return BuiltinScenario(
        "sliding_circle",
        "the unit circle attracts from both sides; motion on it is pure "
        "sliding around the circle (period 8*pi)",
        sys,
        {
            "simulate": {"start": (0.0, 1.0), "time": 10.0},
            "detect": {
                "section": {"anchor": (0.0, 1.0), "normal": (1.0, 0.0),
                            "radius": 0.4, "sense": -1, "xi_window": 0.1},
                "seed": (0.0, 1.0),
                "settle": 0.0,
                "max_iter": 50,
                "region": ((-0.7, -0.7), (0.7, 0.7)),
            },
        },
    )


def _escaping_demo():
    n = 3
    x1, x2, x3 = _vars(n)
    zero = Polynomial.zero(n)
    one = _const(n, 1)
    sys = PiecewiseSystem(
        SmoothField([zero, zero, one]),
        SmoothField([zero, zero, -one]),
        x3,
        Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
        name="escaping_demo",
    )
    return BuiltinScenario(
        "escaping_demo",
        "both fields point away from the surface: the whole surface repels "
        "and validation refuses the system",
        sys,
        {},
    )


_FACTORIES = {
    "constant_sliding": _constant_sliding,
    "crossing_tower": _crossing_tower,
    "fold_visible": _fold_visible,
    "fold_invisible": _fold_invisible,
    "cusp_visible": _cusp_visible,
    "fold_fold_B1": _fold_fold_B1,
    "relay_focus": _relay_focus,
    "sliding_circle": _sliding_circle,
    "escaping_demo": _escaping_demo,
}


def builtin_names():
    return sorted(_FACTORIES)


def get_builtin(name: str) -> BuiltinScenario:
    """Fresh scenario instance (callers may adjust tolerances freely)."""
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise KeyError("no builtin named %r; available: %s"
                       % (name, ", ".join(builtin_names()))) from None
