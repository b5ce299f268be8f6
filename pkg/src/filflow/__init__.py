"""Piecewise-smooth vector fields with a switching surface.

Tools to define a two-zone polynomial system, classify its switching surface
(crossing, attracting, repelling, contact points), follow the induced motion
including the sliding combination on the attracting part, hunt for periodic
behaviour through return maps, certify recurrence with a combinatorial index
over a cubical grid, and study the smooth one-parameter thickening of the
switch.
"""

from .errors import (DenominatorVanishes, EscapingPoint, FilflowError,
                     MaxSwitchesExceeded, NoConvergence, NonFiniteState,
                     NoReturn, PairConstructionFailed, ParseError,
                     ScenarioError, SemanticError, StepUnderflow,
                     UnsupportedTangency, ValidationFailure)
from .polynomial import Polynomial
from .sliding import (PseudoEquilibrium, eval_escaping, eval_sliding,
                      pseudo_equilibria, sliding_field, sliding_lie_sign)
from .system import (Box, FieldId, PiecewiseSystem, RegionLabel, SmoothField,
                     TangencyInfo, Tolerances, classify_point,
                     classify_tangency, lie_derivative, lie_derivative_k,
                     validate_system)
from .semiflow import (ExitTimeResult, Trajectory, exit_time, flow_map,
                       select_field, semiflow)
from .poincare import (PeriodicOrbit, ReturnRecord, SectionReport,
                       SectionSpec, classify_orbit, find_periodic, return_map,
                       return_map_derivative, validate_section)
from .cubical import (CubicalGrid, CubicalSet, OuterMap, build_outer_map,
                      check_isolating, index_pair, invariant_part)
from .homology import HomologySummary, relative_homology
from .conley import (ConleyReport, build_orbit_neighborhood,
                     certify_periodic_orbit, certify_region, default_orbit_box,
                     periodic_verdict)
from .regularization import (ContinuationReport, RegularizedField,
                             SmoothOrbit, continuation_experiment,
                             find_periodic_smooth, regularize,
                             smooth_return_map, transition)
from .builtins import BuiltinScenario, builtin_names, get_builtin

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BuiltinScenario",
    "ConleyReport",
    "ContinuationReport",
    "CubicalGrid",
    "CubicalSet",
    "DenominatorVanishes",
    "EscapingPoint",
    "ExitTimeResult",
    "FieldId",
    "FilflowError",
    "HomologySummary",
    "MaxSwitchesExceeded",
    "NoConvergence",
    "NoReturn",
    "NonFiniteState",
    "OuterMap",
    "PairConstructionFailed",
    "ParseError",
    "PeriodicOrbit",
    "PiecewiseSystem",
    "Polynomial",
    "PseudoEquilibrium",
    "RegionLabel",
    "RegularizedField",
    "ReturnRecord",
    "ScenarioError",
    "SectionReport",
    "SectionSpec",
    "SemanticError",
    "SmoothField",
    "SmoothOrbit",
    "StepUnderflow",
    "TangencyInfo",
    "Tolerances",
    "Trajectory",
    "UnsupportedTangency",
    "ValidationFailure",
    "build_orbit_neighborhood",
    "build_outer_map",
    "builtin_names",
    "certify_periodic_orbit",
    "certify_region",
    "check_isolating",
    "classify_orbit",
    "classify_point",
    "classify_tangency",
    "continuation_experiment",
    "default_orbit_box",
    "eval_escaping",
    "eval_sliding",
    "exit_time",
    "find_periodic",
    "find_periodic_smooth",
    "flow_map",
    "get_builtin",
    "index_pair",
    "invariant_part",
    "lie_derivative",
    "lie_derivative_k",
    "periodic_verdict",
    "pseudo_equilibria",
    "regularize",
    "relative_homology",
    "return_map",
    "return_map_derivative",
    "select_field",
    "semiflow",
    "sliding_field",
    "sliding_lie_sign",
    "smooth_return_map",
    "transition",
    "validate_section",
    "validate_system",
]
