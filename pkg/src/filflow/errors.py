"""Exception types shared across the package.

Every failure mode that a caller is expected to catch has its own class here,
so library users and the CLI can map them to exit codes without string
matching.
"""


class FilflowError(Exception):
    """Base class for all package-specific errors."""


class ValidationFailure(FilflowError):
    """A system was rejected by validate_system (escaping region, irregular
    switching function, unsupported tangency, bad domain)."""


class EscapingPoint(FilflowError):
    """Forward dynamics requested at a point of the escaping region, where no
    forward selection exists."""


class UnsupportedTangency(FilflowError):
    """The tangency at the current point is outside the supported case table
    (degenerate order, fold-fold both visible, ...)."""


class DenominatorVanishes(FilflowError):
    """The sliding-field denominator dropped below the safe floor during
    evaluation."""


class MaxSwitchesExceeded(FilflowError):
    """The event-driven semiflow performed more field switches than the
    configured cap (likely chattering or a degenerate configuration)."""


class StepUnderflow(FilflowError):
    """The adaptive integrator could not make progress at the requested
    tolerances."""


class NonFiniteState(FilflowError):
    """Integration produced NaN/inf state components."""


class NoReturn(FilflowError):
    """The trajectory never crossed the section again within the time cap."""


class LeftNeighborhood(FilflowError):
    """The trajectory left the admissible region (domain box or section
    neighbourhood) before returning to the section."""


class NoConvergence(FilflowError):
    """Fixed-point iteration for a periodic orbit did not converge within the
    iteration cap."""


class PairConstructionFailed(FilflowError):
    """The positive-invariance closure of the exit set swallowed invariant
    cubes, so no valid index pair exists at this resolution."""


class ScenarioError(FilflowError):
    """Base class for scenario-file problems; carries a source location."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = "line %d, column %d: %s" % (line, column, message)
        super().__init__(message)


class ParseError(ScenarioError):
    """The scenario text does not match the grammar."""


class SemanticError(ScenarioError):
    """The scenario parsed but is inconsistent (dimension mismatch, unknown
    key, out-of-range value, ...)."""
