"""Exception hierarchy for supportlab.

Every error carries a plain message; callers log ``error`` and ``error_type``
before re-raising, the same way the CLI layer does.
"""


class SupportLabError(Exception):
    """Base class for all supportlab errors."""


class InvalidBody(SupportLabError, ValueError):
    """A convex body description violates its construction invariants."""


class NonUnitDirection(SupportLabError, ValueError):
    """A direction argument is not a unit vector within tolerance."""


class MeasureFormatError(SupportLabError, ValueError):
    """A serialized measure file cannot be parsed."""


class ConvergenceFailure(SupportLabError):
    """An iterative projector exceeded its sweep budget."""


class ResolutionNotMet(SupportLabError):
    """A Hausdorff bracket could not be tightened within its evaluation budget."""


class DegenerateShell(SupportLabError):
    """Rejection sampling of a parallel shell accepted no point."""


class IllConditioned(SupportLabError):
    """The Vandermonde-type extraction system has an unacceptable residual."""


class FaceEnumerationOverflow(SupportLabError):
    """A polytope exceeds the vertex or dimension cap of the face enumerator."""


class TooManyAtoms(SupportLabError):
    """A d_bL instance exceeds the configured atom cap."""


class SolverStall(SupportLabError):
    """The simplex iteration guard tripped."""


class Infeasible(SupportLabError):
    """The linear program has no feasible point."""


class Unbounded(SupportLabError):
    """The linear program objective is unbounded."""


class WitnessInfeasible(SupportLabError):
    """A Lipschitz witness failed the independent feasibility re-check."""


class QuadratureMismatch(SupportLabError):
    """Closed form and quadrature paths disagree beyond tolerance."""


class QuadratureFailure(SupportLabError):
    """An adaptive quadrature did not reach its tolerance."""


class LadderNotShrinking(SupportLabError):
    """A perturbation ladder is not strictly decreasing in scale or in Hausdorff distance."""


class InequalityViolation(SupportLabError):
    """An experiment inequality is violated beyond its error bars."""
