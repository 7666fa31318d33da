"""Exception types shared across the package."""


class TraceLabError(Exception):
    """Base class for all tracelab errors."""


class DegenerateChart(TraceLabError):
    """Chart derivative lost rank at a parameter point."""


class OrientationMismatch(TraceLabError):
    """Wedge-product normal points out of the domain (chart ordering bug)."""


class OutOfTube(TraceLabError):
    """Requested normal offset exceeds the tube thickness."""


class NonPositiveJacobian(TraceLabError):
    """Tube Jacobian is not positive; the thickness exceeds the reach."""


class NoConvergence(TraceLabError):
    """An iterative solver failed to converge."""


class QuadratureFailure(TraceLabError):
    """Adaptive quadrature exceeded its subdivision depth."""


class UnsupportedRegion(TraceLabError):
    """Region has neither a closed form nor a usable parameterization."""


class EpsilonTooLarge(TraceLabError):
    """Layer thickness too large for the domain's reach."""


class BadRadii(TraceLabError):
    """Radial parameters violate 0 <= a < b (or a = 0 where excluded)."""


class OutOfInterval(TraceLabError):
    """Evaluation point lies outside [a, b]."""


class WrongDomain(TraceLabError):
    """Operation requires a ball or annulus domain."""


class PatchExceeded(TraceLabError):
    """Family parameter leaves the local boundary patch."""


class EmptyFamily(TraceLabError):
    """Family sweep contains no members."""


class NonPositiveData(TraceLabError):
    """Log-log fit received too few positive data pairs."""


class DeltaTooLarge(TraceLabError):
    """Shell width too large for the domain's reach."""


class MeshFailure(TraceLabError):
    """Mesh generation produced an invalid triangulation."""


class LPInfeasible(TraceLabError):
    """Linear program reported infeasible (constraint assembly bug)."""


class ConfigError(TraceLabError):
    """Invalid experiment configuration; message names the offending key."""


class DomainError(TraceLabError):
    """Argument outside the mathematical domain of a formula."""
