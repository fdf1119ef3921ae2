"""Exception types raised across the package."""


class DFToricError(Exception):
    """Base class for all library errors."""


class DomainViolation(DFToricError, ValueError):
    """A point lies outside the domain of a potential or map."""


class NotInDualDomain(DFToricError, ValueError):
    """Gradient-map inversion failed: the target is not in the image of grad."""


class SingularHessian(DFToricError, ArithmeticError):
    """Hessian too ill-conditioned to invert reliably."""


class SingularOmega(DFToricError, ArithmeticError):
    """The symplectic form is degenerate at the requested point."""


class OutcomeNotInSpace(DFToricError, KeyError):
    pass


class ThetaOutOfDomain(DomainViolation):
    pass


class TruncationNotConverged(DFToricError, RuntimeError):
    pass


class InfiniteSampleSpace(DFToricError, ValueError):
    pass


class NotToric(DFToricError, ValueError):
    """The family admits no torification (e.g. normal with known variance)."""


class UnsupportedTarget(DFToricError, ValueError):
    pass


class DimensionTooLarge(DFToricError, ValueError):
    pass


class FactorizationMismatch(DFToricError, ValueError):
    pass


class NoWitnessFound(DFToricError, LookupError):
    pass
