"""Exception hierarchy shared by the package and mapped to CLI exit codes."""


class CamStableError(Exception):
    """Base class for package errors."""


class DomainError(CamStableError, ValueError):
    """Parameters or configuration outside the supported domain (exit code 2)."""


class RegimeError(DomainError):
    """CAM parameters outside the infinite-variance, finite-mean regime."""


class ConditionError(DomainError):
    """Violation of the partition conditions used by the scale estimator."""


class NumericalError(CamStableError, ArithmeticError):
    """A numerical procedure failed to converge or became unstable (exit code 3)."""


class InsufficientDataError(NumericalError):
    """Too few samples for a requested estimate."""


class MarcusDomainError(NumericalError):
    """A Marcus jump flow left the domain of the slow variable."""
