"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for every error raised by the package."""


class DomainViolation(LabError, ValueError):
    """A point or parameter lies outside the admissible set."""


class MeshError(LabError, ValueError):
    pass


class LambertDomainError(DomainViolation):
    pass


class StripViolation(DomainViolation):
    pass


class ParameterError(LabError, ValueError):
    pass


class IterationFailure(LabError, RuntimeError):
    """Inverse iteration did not converge; ``bound`` is the last Rayleigh quotient."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class GateError(LabError):
    """The Hardy coefficient is not admissible for the requested operation."""


class SearchFailure(LabError, RuntimeError):
    pass


class DivergenceError(LabError, RuntimeError):
    """Newton iteration failed; ``trace`` holds the residual history."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class OverflowGuard(DivergenceError):
    pass


class BracketError(LabError, RuntimeError):
    pass


class ResolutionError(LabError, ValueError):
    pass


class InapplicableError(LabError, ValueError):
    pass
