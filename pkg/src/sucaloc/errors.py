"""Exception hierarchy shared by all modules."""


class SucaError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(SucaError, ValueError):
    """A configuration object violates its invariants."""


class InvalidSceneError(SucaError, ValueError):
    """A scene cannot be simulated (e.g. a target inside the array circle)."""


class DomainError(SucaError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class QuadratureError(SucaError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientPeaksError(SucaError):
    """Fewer qualifying peaks were found than requested."""

    def __init__(self, requested, found):
        super().__init__(f"requested {requested} peaks but only {found} qualify")
        self.requested = requested
        self.found = found
