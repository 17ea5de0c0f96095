"""Exception types raised across the package."""


class So3TrackError(Exception):
    """Base class for all package errors."""


class NonSkewInput(So3TrackError, ValueError):
    pass


class NonUnitAxis(So3TrackError, ValueError):
    pass


class DegenerateInput(So3TrackError, ValueError):
    pass


class SingularInertia(So3TrackError, ValueError):
    pass


class DegenerateInitialError(So3TrackError, ValueError):
    """Shifting requested for an initial attitude that already equals the reference."""


class InvariantViolation(So3TrackError, ValueError):
    pass


class InvalidGains(So3TrackError, ValueError):
    pass


class ConfigError(So3TrackError, ValueError):
    pass


class NumericalDivergence(So3TrackError, RuntimeError):
    """Simulation produced NaN/inf or an exploding state.

    Attributes:
        t: simulation time at which the divergence was detected.
    """

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t
