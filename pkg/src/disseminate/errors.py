"""Exception types shared across the toolkit.

Each maps to a CLI exit code: ConfigError -> 2, NumericFailureError and any
other runtime failure -> 3, PopulationOverflowError -> 4.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown key, type mismatch, or domain violation."""


class NumericFailureError(RuntimeError):
    """A numerical routine could not reach the requested accuracy.

    Carries the last reliable state so callers can report where the
    integration broke down.
    """

    def __init__(self, message, t=None, value=None):
        super().__init__(message)
        self.t = t
        self.value = value


class PopulationOverflowError(RuntimeError):
    """Particle or individual count exceeded the feasible-simulation cap.

    Raised instead of attempting runs whose cost grows exponentially; the
    mass-rescaled superprocess approximation (`disseminate sbm`, with
    resampling) is the intended tool at that scale.
    """
