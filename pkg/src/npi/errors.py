"""Exception types shared across the package.

Each failure mode the command line distinguishes gets its own class so
exit codes can be mapped without string matching.
"""


class NPIError(Exception):
    """Base class for package errors."""


class ConfigError(NPIError):
    """Malformed or inconsistent specification (bad axis, bad bounds, ...)."""


class GateError(NPIError):
    """A hypothesis required by a bound is violated.

    The message names the violated condition, e.g. ``nu_delta < 1``.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = f"gate violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InequalityViolation(NPIError):
    """A verified inequality failed — build-breaking if it ever fires."""


class ResolutionError(NPIError):
    """The requested computation cannot be trusted at this resolution."""
