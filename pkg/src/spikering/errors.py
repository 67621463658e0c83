"""Exception hierarchy shared by all modules."""


class SpikeRingError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpecError(SpikeRingError, ValueError):
    """An influence specification has a parameter outside its range."""


class UsageError(SpikeRingError, ValueError):
    """A function was called with arguments violating its precondition."""


class UnsupportedOperationError(SpikeRingError):
    """The operation is not defined for this influence family."""


class InternalInvariantError(SpikeRingError, RuntimeError):
    """The engine detected a broken model invariant (e.g. overtaking)."""


class BracketError(SpikeRingError):
    """The fixed-point residual does not change sign on the bracket.

    ``report`` carries the admissibility report of the offending spec.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ScenarioError(SpikeRingError, ValueError):
    """Scenario validation failed; ``errors`` is a list of (json_pointer, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{ptr or '/'}: {msg}" for ptr, msg in self.errors]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))
