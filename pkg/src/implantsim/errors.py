"""Exception types shared across the toolkit."""


class ImplantSimError(Exception):
    """Base class for all errors raised by implantsim."""


class RangeError(ImplantSimError, ValueError):
    """An argument lies outside the supported domain (frequency, depth, table range)."""


class ConfigurationError(ImplantSimError, ValueError):
    """A configuration violates a stated invariant (Courant number, step size, grid)."""


class ConvergenceError(ImplantSimError, RuntimeError):
    """A time-domain run did not reach steady state."""


class DesignError(ImplantSimError, ValueError):
    """A matching network cannot be realised for the requested target."""


class PreconditionError(ImplantSimError, RuntimeError):
    """An operation was called on a state that does not allow it."""


class ValidationError(ImplantSimError, ValueError):
    """One or more scenario/config violations, all reported at once."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) if self.violations else "invalid input")
