"""Exception types shared across the solver stack."""


class DomainError(ValueError):
    """A parameter lies outside the admissible range of a closed form."""


class NewtonDiverged(RuntimeError):
    """Newton iteration failed to reach tolerance; the time step is too large."""


class PositivityLost(RuntimeError):
    """An implicit step produced a nonpositive nodal value."""


class TimeStepUnderflow(RuntimeError):
    """Adaptive stepping drove dt below dt_min; carries a diagnostic dump."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}


class BracketViolation(RuntimeError):
    """Extrapolated extinction time left the analytic bracket."""


class UnboundedOrbit(RuntimeError):
    """Phase-plane integration escaped the bounded-orbit region."""


class NoCandidateFits(RuntimeError):
    """No stationary profile matched the terminal field."""


class InsufficientData(RuntimeError):
    """Too few samples for a convergence-rate fit."""
