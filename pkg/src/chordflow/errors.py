"""Exception hierarchy shared by every chordflow module."""


class ChordflowError(Exception):
    """Base class for all library errors."""


class IntegrationError(ChordflowError):
    """The ODE integrator could not reach the requested time."""

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (integration stopped at t={t_reached:.17g})")
        self.t_reached = t_reached


class RootFindError(ChordflowError):
    """A Newton iteration did not converge."""


class CausticError(ChordflowError):
    """A semiclassical quantity is singular at this configuration."""


class DegenerateCenterError(ChordflowError):
    """Infinitely many chords (or a zero-radius center) at the requested point."""


class DomainError(ChordflowError, ValueError):
    """Input outside the domain of an operation."""


class PreconditionError(ChordflowError, ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TruncationError(ChordflowError):
    """A Fock-space expansion does not fit in the requested basis size."""


class ConfigError(ChordflowError, ValueError):
    """Malformed or inconsistent run configuration."""
