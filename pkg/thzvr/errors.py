"""Exception hierarchy shared by every simulator module."""


class ThzVrError(Exception):
    """Base class for simulator errors."""


class ConfigError(ThzVrError, ValueError):
    """Invalid configuration value or parameter outside its allowed range."""


class DomainError(ThzVrError, ValueError):
    """Numeric domain violation (non-positive distance, shape mismatch, ...)."""


class ContractViolation(ThzVrError):
    """A caller broke an operation's precondition."""


class SimulationError(ThzVrError):
    """A slot phase failed; the episode is aborted."""

    def __init__(self, slot, phase, cause):
        self.slot = slot
        self.phase = phase
        self.cause = cause
        super().__init__(f"slot {slot}: phase '{phase}' failed: {cause!r}")
