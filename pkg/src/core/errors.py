from typing import Optional


class DecayError(Exception):
    """Base class for every failure raised by csdecay."""


class DomainError(DecayError, ValueError):
    """An input lies outside the domain of the requested operation."""


class CapabilityError(DecayError):
    """The request is valid physics but beyond what this method can certify."""


class SolverError(DecayError):
    def __init__(self, message: str, last_good_time: Optional[float] = None):
        super().__init__(message)
        self.last_good_time = last_good_time


class IntegrityError(DecayError):
    """A computed trajectory broke one of its invariants."""


class UsageError(DecayError):
    """Bad command-line configuration (exit code 2)."""
