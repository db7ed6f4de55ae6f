"""Custom exceptions for the simulator."""

from typing import Optional


class ApplicationError(Exception):
    """Base exception for the application."""

    pass


class ConfigError(ApplicationError):
    """Exception raised when configuration is invalid or missing."""

    pass


class ValidationError(ApplicationError):
    """Exception raised when inputs violate a precondition."""

    pass


class BlockNotInSpace(ValidationError):
    """Exception raised when a total-spin block j does not exist for N spins."""

    pass


class NoDarkState(ApplicationError):
    """Exception raised when the spin Bogoliubov operator has no kernel (odd N)."""

    pass


class UnstableDrive(ValidationError):
    """Exception raised when the parametric drive exceeds the cavity detuning."""

    pass


class IntegrationFailure(ApplicationError):
    """Exception raised when a trajectory leaves its numerical tolerance band."""

    def __init__(self, message: str, worst_time: Optional[float] = None):
        super().__init__(message)
        self.worst_time = worst_time


class PositivityFailure(IntegrationFailure):
    """Exception raised when a density matrix block becomes non-positive."""

    pass


class RefusedSize(ValidationError):
    """Exception raised when a brute-force problem is too large to build."""

    pass


class MeanSpinVanished(ApplicationError):
    """Exception raised when the mean spin is zero and xi_R^2 is undefined."""

    pass


class OptimumUnbounded(ApplicationError):
    """Exception raised when a closed-form optimum does not exist."""

    pass


class TruncationWarning(UserWarning):
    """Warning emitted when the Fock cutoff is too small for a trajectory."""

    pass
