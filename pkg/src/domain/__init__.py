"""Domain models, array-backed states and exceptions."""

from src.domain.exceptions import (
    ApplicationError,
    BlockNotInSpace,
    ConfigError,
    IntegrationFailure,
    MeanSpinVanished,
    NoDarkState,
    OptimumUnbounded,
    PositivityFailure,
    RefusedSize,
    TruncationWarning,
    UnstableDrive,
    ValidationError,
)
from src.domain.models import (
    DriveParams,
    EffectiveParams,
    ExportResult,
    GateResult,
    IntegratorOptions,
    RunConfig,
)
from src.domain.states import (
    Basis,
    BlockDensityMatrix,
    Operator,
    PureState,
    SpinMoments,
    SpinOperators,
    SpinSpace,
    SqueezingTrace,
)

__all__ = [
    "ApplicationError",
    "BlockNotInSpace",
    "ConfigError",
    "IntegrationFailure",
    "MeanSpinVanished",
    "NoDarkState",
    "OptimumUnbounded",
    "PositivityFailure",
    "RefusedSize",
    "TruncationWarning",
    "UnstableDrive",
    "ValidationError",
    "DriveParams",
    "EffectiveParams",
    "ExportResult",
    "GateResult",
    "IntegratorOptions",
    "RunConfig",
    "Basis",
    "BlockDensityMatrix",
    "Operator",
    "PureState",
    "SpinMoments",
    "SpinOperators",
    "SpinSpace",
    "SqueezingTrace",
]
