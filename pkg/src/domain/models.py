"""Domain models using Pydantic for validation."""

import math
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.domain.exceptions import UnstableDrive

PresetKind = Literal["oat_z", "itat", "oat_y", "twist_and_turn", "custom"]
IntegratorMethod = Literal["adaptive_rk", "expm_krylov"]


class DriveParams(BaseModel):
    """Physical knobs of the rotating-frame model; frequencies in units of g."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_c: float
    delta_s: float = 0.0
    lambda_re: float = 0.0
    lambda_im: float = 0.0
    g: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=0.0, ge=0)
    gamma_phi: float = Field(default=0.0, ge=0)
    n_spins: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_stability(self):
        if abs(self.lambda_re) > abs(self.delta_c):
            raise UnstableDrive(
                f"|lambda|={abs(self.lambda_re)} exceeds |delta_c|={abs(self.delta_c)}"
            )
        return self

    @property
    def lam(self) -> complex:
        return complex(self.lambda_re, self.lambda_im)


class EffectiveParams(BaseModel):
    """Quantities derived from the drive by the Bogoliubov transformation."""

    model_config = ConfigDict(frozen=True)

    r: float
    e_beta: float
    chi: float
    chi_tilde: float
    delta_tilde: float
    gamma_big: float
    cooperativity: float

    # Inputs the derived fields were computed from.
    delta_c: float
    lambda_re: float
    delta_s: float
    g: float
    kappa: float
    gamma_phi: float
    n_spins: int

    @property
    def tanh_2r(self) -> float:
        return math.tanh(2 * self.r)

    @property
    def delta_s_cancelling(self) -> float:
        """Spin detuning that sets the linear Sz term to zero."""
        return self.chi


class IntegratorOptions(BaseModel):
    """Time-integration options shared by every evolution routine."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: IntegratorMethod = "adaptive_rk"
    rk_scheme: Literal["RK45", "DOP853"] = "DOP853"
    rtol: float = Field(default=1e-8, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    max_step: float = Field(default=math.inf, gt=0)
    block_floor: Optional[float] = Field(default=None, gt=0)

    @classmethod
    def for_pure(cls, **overrides) -> "IntegratorOptions":
        return cls(**{"rtol": 1e-8, "atol": 1e-10, **overrides})

    @classmethod
    def for_lindblad(cls, **overrides) -> "IntegratorOptions":
        return cls(**{"rtol": 1e-6, "atol": 1e-9, **overrides})

    def tightened(self, factor: float = 10.0) -> "IntegratorOptions":
        return self.model_copy(update={"rtol": self.rtol / factor, "atol": self.atol / factor})


class ModelSection(BaseModel):
    """``[model]`` section of a run configuration."""

    model_config = ConfigDict(extra="forbid")

    n_spins: int = Field(ge=1)
    g: float = Field(default=1.0, gt=0)
    e_beta: float = Field(default=20.0, gt=0)
    lambda_ratio: Optional[float] = Field(default=None, gt=-1, lt=1)
    delta_s: Optional[float] = None
    kappa: float = Field(default=0.0, ge=0)
    gamma_phi: float = Field(default=0.0, ge=0)
    fock_cutoff: Optional[int] = Field(default=None, ge=2)


class ProtocolSection(BaseModel):
    """``[protocol]`` section: which protocol runs and on what grid."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "adiabatic"] = "constant"
    preset: PresetKind = "itat"
    lambda_sign: Literal[1, -1] = 1
    shift_dispersive_mean: bool = False
    r: Optional[float] = Field(default=None, ge=0)
    initial_state: Optional[Literal["plus_x", "down_z"]] = None
    echo: bool = True
    dissipation: bool = False
    dispersive: bool = False
    # Constant drive: final time in units of 1/(N chi_tilde).
    t_final: float = Field(default=5.0, gt=0)
    n_times: int = Field(default=201, ge=2)
    # Adiabatic ramp: final squeeze parameter and duration in units of 1/chi.
    r_f: float = Field(default=4.0, ge=0)
    tau_prot: float = Field(default=60.0, gt=0)
    n_steps: int = Field(default=20000, ge=10)


class IntegratorSection(BaseModel):
    """``[integrator]`` section; unset fields keep the protocol defaults."""

    model_config = ConfigDict(extra="forbid")

    method: Optional[IntegratorMethod] = None
    rk_scheme: Optional[Literal["RK45", "DOP853"]] = None
    rtol: Optional[float] = Field(default=None, gt=0)
    atol: Optional[float] = Field(default=None, gt=0)
    max_step: Optional[float] = Field(default=None, gt=0)
    block_floor: Optional[float] = Field(default=None, gt=0)

    def resolve(self, defaults: IntegratorOptions) -> IntegratorOptions:
        overrides = self.model_dump(exclude_none=True)
        return defaults.model_copy(update=overrides)


class SweepSection(BaseModel):
    """``[sweep]`` section for the dissipative optimization."""

    model_config = ConfigDict(extra="forbid")

    n_values: List[int] = Field(default_factory=lambda: [10, 20, 30, 40])
    lambda_ratios: List[float] = Field(default_factory=lambda: [0.0, 1.0 / 3.0])
    e_beta_points: int = Field(default=9, ge=3)
    e_beta_min_factor: float = Field(default=1.0, gt=0)
    e_beta_max_factor: float = Field(default=100.0, gt=0)
    e_beta_seed_span: float = Field(default=10.0, gt=1)
    t_max: float = Field(default=20.0, gt=0)
    n_times: int = Field(default=81, ge=3)
    refine: bool = True
    optimize_lambda: bool = False
    # alpha = lambda / delta_c from 0 to 0.9 in steps of 0.1, plus the ITAT ratio
    lambda_grid: List[float] = Field(
        default_factory=lambda: sorted([round(0.1 * k, 1) for k in range(10)] + [1.0 / 3.0])
    )
    delta_s_factors: List[float] = Field(default_factory=lambda: [1.0])
    workers: int = Field(default=1, ge=1)

    @field_validator("lambda_ratios", "lambda_grid")
    @classmethod
    def _check_ratios(cls, values: List[float]) -> List[float]:
        for value in values:
            if not -1 < value < 1:
                raise ValueError(f"lambda/delta_c ratio must lie in (-1, 1), got {value}")
        return values

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.e_beta_min_factor >= self.e_beta_max_factor:
            raise ValueError("e_beta_min_factor must be below e_beta_max_factor")
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        return self


class OutputSection(BaseModel):
    """``[output]`` section."""

    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = None
    stem: str = "trace"


class RunConfig(BaseModel):
    """A complete, validated run description."""

    model_config = ConfigDict(extra="forbid")

    model: ModelSection
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    integrator: IntegratorSection = Field(default_factory=IntegratorSection)
    sweep: Optional[SweepSection] = None
    output: OutputSection = Field(default_factory=OutputSection)


class SweepRow(BaseModel):
    """Best squeezing found for one (N, series) sweep point."""

    series: str
    n_spins: int
    lambda_ratio: float
    cooperativity: float
    best_xi2: Optional[float] = None
    best_e_beta: Optional[float] = None
    best_time: Optional[float] = None
    best_delta_s: Optional[float] = None
    converged: bool = False
    status: Literal["success", "error"] = "success"
    error: Optional[str] = None


class PowerLawFit(BaseModel):
    """Least-squares fit of xi^2 = a * C^(-b)."""

    series: str
    a: float
    b: float
    n_points: int


class GateResult(BaseModel):
    """Outcome of one verification gate."""

    name: str
    passed: bool
    max_error: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class ExportResult(BaseModel):
    """Represents a written result file."""

    kind: str
    filepath: str
    size_bytes: int
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class ResultBundle(BaseModel):
    """Everything persisted for one run."""

    schema_version: str
    package_version: str
    config: Dict[str, Any]
    summary: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    integrator_stats: Dict[str, Any] = Field(default_factory=dict)
    wall_clock_s: float = 0.0
    incomplete: bool = False
    trace_path: Optional[str] = None
    summary_path: Optional[str] = None
