"""Dissipative squeezing optimization over E_beta, lambda and protocol time."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize
from tqdm import tqdm

from src.config import Settings, settings
from src.domain.exceptions import ApplicationError, ConfigError, OptimumUnbounded
from src.domain.models import (
    EffectiveParams,
    IntegratorOptions,
    ModelSection,
    PowerLawFit,
    RunConfig,
    SweepRow,
    SweepSection,
)
from src.domain.states import BlockDensityMatrix, SpinSpace
from src.physics.collective_spin import coherent_spin_state
from src.physics.dynamics import effective_block_model, evolve_lindblad
from src.physics.linearized import optimal_e_beta
from src.physics.metrics import squeezing_trace, xi_r2
from src.physics.model_builder import ITAT_RATIO, bogoliubov_from_drive, drive_for_ratio

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "series",
    "n_spins",
    "cooperativity",
    "lambda_ratio",
    "best_delta_s",
    "best_xi2",
    "best_e_beta",
    "best_time",
    "converged",
    "status",
    "error",
]


def series_name(ratio: float) -> str:
    if ratio == 0.0:
        return "oat"
    if math.isclose(abs(ratio), ITAT_RATIO, rel_tol=1e-12):
        return "itat"
    return f"lambda={ratio:.6g}"


class SweepTask(NamedTuple):
    """One (N, series) optimization; picklable for the worker pool."""

    index: int
    series: str
    n_spins: int
    candidates: Tuple[Tuple[float, float], ...]  # (lambda/delta_c, delta_s/chi)
    model: ModelSection
    sweep: SweepSection
    opts: IntegratorOptions


class Candidate(NamedTuple):
    xi2: float
    time: float
    converged: bool


@dataclass
class SweepResult:
    """Sorted sweep rows, per-series power-law fits and the completeness flag."""

    rows: List[SweepRow]
    fits: List[PowerLawFit] = field(default_factory=list)
    incomplete: bool = False
    warnings: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=SWEEP_COLUMNS)

    def fit_for(self, series: str) -> Optional[PowerLawFit]:
        return next((f for f in self.fits if f.series == series), None)


def _finite(value: float) -> float:
    return value if math.isfinite(value) else math.inf


class PointOptimizer:
    """Best xi^2 over protocol time for one drive, then over E_beta."""

    def __init__(self, task: SweepTask):
        self.task = task
        self.space = SpinSpace(task.n_spins)
        self.psi0 = BlockDensityMatrix.from_pure(self.space, coherent_spin_state(self.space))

    def params(self, e_beta: float, ratio: float, delta_s_factor: float) -> EffectiveParams:
        model = self.task.model
        delta_c, lam = drive_for_ratio(e_beta, ratio)
        return bogoliubov_from_drive(
            delta_c,
            lam,
            delta_s=delta_s_factor * model.g**2 / e_beta,
            g=model.g,
            kappa=model.kappa,
            gamma_phi=model.gamma_phi,
            n_spins=self.task.n_spins,
        )

    def best_in_time(self, params: EffectiveParams) -> Candidate:
        """
        Coarse grid over (0, t_max / (N chi_tilde)] then golden-section refinement.

        The refinement restarts from the stored state at the left bracket point.
        A minimum on the grid boundary is reported as not converged.
        """
        sweep = self.task.sweep
        block_model = effective_block_model(self.space, params)
        t_end = sweep.t_max / (self.task.n_spins * params.chi_tilde)
        times = np.linspace(0.0, t_end, sweep.n_times)
        trajectory = evolve_lindblad(block_model, rho0=self.psi0, times=times, opts=self.task.opts)
        values = np.array([_finite(v) for v in squeezing_trace(times, trajectory.states).xi2])
        values[0] = math.inf
        k = int(np.argmin(values))
        if k == len(times) - 1:
            return Candidate(float(values[k]), float(times[k]), False)
        if not sweep.refine or k == 0:
            return Candidate(float(values[k]), float(times[k]), k > 0)

        start, origin = trajectory.states[k - 1], times[k - 1]

        def objective(t: float) -> float:
            if t <= origin:
                return float(values[k - 1])
            segment = evolve_lindblad(
                block_model, rho0=start, times=np.array([origin, t]), opts=self.task.opts
            )
            try:
                return _finite(xi_r2(segment.final))
            except ApplicationError:
                return math.inf

        bracket = (times[k - 1], times[k], times[k + 1])
        try:
            result = optimize.minimize_scalar(
                objective, bracket=bracket, method="golden", options={"xtol": 1e-4}
            )
        except ValueError:
            return Candidate(float(values[k]), float(times[k]), True)
        if result.fun < values[k]:
            return Candidate(float(result.fun), float(result.x), True)
        return Candidate(float(values[k]), float(times[k]), True)

    def e_beta_grid(self) -> Tuple[float, np.ndarray]:
        """
        Log grid in E_beta centred on the linearized optimum.

        The grid spans seed / e_beta_seed_span to seed * e_beta_seed_span, clipped to
        [e_beta_min_factor, e_beta_max_factor] * sqrt(N) g, and always contains the seed.
        Without a finite optimum the seed is the geometric centre of the bounds.

        Returns:
            Tuple of (seed, sorted grid)
        """
        model, sweep = self.task.model, self.task.sweep
        scale = math.sqrt(self.task.n_spins) * model.g
        lower, upper = sweep.e_beta_min_factor * scale, sweep.e_beta_max_factor * scale
        try:
            seed = optimal_e_beta(self.task.n_spins, model.g, model.kappa, model.gamma_phi)
        except OptimumUnbounded:
            seed = math.sqrt(lower * upper)
        seed = min(max(seed, lower), upper)
        grid = np.geomspace(
            max(lower, seed / sweep.e_beta_seed_span),
            min(upper, seed * sweep.e_beta_seed_span),
            sweep.e_beta_points,
        )
        return seed, np.unique(np.append(grid, seed))

    def optimize(self, ratio: float, delta_s_factor: float) -> Tuple[float, float, Candidate]:
        """Coarse log grid in E_beta around the linearized optimum, refined by golden section."""
        sweep = self.task.sweep
        _, grid = self.e_beta_grid()
        cache: Dict[float, Candidate] = {}

        def evaluate(log_e: float) -> Candidate:
            if log_e not in cache:
                params = self.params(math.exp(log_e), ratio, delta_s_factor)
                cache[log_e] = self.best_in_time(params)
            return cache[log_e]

        logs = np.log(grid)
        coarse = [evaluate(float(x)) for x in logs]
        k = int(np.argmin([c.xi2 for c in coarse]))
        best_log, best = float(logs[k]), coarse[k]
        interior = 0 < k < len(grid) - 1
        if sweep.refine and interior:
            try:
                result = optimize.minimize_scalar(
                    lambda x: evaluate(float(x)).xi2,
                    bracket=(logs[k - 1], logs[k], logs[k + 1]),
                    method="golden",
                    options={"xtol": 1e-3},
                )
                if result.fun < best.xi2:
                    best_log, best = float(result.x), evaluate(float(result.x))
            except ValueError:
                logger.debug(f"E_beta bracket rejected for N={self.task.n_spins}, ratio={ratio}")
        converged = interior and best.converged
        return math.exp(best_log), ratio, Candidate(best.xi2, best.time, converged)


def run_sweep_task(task: SweepTask) -> SweepRow:
    """Optimize one (N, series); errors become flagged rows."""
    model = task.model
    cooperativity = (
        task.n_spins * model.g**2 / (model.kappa * model.gamma_phi)
        if model.kappa > 0 and model.gamma_phi > 0
        else math.inf
    )
    try:
        optimizer = PointOptimizer(task)
        best: Optional[Tuple[float, float, float, Candidate]] = None
        for ratio, factor in task.candidates:
            e_beta, ratio, candidate = optimizer.optimize(ratio, factor)
            if best is None or candidate.xi2 < best[3].xi2:
                best = (e_beta, ratio, factor, candidate)
        e_beta, ratio, factor, candidate = best
        return SweepRow(
            series=task.series,
            n_spins=task.n_spins,
            lambda_ratio=ratio,
            cooperativity=cooperativity,
            best_xi2=candidate.xi2,
            best_e_beta=e_beta,
            best_time=candidate.time,
            best_delta_s=factor * model.g**2 / e_beta,
            converged=candidate.converged,
        )
    except Exception as e:
        logger.error(f"Sweep point N={task.n_spins} ({task.series}) failed: {str(e)}")
        return SweepRow(
            series=task.series,
            n_spins=task.n_spins,
            lambda_ratio=task.candidates[0][0],
            cooperativity=cooperativity,
            status="error",
            error=str(e),
        )


def fit_power_law(rows: Sequence[SweepRow], series: str) -> Optional[PowerLawFit]:
    """
    Least-squares fit of log xi^2 against log C over converged rows.

    Returns:
        PowerLawFit for xi^2 = a * C^(-b), or None with fewer than two usable rows
    """
    usable = [
        row
        for row in rows
        if row.series == series
        and row.status == "success"
        and row.converged
        and row.best_xi2 is not None
        and row.best_xi2 > 0
        and math.isfinite(row.cooperativity)
    ]
    if len(usable) < 2:
        return None
    log_c = np.log([row.cooperativity for row in usable])
    log_xi2 = np.log([row.best_xi2 for row in usable])
    slope, intercept = np.polyfit(log_c, log_xi2, 1)
    return PowerLawFit(
        series=series, a=float(np.exp(intercept)), b=float(-slope), n_points=len(usable)
    )


class SweepService:
    """Service running the sweep grid with an optional worker pool."""

    def __init__(self, app_settings: Optional[Settings] = None):
        """
        Initialize sweep service.

        Args:
            app_settings: Settings instance (defaults to the global settings)
        """
        self.settings = app_settings or settings

    def build_tasks(self, config: RunConfig) -> List[SweepTask]:
        """Expand the [sweep] section into one task per (series, N)."""
        if config.sweep is None:
            raise ConfigError("sweep: section is required")
        sweep, model = config.sweep, config.model
        opts = config.integrator.resolve(IntegratorOptions.for_lindblad())

        series: List[Tuple[str, Tuple[Tuple[float, float], ...]]] = [
            (series_name(ratio), tuple((ratio, f) for f in sweep.delta_s_factors))
            for ratio in sweep.lambda_ratios
        ]
        if sweep.optimize_lambda:
            grid = tuple((ratio, f) for ratio in sweep.lambda_grid for f in sweep.delta_s_factors)
            series.append(("optimized", grid))

        tasks = []
        for name, candidates in series:
            for n in sorted(sweep.n_values):
                tasks.append(
                    SweepTask(
                        index=len(tasks),
                        series=name,
                        n_spins=n,
                        candidates=candidates,
                        model=model.model_copy(update={"n_spins": n}),
                        sweep=sweep,
                        opts=opts,
                    )
                )
        return tasks

    def _execute(self, tasks: List[SweepTask], workers: int) -> Iterator[SweepRow]:
        if workers == 1:
            for task in tasks:
                yield run_sweep_task(task)
            return
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(run_sweep_task, tasks)

    def run(self, config: RunConfig, workers: Optional[int] = None) -> SweepResult:
        """
        Optimize every series over E_beta and time, then fit xi^2 = a C^(-b).

        Rows are merged in task order, so the table does not depend on the worker
        count. An interrupted sweep returns the finished rows flagged incomplete.

        Args:
            config: Run configuration with a [sweep] section
            workers: Requested worker processes (SPINSQ_THREADS overrides)

        Returns:
            SweepResult: Rows sorted by series then N, with fits

        Raises:
            ConfigError: If the sweep is not dissipative or has no [sweep] section
        """
        if config.model.kappa <= 0 or config.model.gamma_phi <= 0:
            raise ConfigError("model.kappa/model.gamma_phi: sweeps need both rates positive")
        tasks = self.build_tasks(config)
        workers = self.settings.resolve_workers(workers or config.sweep.workers)
        logger.info(f"Starting sweep: {len(tasks)} points on {workers} worker(s)")

        rows: Dict[int, SweepRow] = {}
        incomplete = False
        try:
            progress = tqdm(
                zip(tasks, self._execute(tasks, workers)),
                total=len(tasks),
                desc="Sweeping",
                unit="point",
            )
            for task, row in progress:
                rows[task.index] = row
        except KeyboardInterrupt:
            logger.warning(f"Sweep interrupted after {len(rows)}/{len(tasks)} points")
            incomplete = True

        ordered = [rows[i] for i in sorted(rows)]
        warnings = []
        if any(row.status == "error" for row in ordered):
            incomplete = True
            warnings.append("Some sweep points failed; see the error column")
        unconverged = [row for row in ordered if row.status == "success" and not row.converged]
        for row in unconverged:
            message = (
                f"N={row.n_spins} ({row.series}): "
                "optimum on the grid boundary, excluded from fit"
            )
            logger.warning(message)
            warnings.append(message)

        fits = []
        for name in dict.fromkeys(task.series for task in tasks):
            fit = fit_power_law(ordered, name)
            if fit is None:
                warnings.append(f"Series {name}: too few converged points for a fit")
                continue
            logger.info(
                f"Fit {name}: xi^2 = {fit.a:.4g} C^(-{fit.b:.4g}) over {fit.n_points} points"
            )
            fits.append(fit)

        logger.info(f"Sweep completed: {len(ordered)} rows, incomplete={incomplete}")
        return SweepResult(rows=ordered, fits=fits, incomplete=incomplete, warnings=warnings)
