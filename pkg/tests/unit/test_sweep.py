"""Tests for the sweep service."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from src.domain.exceptions import ConfigError
from src.domain.models import (
    IntegratorOptions,
    ModelSection,
    RunConfig,
    SweepRow,
    SweepSection,
)
from src.physics.linearized import optimal_e_beta
from src.services.sweep import (
    SWEEP_COLUMNS,
    Candidate,
    PointOptimizer,
    SweepService,
    SweepTask,
    fit_power_law,
    run_sweep_task,
    series_name,
)


@pytest.fixture
def sweep_config():
    return RunConfig(
        model=ModelSection(n_spins=4, kappa=10.0, gamma_phi=0.02),
        sweep=SweepSection(n_values=[20, 10], lambda_ratios=[0.0, 1.0 / 3.0]),
    )


@pytest.fixture
def sweep_service(test_settings):
    return SweepService(test_settings)


def _row(series, n, xi2, converged=True, status="success"):
    return SweepRow(
        series=series,
        n_spins=n,
        lambda_ratio=0.0,
        cooperativity=float(n),
        best_xi2=xi2,
        converged=converged,
        status=status,
    )


def test_series_name():
    assert series_name(0.0) == "oat"
    assert series_name(1.0 / 3.0) == "itat"
    assert series_name(-1.0 / 3.0) == "itat"
    assert series_name(0.25) == "lambda=0.25"


def test_fit_power_law_recovers_exponent():
    rows = [_row("itat", c, 3.0 * c**-0.5) for c in (1, 4, 16, 64)]
    rows.append(_row("itat", 256, 10.0, converged=False))
    rows.append(_row("itat", 512, None, status="error"))
    rows.append(_row("oat", 8, 0.1))

    fit = fit_power_law(rows, "itat")

    assert fit.a == pytest.approx(3.0)
    assert fit.b == pytest.approx(0.5)
    assert fit.n_points == 4


def test_fit_power_law_needs_two_points():
    assert fit_power_law([_row("oat", 10, 0.2)], "oat") is None


def test_build_tasks_orders_series_then_n(sweep_service, sweep_config):
    tasks = sweep_service.build_tasks(sweep_config)

    assert [(t.series, t.n_spins) for t in tasks] == [
        ("oat", 10),
        ("oat", 20),
        ("itat", 10),
        ("itat", 20),
    ]
    assert [t.index for t in tasks] == [0, 1, 2, 3]
    assert tasks[1].model.n_spins == 20
    assert tasks[2].candidates == ((1.0 / 3.0, 1.0),)


def test_build_tasks_adds_optimized_series(sweep_service, sweep_config):
    config = sweep_config.model_copy(
        update={
            "sweep": sweep_config.sweep.model_copy(
                update={"optimize_lambda": True, "delta_s_factors": [0.5, 1.0]}
            )
        }
    )

    tasks = sweep_service.build_tasks(config)

    optimized = [t for t in tasks if t.series == "optimized"]
    assert len(optimized) == 2
    assert len(optimized[0].candidates) == 11 * 2
    ratios = {ratio for ratio, _ in optimized[0].candidates}
    assert max(ratios) == pytest.approx(0.9)
    assert 1.0 / 3.0 in ratios


def test_build_tasks_requires_sweep_section(sweep_service):
    with pytest.raises(ConfigError, match="sweep"):
        sweep_service.build_tasks(RunConfig(model=ModelSection(n_spins=4)))


def test_run_requires_both_rates(sweep_service, sweep_config):
    config = sweep_config.model_copy(
        update={"model": sweep_config.model.model_copy(update={"gamma_phi": 0.0})}
    )
    with pytest.raises(ConfigError, match="gamma_phi"):
        sweep_service.run(config)


def test_run_merges_rows_and_flags_failures(sweep_service, sweep_config):
    def fake_task(task):
        if task.series == "itat" and task.n_spins == 20:
            return _row("itat", 20, None, converged=False, status="error")
        return _row(task.series, task.n_spins, 2.0 * task.n_spins**-0.5)

    with patch("src.services.sweep.run_sweep_task", side_effect=fake_task):
        result = sweep_service.run(sweep_config, workers=1)

    frame = result.to_frame()
    assert list(frame.columns) == SWEEP_COLUMNS
    assert list(zip(frame["series"], frame["n_spins"])) == [
        ("oat", 10),
        ("oat", 20),
        ("itat", 10),
        ("itat", 20),
    ]
    assert result.incomplete is True
    assert result.fit_for("oat").b == pytest.approx(0.5)
    assert result.fit_for("itat") is None
    assert any("failed" in w for w in result.warnings)
    assert any("itat" in w and "too few" in w for w in result.warnings)


def test_run_reports_unconverged_points(sweep_service, sweep_config):
    def fake_task(task):
        return _row(task.series, task.n_spins, 0.5, converged=task.n_spins == 10)

    with patch("src.services.sweep.run_sweep_task", side_effect=fake_task):
        result = sweep_service.run(sweep_config, workers=1)

    assert result.incomplete is False
    assert result.fits == []
    assert any("N=20 (oat)" in w and "boundary" in w for w in result.warnings)


def _task(n_spins=4, **sweep):
    model = ModelSection(n_spins=n_spins, kappa=10.0, gamma_phi=0.02)
    return SweepTask(
        index=0,
        series="itat",
        n_spins=n_spins,
        candidates=((1.0 / 3.0, 1.0),),
        model=model,
        sweep=SweepSection(n_values=[n_spins], **sweep),
        opts=IntegratorOptions.for_lindblad(),
    )


def test_run_sweep_task_turns_errors_into_rows():
    with patch("src.services.sweep.PointOptimizer", side_effect=RuntimeError("boom")):
        row = run_sweep_task(_task(n_spins=5))

    assert row.status == "error"
    assert row.error == "boom"
    assert row.best_xi2 is None
    assert row.cooperativity == pytest.approx(5 / (10.0 * 0.02))


def test_best_in_time_finds_squeezing():
    optimizer = PointOptimizer(_task(n_spins=4, t_max=6.0, n_times=25))
    params = optimizer.params(20.0, 1.0 / 3.0, 1.0)

    candidate = optimizer.best_in_time(params)

    t_end = 6.0 / (4 * params.chi_tilde)
    assert 0 < candidate.xi2 < 1.0
    assert 0 < candidate.time <= t_end
    assert math.isfinite(candidate.xi2)


def test_point_params_follow_drive_ratio():
    optimizer = PointOptimizer(_task(n_spins=4))
    params = optimizer.params(20.0, 1.0 / 3.0, 0.5)

    assert params.kappa == 10.0
    assert params.gamma_phi == 0.02
    assert params.delta_s == pytest.approx(0.5 / 20.0)


def test_e_beta_grid_is_centred_on_linearized_optimum():
    optimizer = PointOptimizer(_task(n_spins=20, e_beta_points=5))

    seed, grid = optimizer.e_beta_grid()

    assert seed == pytest.approx(optimal_e_beta(20, 1.0, 10.0, 0.02))
    assert seed in grid
    assert grid[0] == pytest.approx(seed / 10.0)
    # seed * 10 lies above the 100 sqrt(N) g bound
    assert grid[-1] == pytest.approx(100.0 * math.sqrt(20))
    assert np.all(np.diff(grid) > 0)


def test_e_beta_grid_without_finite_optimum_spans_bounds():
    task = _task(n_spins=4)
    task = task._replace(model=task.model.model_copy(update={"kappa": 0.0}))

    seed, grid = PointOptimizer(task).e_beta_grid()

    assert seed == pytest.approx(10.0 * 2.0)
    assert grid[0] == pytest.approx(2.0)
    assert grid[-1] == pytest.approx(200.0)


def test_optimize_lands_near_the_seed():
    optimizer = PointOptimizer(_task(n_spins=20, e_beta_points=5))
    seed, _ = optimizer.e_beta_grid()
    evaluated = []

    def fake_best_in_time(params):
        evaluated.append(params.e_beta)
        return Candidate(0.1 + math.log(params.e_beta / (1.3 * seed)) ** 2, 1.0, True)

    with patch.object(optimizer, "best_in_time", side_effect=fake_best_in_time):
        e_beta, ratio, candidate = optimizer.optimize(1.0 / 3.0, 1.0)

    assert any(value == pytest.approx(seed, rel=1e-9) for value in evaluated)
    assert seed / 2 < e_beta < 2 * seed
    assert e_beta == pytest.approx(1.3 * seed, rel=1e-2)
    assert ratio == 1.0 / 3.0
    assert candidate.converged is True
