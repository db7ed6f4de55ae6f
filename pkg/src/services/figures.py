"""Plot-ready datasets for the coherent, dissipative and adiabatic figures."""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from tqdm import tqdm

from src.adapters.config_loader import write_run_config
from src.domain.exceptions import ApplicationError, ConfigError
from src.domain.models import (
    ModelSection,
    OutputSection,
    ProtocolSection,
    RunConfig,
    SweepSection,
)
from src.physics.linearized import min_xi2
from src.physics.schedules import RampSchedule
from src.services.export import ExportService, build_bundle
from src.services.protocols import ProtocolService
from src.services.sweep import SweepService

logger = logging.getLogger(__name__)

Scale = Literal["desk", "smoke"]

FIGURES = ("2", "3", "4")

# N for the coherent and adiabatic figures per scale
COHERENT_N = {"desk": 200, "smoke": 20}
ADIABATIC_N = {"desk": 100, "smoke": 10}
SWEEP_N = {"desk": [10, 20, 30, 40], "smoke": [4, 6]}


def coherent_configs(scale: Scale) -> Dict[str, RunConfig]:
    """Constant-drive curves from +x: OAT, ITAT and off-optimal lambda, echo on and off."""
    n = COHERENT_N[scale]

    def config(name: str, preset: str, ratio: Optional[float] = None, **flags) -> RunConfig:
        return RunConfig(
            model=ModelSection(n_spins=n, e_beta=20.0, lambda_ratio=ratio),
            protocol=ProtocolSection(preset=preset, t_final=12.0, n_times=401, **flags),
            output=OutputSection(stem=f"fig2_{name}"),
        )

    curves = [
        config("oat", "oat_z"),
        config("itat", "itat"),
        config("lambda_0.02", "custom", ratio=0.02),
        config("lambda_0.92", "custom", ratio=0.92),
        config("itat_dispersive_echo", "itat", dispersive=True),
        config("itat_dispersive_no_echo", "itat", dispersive=True, echo=False),
    ]
    return {c.output.stem.removeprefix("fig2_"): c for c in curves}


def sweep_config(scale: Scale) -> RunConfig:
    """kappa = 10 g, gamma_phi = 0.02 g sweep over OAT, ITAT and the lambda-optimized series."""
    n_values = SWEEP_N[scale]
    return RunConfig(
        model=ModelSection(n_spins=n_values[0], kappa=10.0, gamma_phi=0.02),
        sweep=SweepSection(
            n_values=n_values,
            lambda_ratios=[0.0, 1.0 / 3.0],
            optimize_lambda=True,
            e_beta_points=9 if scale == "desk" else 5,
            n_times=81 if scale == "desk" else 41,
        ),
        output=OutputSection(stem="fig3_sweep"),
    )


def pulse_frame(config: RunConfig, n_points: int = 201) -> pd.DataFrame:
    """Drive schedule of an adiabatic configuration."""
    protocol, model = config.protocol, config.model
    schedule = RampSchedule.in_chi_units(protocol.r_f, protocol.tau_prot, model.e_beta, model.g)
    return schedule.pulse_table(n_points)


def adiabatic_configs(scale: Scale) -> Dict[str, RunConfig]:
    """Dark-state ramps: even N at chi tau = 60 and 10, odd N at chi tau = 60."""
    n = ADIABATIC_N[scale]

    def config(name: str, n_spins: int, tau: float) -> RunConfig:
        return RunConfig(
            model=ModelSection(n_spins=n_spins, e_beta=20.0),
            protocol=ProtocolSection(kind="adiabatic", r_f=4.0, tau_prot=tau),
            output=OutputSection(stem=f"fig4_{name}"),
        )

    return {
        "even_tau60": config("even_tau60", n, 60.0),
        "even_tau10": config("even_tau10", n, 10.0),
        "odd_tau60": config("odd_tau60", n + 1, 60.0),
    }


class FiguresService:
    """Service emitting figure datasets and a manifest of the configs behind every curve."""

    def __init__(
        self,
        protocol_service: Optional[ProtocolService] = None,
        sweep_service: Optional[SweepService] = None,
        export_service: Optional[ExportService] = None,
    ):
        """
        Initialize figures service.

        Args:
            protocol_service: Protocol service (defaults to new instance)
            sweep_service: Sweep service (defaults to new instance)
            export_service: Export service (defaults to new instance)
        """
        self.protocol_service = protocol_service or ProtocolService()
        self.sweep_service = sweep_service or SweepService()
        self.export_service = export_service or ExportService()

    @property
    def output_dir(self) -> Path:
        return self.export_service.output_dir

    def emit(
        self, which: str, scale: Scale = "desk", workers: Optional[int] = None
    ) -> Dict[str, Any]:
        """
        Run every curve of one figure and write its tables, configs and manifest.

        Args:
            which: "2", "3" or "4"
            scale: desk (documented substitutions) or smoke (tiny, for tests)
            workers: Worker processes for the sweep figure

        Returns:
            Manifest dictionary (also written to fig<which>_manifest.json)

        Raises:
            ConfigError: If the figure is unknown
            ApplicationError: If a curve fails
        """
        if which not in FIGURES:
            raise ConfigError(f"--which: expected one of {', '.join(FIGURES)}, got {which}")
        logger.info(f"Emitting figure {which} datasets at {scale} scale")
        if which == "2":
            curves = self._run_curves(coherent_configs(scale))
        elif which == "3":
            curves = self._run_sweep(sweep_config(scale), workers)
        else:
            curves = self._run_curves(adiabatic_configs(scale))
            curves.append(self._pulse_table(adiabatic_configs(scale)["even_tau60"]))

        manifest = {"figure": which, "scale": scale, "curves": curves}
        self.export_service.export_json(manifest, f"fig{which}_manifest.json", kind="manifest")
        return manifest

    def _write_config(self, config: RunConfig) -> str:
        path = self.output_dir / "configs" / f"{config.output.stem}.json"
        return str(write_run_config(config, path))

    def _run_curves(self, configs: Dict[str, RunConfig]) -> List[Dict[str, Any]]:
        curves = []
        for name, config in tqdm(configs.items(), desc="Curves", unit="curve"):
            try:
                start = time.perf_counter()
                result = self.protocol_service.run(config)
                bundle = build_bundle(
                    config,
                    result.summary,
                    warnings=result.warnings,
                    integrator_stats=result.stats,
                    wall_clock_s=time.perf_counter() - start,
                )
                exports = self.export_service.export_result(
                    result.to_frame(), bundle, config.output.stem
                )
                curves.append(
                    {
                        "curve": name,
                        "config": self._write_config(config),
                        "table": exports[0].filepath,
                        "summary": exports[1].filepath,
                        "min_xi2": result.summary.get("min_xi2"),
                        "final_xi2": result.summary.get("final_xi2"),
                    }
                )
            except Exception as e:
                logger.error(f"Curve {name} failed: {str(e)}")
                raise ApplicationError(f"Curve {name} failed: {str(e)}") from e
        return curves

    def _run_sweep(self, config: RunConfig, workers: Optional[int]) -> List[Dict[str, Any]]:
        start = time.perf_counter()
        result = self.sweep_service.run(config, workers=workers)
        frame = result.to_frame()
        model = config.model
        frame["linearized_xi2"] = [
            min_xi2(n, model.g, model.kappa, model.gamma_phi) for n in frame["n_spins"]
        ]
        summary = {"fits": [fit.model_dump() for fit in result.fits]}
        bundle = build_bundle(
            config,
            summary,
            warnings=result.warnings,
            wall_clock_s=time.perf_counter() - start,
            incomplete=result.incomplete,
        )
        exports = self.export_service.export_result(frame, bundle, config.output.stem, kind="sweep")
        config_path = self._write_config(config)
        curves = [
            {
                "curve": name,
                "config": config_path,
                "table": exports[0].filepath,
                "summary": exports[1].filepath,
                "filter": {"series": name},
            }
            for name in dict.fromkeys(frame["series"])
        ]
        curves.append(
            {
                "curve": "linearized",
                "config": config_path,
                "table": exports[0].filepath,
                "column": "linearized_xi2",
            }
        )
        return curves

    def _pulse_table(self, config: RunConfig) -> Dict[str, Any]:
        table = self.export_service.export_frame(
            pulse_frame(config), "fig4_pulse.csv", kind="pulse"
        )
        return {"curve": "pulse", "config": self._write_config(config), "table": table.filepath}
