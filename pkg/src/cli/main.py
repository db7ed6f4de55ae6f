"""Command-line interface for the spin-squeezing simulator."""

import argparse
import logging
import sys
import time
from typing import List, Optional

import numpy as np
import pandas as pd

from src import __version__
from src.adapters.config_loader import load_run_config
from src.config import Settings, settings
from src.domain.exceptions import ApplicationError, ConfigError, NoDarkState
from src.domain.models import RunConfig
from src.domain.states import SpinSpace
from src.physics.collective_spin import dark_state, magnetizations
from src.physics.linearized import (
    itat_params,
    linearized_xi2,
    min_xi2,
    moment_ode_solve,
    optimal_e_beta,
)
from src.physics.metrics import to_db, xi_r2
from src.services.export import ExportService, build_bundle
from src.services.figures import FIGURES, FiguresService, pulse_frame
from src.services.protocols import ProtocolService
from src.services.sweep import SweepService
from src.services.verification import VerificationService, all_passed, dark_state_residual

# Configure logging
logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class CLIApplication:
    """Main CLI application."""

    def __init__(
        self,
        app_settings: Optional[Settings] = None,
        protocol_service: Optional[ProtocolService] = None,
        sweep_service: Optional[SweepService] = None,
        verification_service: Optional[VerificationService] = None,
    ):
        """Initialize CLI application with services."""
        self.settings = app_settings or settings
        self.protocol_service = protocol_service or ProtocolService(self.settings)
        self.sweep_service = sweep_service or SweepService(self.settings)
        self.verification_service = verification_service or VerificationService(self.settings)

    def _export_service(
        self, out: Optional[str], config: Optional[RunConfig] = None
    ) -> ExportService:
        configured = config.output.directory if config else None
        directory = out or configured or self.settings.output_dir
        return ExportService(directory)

    def simulate(self, args: argparse.Namespace) -> int:
        """Run one constant-drive or adiabatic configuration."""
        config = load_run_config(args.config)
        start = time.perf_counter()
        result = self.protocol_service.run(config)
        bundle = build_bundle(
            config,
            result.summary,
            warnings=result.warnings,
            integrator_stats=result.stats,
            wall_clock_s=time.perf_counter() - start,
        )
        exporter = self._export_service(args.out, config)
        exports = exporter.export_result(result.to_frame(), bundle, config.output.stem)
        if config.protocol.kind == "adiabatic":
            exports.append(
                exporter.export_frame(
                    pulse_frame(config), f"{config.output.stem}_pulse.csv", kind="pulse"
                )
            )
        if args.report:
            exports.append(exporter.export_markdown(bundle, config.output.stem))

        summary = result.summary
        print(f"✅ min xi^2 = {summary['min_xi2']:.6g} ({summary['min_xi2_db']:.3f} dB)")
        if "final_fidelity" in summary:
            print(f"   final dark-state fidelity = {summary['final_fidelity']:.6f}")
        for warning in result.warnings:
            print(f"⚠️  {warning}")
        for export in exports:
            print(f"   {export.kind}: {export.filepath} ({export.size_bytes} bytes)")
        return EXIT_OK

    def sweep(self, args: argparse.Namespace) -> int:
        """Optimize E_beta and time per N and fit xi^2 = a C^(-b)."""
        config = load_run_config(args.config)
        if config.sweep is None:
            raise ConfigError("sweep: section is required for the sweep command")
        start = time.perf_counter()
        result = self.sweep_service.run(config, workers=args.workers)
        bundle = build_bundle(
            config,
            {"fits": [fit.model_dump() for fit in result.fits]},
            warnings=result.warnings,
            wall_clock_s=time.perf_counter() - start,
            incomplete=result.incomplete,
        )
        stem = config.output.stem if config.output.stem != "trace" else "sweep"
        exports = self._export_service(args.out, config).export_result(
            result.to_frame(), bundle, stem, kind="sweep"
        )

        print("\n" + "=" * 70)
        print("📊 Sweep results")
        print("=" * 70)
        for row in result.rows:
            icon = "✅" if row.status == "success" and row.converged else "❌"
            value = f"{row.best_xi2:.6g}" if row.best_xi2 is not None else "n/a"
            print(
                f"{icon} {row.series:>10} N={row.n_spins:<4} "
                f"C={row.cooperativity:.4g} xi^2={value}"
            )
            if row.error:
                print(f"   Error: {row.error}")
        for fit in result.fits:
            print(
                f"   fit {fit.series}: xi^2 = {fit.a:.4g} C^(-{fit.b:.4g}) "
                f"({fit.n_points} points)"
            )
        for export in exports:
            print(f"   {export.kind}: {export.filepath}")
        return EXIT_FAILED if result.incomplete else EXIT_OK

    def inspect_dark_state(self, args: argparse.Namespace) -> int:
        """Print (and optionally write) the dark state for N spins at squeeze parameter r."""
        space = SpinSpace(args.n)
        try:
            state = dark_state(space, args.r)
        except NoDarkState as e:
            print(f"❌ {e}")
            return EXIT_FAILED
        xi2 = xi_r2(state)
        residual = dark_state_residual(args.n, args.r)
        print(
            f"✅ N={args.n}, r={args.r}: xi^2 = {xi2:.6g} ({to_db(xi2):.3f} dB), "
            f"2/N = {2 / args.n:.6g}"
        )
        print(f"   ||Sigma psi|| = {residual:.3g}")
        if args.out:
            frame = pd.DataFrame(
                {
                    "m": magnetizations(space.top_j2),
                    "re": state.vector.real,
                    "im": state.vector.imag,
                }
            )
            export = ExportService(args.out).export_frame(
                frame, f"dark_state_N{args.n}.csv", kind="dark_state"
            )
            print(f"   table: {export.filepath}")
        return EXIT_OK

    def linearized(self, args: argparse.Namespace) -> int:
        """Closed-form optimum and, optionally, the moment trajectory at one E_beta."""
        e_star = optimal_e_beta(args.n, args.g, args.kappa, args.gamma_phi)
        best = min_xi2(args.n, args.g, args.kappa, args.gamma_phi)
        print(f"✅ E_beta* = {e_star:.6g}, min xi^2 = {best:.6g} ({to_db(best):.3f} dB)")
        e_beta = args.e_beta or e_star
        value = linearized_xi2(e_beta, args.n, args.g, args.kappa, args.gamma_phi)
        print(f"   steady-state xi^2 at E_beta={e_beta:.6g}: {value:.6g}")
        if args.out:
            params = itat_params(e_beta, args.n, args.g, args.kappa, args.gamma_phi)
            t = np.linspace(0.0, args.t_final / (args.n * params.chi_tilde), args.n_times)
            moments = moment_ode_solve(params, t)
            frame = pd.DataFrame(
                {
                    "t": t * params.chi,
                    "vyy": moments.vyy,
                    "vzz": moments.vzz,
                    "vyz": moments.vyz,
                    "xi2": moments.xi2,
                }
            )
            export = ExportService(args.out).export_frame(
                frame, f"linearized_N{args.n}.csv", kind="linearized"
            )
            print(f"   table: {export.filepath}")
        return EXIT_OK

    def verify(self, args: argparse.Namespace) -> int:
        """Run the validation gates; exit code 0 only if all pass."""
        results = self.verification_service.run(args.level)
        print("\n" + "=" * 70)
        print(f"🔍 Verification ({args.level})")
        print("=" * 70)
        for result in results:
            icon = "✅" if result.passed else "❌"
            error = f"{result.max_error:.3g}" if result.max_error is not None else "n/a"
            tol = f"{result.tolerance:.3g}" if result.tolerance is not None else "n/a"
            print(f"{icon} {result.name:<18} error={error:<10} tol={tol:<10} {result.detail}")
        return EXIT_OK if all_passed(results) else EXIT_FAILED

    def figures(self, args: argparse.Namespace) -> int:
        """Emit one figure's datasets and manifest."""
        service = FiguresService(
            protocol_service=self.protocol_service,
            sweep_service=self.sweep_service,
            export_service=self._export_service(args.out),
        )
        manifest = service.emit(args.which, args.scale, workers=args.workers)
        print(f"✅ Figure {args.which}: {len(manifest['curves'])} curves")
        for curve in manifest["curves"]:
            print(f"   {curve['curve']}: {curve['table']}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinsq", description="Parametric-drive spin squeezing simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Override SPINSQ_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Constant-drive or adiabatic run")
    simulate.add_argument("--config", required=True, help="TOML or JSON run configuration")
    simulate.add_argument("--out", default=None, help="Output directory")
    simulate.add_argument("--report", action="store_true", help="Also write a Markdown report")

    sweep = sub.add_parser("sweep", help="Optimization over E_beta and time with power-law fit")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--workers", type=int, default=None)

    dark = sub.add_parser("dark-state", help="Dark state of the spin Bogoliubov mode")
    dark.add_argument("--n", type=int, required=True)
    dark.add_argument("--r", type=float, required=True)
    dark.add_argument("--out", default=None)

    lin = sub.add_parser("linearized", help="Closed-form linearized predictions")
    lin.add_argument("--n", type=int, required=True)
    lin.add_argument("--g", type=float, default=1.0)
    lin.add_argument("--kappa", type=float, required=True)
    lin.add_argument("--gamma-phi", type=float, required=True)
    lin.add_argument("--e-beta", type=float, default=None)
    lin.add_argument("--t-final", type=float, default=5.0, help="In units of 1/(N chi_tilde)")
    lin.add_argument("--n-times", type=int, default=201)
    lin.add_argument("--out", default=None)

    verify = sub.add_parser("verify", help="Oracle and consistency gates")
    verify.add_argument("--level", choices=["quick", "full"], default="quick")

    figures = sub.add_parser("figures", help="Emit figure datasets and manifest")
    figures.add_argument("--which", choices=list(FIGURES), required=True)
    figures.add_argument("--scale", choices=["desk", "smoke"], default="desk")
    figures.add_argument("--out", default=None)
    figures.add_argument("--workers", type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the CLI application."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())
    try:
        app_settings = Settings()
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_CONFIG

    app = CLIApplication(app_settings)
    handlers = {
        "simulate": app.simulate,
        "sweep": app.sweep,
        "dark-state": app.inspect_dark_state,
        "linearized": app.linearized,
        "verify": app.verify,
        "figures": app.figures,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except ApplicationError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {e}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\n\n👋 Interrupted")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
