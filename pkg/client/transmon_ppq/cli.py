"""Command line interface.

Subcommands: spectrum, calibrate, simulate, fidelity, optimize,
trotter-scan, tomography. Exit codes: 0 success, 1 usage or config error,
2 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .control import SimulationController
from .errors import ConfigError, TransmonPPQError
from .managers import TrajectoryManager
from .settings import RunConfig, dump_config, load_config, parse_config
from .version import __version__

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with the config-error exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config)
    data = config.model_dump(mode="json")
    overrides = {
        "rng_seed": args.seed,
        "tau_ns": args.tau,
        "output_dir": args.out,
        "workers": args.workers,
    }
    data["run"].update({key: value for key, value in overrides.items() if value is not None})
    if getattr(args, "gate", None):
        data["run"]["gate"] = args.gate
    return parse_config(data)


def _print_summary(values: dict[str, Any]) -> None:
    for key, value in values.items():
        print(f"{key}: {value}")


def cmd_spectrum(controller: SimulationController, args: argparse.Namespace) -> int:
    rows, frequencies = controller.spectrum()
    controller.write_results("spectrum", {"frequencies": frequencies}, {"spectrum.csv": rows})
    _print_summary({
        "f01_T_GHz": f"{frequencies['f01_T']:.6f}",
        "f12_P_GHz": f"{frequencies['f12_P']:.6f}",
        "phi_e": f"{frequencies['phi_e']:.12f}",
    })
    return EXIT_OK


def cmd_calibrate(controller: SimulationController, args: argparse.Namespace) -> int:
    target = args.target if args.target is not None else controller.get_config().device.target_f01_T
    calibrated = controller.calibrated_config(target)
    phi_e = calibrated.device.phi_e
    controller.write_results("calibration", {"target_f01_GHz": target, "phi_e": phi_e})
    path = controller.artifacts.output_dir / "config_calibrated.json"
    path.write_text(dump_config(calibrated), encoding="utf-8")
    _print_summary({"phi_e": f"{phi_e:.12f}", "config": str(path)})
    return EXIT_OK


def _load_amplitudes(path: Path, dim: int) -> np.ndarray:
    """Read {"re": [...], "im": [...]} holding dim amplitudes."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        state = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read amplitude file {path}: {exc}", "run.initial_state") from exc
    if state.shape != (dim,):
        raise ConfigError(
            f"amplitude file {path} holds shape {state.shape}, expected ({dim},)",
            "run.initial_state",
        )
    if not np.linalg.norm(state) > 0:
        raise ConfigError(f"amplitude file {path} holds a zero state", "run.initial_state")
    return state


def cmd_simulate(controller: SimulationController, args: argparse.Namespace) -> int:
    config = controller.get_config()
    label = args.initial or config.run.initial_state
    initial: Any = label
    if label not in ("00", "01", "10", "11") and Path(label).is_file():
        initial = _load_amplitudes(Path(label), controller.get_device().composite.dim)
        label = Path(label).stem
    record = controller.simulate(initial)
    manager = TrajectoryManager(include_amplitudes=config.run.record_amplitudes)
    final = manager.final_state(record)
    controller.write_results(
        f"simulate_{label}",
        {"gate": config.run.gate, "initial": label, "final": final},
        {f"trajectory_{label}.csv": manager.rows(record)},
    )
    _print_summary({
        "bloch_T": final["bloch_T"],
        "bloch_P": final["bloch_P"],
        "leakage": final["leakage"],
    })
    return EXIT_OK


def cmd_fidelity(controller: SimulationController, args: argparse.Namespace) -> int:
    gate = controller.get_config().run.gate
    report = controller.evaluate_gate(gate)
    controller.write_results(f"fidelity_{gate}", report.to_dict())
    _print_summary({"gate": gate, "fidelity": f"{report.fidelity:.6f}"})
    return EXIT_OK


def cmd_optimize(controller: SimulationController, args: argparse.Namespace) -> int:
    gate = controller.get_config().run.gate
    report, trace = controller.optimize_gate(gate)
    payload = {"report": report.to_dict(), "trace": trace.notes, "evaluations": trace.evaluations}
    controller.write_results(
        f"optimize_{gate}",
        payload,
        {
            f"optimize_{gate}_trace.csv": trace.to_rows(),
            f"tomography_{gate}.csv": report.tomography.to_rows(),
        },
    )
    _print_summary({
        "gate": gate,
        "fidelity": f"{report.fidelity:.6f}",
        "evaluations": trace.evaluations,
    })
    return EXIT_OK


def cmd_trotter_scan(controller: SimulationController, args: argparse.Namespace) -> int:
    rows = [dataclasses.asdict(row) for row in controller.trotter_scan()]
    table = [
        {"tau_ns": row["tau"], "state_error": row["state_error"], "state_distance": row["state_distance"]}
        for row in rows
    ]
    controller.write_results("trotter_scan", {"rows": table}, {"trotter_scan.csv": table})
    for row in table:
        print(f"tau={row['tau_ns']:.1e} ns  error={row['state_error']:.3e}")
    return EXIT_OK


def cmd_tomography(controller: SimulationController, args: argparse.Namespace) -> int:
    gate = controller.get_config().run.gate
    report = controller.evaluate_gate(gate)
    rows = report.tomography.to_rows()
    controller.write_results(
        f"tomography_{gate}",
        {"gate": gate, "fidelity": report.fidelity, "tomography": rows},
        {f"tomography_{gate}.csv": rows},
    )
    for row in report.tomography.rows:
        print(f"|{row.input_label}> -> |{row.dominant}>  phases {row.phases}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[SimulationController, argparse.Namespace], int]] = {
    "spectrum": cmd_spectrum,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "fidelity": cmd_fidelity,
    "optimize": cmd_optimize,
    "trotter-scan": cmd_trotter_scan,
    "tomography": cmd_tomography,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="transmon-ppq",
        description="Pulse-level simulation of a transmon coupled to a parity-protected qubit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", dest="config", default=None, help="JSON run config.")
    parser.add_argument("--out", dest="out", default=None, help="Output directory.")
    parser.add_argument("--seed", dest="seed", type=int, default=None, help="Fidelity sampling seed.")
    parser.add_argument("--tau", dest="tau", type=float, default=None, help="Trotter step in ns.")
    parser.add_argument("--workers", dest="workers", type=int, default=None, help="Worker threads.")
    parser.add_argument("--debug", dest="debug", action="store_true", help="Debug log messages.")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("spectrum", help="Energy levels and qubit frequencies.")

    calibrate = subparsers.add_parser("calibrate", help="Fit the transmon flux bias.")
    calibrate.add_argument("--target", type=float, default=None, help="Target f01 in GHz.")

    simulate = subparsers.add_parser("simulate", help="Record a state trajectory.")
    simulate.add_argument("--initial", default=None, help="00, 01, 10, 11 or an amplitude JSON file.")
    simulate.add_argument("--gate", default=None, help="Gate schedule to play.")

    for name, text in (
            ("fidelity", "Average gate fidelity."),
            ("optimize", "Nelder-Mead re-optimization."),
            ("tomography", "Basis-state tomography."),
    ):
        command = subparsers.add_parser(name, help=text)
        command.add_argument("--gate", default=None, help="CNOT_TP, RX_T or RX_P.")

    scan = subparsers.add_parser("trotter-scan", help="Splitting error against step width.")
    scan.add_argument("--duration", type=float, default=None, help="Free evolution time in ns.")
    scan.add_argument("--taus", default=None, help="Comma separated step widths in ns.")
    return parser


def _apply_scan_options(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.command != "trotter-scan":
        return config
    data = config.model_dump(mode="json")
    if args.duration is not None:
        data["run"]["trotter_duration_ns"] = args.duration
    if args.taus:
        try:
            data["run"]["trotter_taus_ns"] = [float(value) for value in args.taus.split(",")]
        except ValueError as exc:
            raise ConfigError(f"invalid tau list '{args.taus}'", "run.trotter_taus_ns") from exc
    return parse_config(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.INFO
    if args.debug:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        config = _apply_scan_options(_resolve_config(args), args)
        controller = SimulationController(config)
        return COMMANDS[args.command](controller, args)
    except ConfigError as exc:
        log.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    except (TransmonPPQError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error(f"Numerical failure: {exc}", exc_info=args.debug)
        return EXIT_NUMERICAL
