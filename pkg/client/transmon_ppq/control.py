"""Simulation controller.

- Implements both BackendSimulationController and FrontendSimulationController
- Builds and caches the device model for one run config
- Reports progress through registered event callbacks
"""
from __future__ import annotations

import logging
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Union

import numpy as np

from .abstract import BackendSimulationController, FrontendSimulationController
from .device import (
    REFERENCE_F01_T_GHZ,
    REFERENCE_F12_P_GHZ,
    DeviceModel,
    build_device,
    calibrate_flux,
    qubit_frequencies,
    spectrum_rows,
)
from .errors import ConfigError, DimensionError
from .evolve import (
    TrajectoryRecord,
    TrajectoryRecorder,
    TrotterErrorRow,
    basis_state,
    propagate,
    trotter_error_scan,
)
from .managers import ArtifactManager
from .metrics import GateFrame, GateReport, apply_vz, build_gate_report, gate_for_name
from .optimize import OptimizationTrace, optimize_gate
from .pulses import PulseSchedule, retune_schedule
from .settings import RunConfig
from .simulator import BackendGateSimulator, TrotterGateSimulator

log = logging.getLogger(__name__)

# Relative PPQ frequency mismatch above which retuning is suggested.
RETUNE_WARNING = 0.01


class SimulationController(
    BackendSimulationController,
    FrontendSimulationController
):
    """Controller for one run config.

    Implements both backend and frontend interfaces. The device model is
    built lazily and reused by every workflow.
    """

    def __init__(
            self,
            config: Optional[RunConfig] = None,
            output_dir: Optional[Union[str, Path]] = None,
            simulator: Optional[BackendGateSimulator] = None
    ):
        """Initialize controller.

        Args:
            config: Run config, defaults when None.
            output_dir: Result directory, ``config.run.output_dir`` when None.
            simulator: Gate backend. When None, split-operator propagation
                reporting blocks in the frame selected by ``run.frame``.
        """
        self._config = config or RunConfig()
        self._device: Optional[DeviceModel] = None
        self._simulator = simulator
        self._artifacts = ArtifactManager(
            output_dir if output_dir is not None else self._config.run.output_dir,
            self._config,
        )
        self._callbacks: dict[str, list[Callable[[dict[str, Any]], None]]] = defaultdict(list)

    # -------------------------------------------------------------------------
    # Base interface
    # -------------------------------------------------------------------------
    def get_config(self) -> RunConfig:
        return self._config

    def get_device(self) -> DeviceModel:
        if self._device is None:
            with self._guard("build device"):
                spec = self._config.device.to_spec()
                self._device = build_device(spec, method=self._config.run.method)
            self.emit_event("device.built", {"phi_e": self._device.phi_e})
        return self._device

    @property
    def artifacts(self) -> ArtifactManager:
        return self._artifacts

    @property
    def simulator(self) -> BackendGateSimulator:
        if self._simulator is None:
            self._simulator = TrotterGateSimulator(frame=self.gate_frame())
        return self._simulator

    def gate_frame(self) -> Optional[GateFrame]:
        """Qubit frame of the quoted frequencies, following any PPQ retune.

        None when ``run.frame`` is idle.
        """
        if self._config.run.frame == "idle":
            return None
        return GateFrame(
            f_T=REFERENCE_F01_T_GHZ,
            f_P=REFERENCE_F12_P_GHZ + self._retune_delta(),
        )

    def _retune_delta(self) -> float:
        if not self._config.run.retune_to_spectrum:
            return 0.0
        return qubit_frequencies(self.get_device())["f12_P"] - REFERENCE_F12_P_GHZ

    @contextmanager
    def _guard(self, action: str) -> Iterator[None]:
        try:
            yield
        except Exception as e:
            log.error(f"Failed to {action}: {e}", exc_info=True)
            raise

    # -------------------------------------------------------------------------
    # Backend interface
    # -------------------------------------------------------------------------
    def calibrate(self, target_f01: float) -> float:
        with self._guard("calibrate flux"):
            phi_e = calibrate_flux(self._config.device.to_spec(), target_f01)
        self.emit_event("flux.calibrated", {"phi_e": phi_e, "target_f01_GHz": target_f01})
        return phi_e

    def calibrated_config(self, target_f01: float) -> RunConfig:
        """Copy of the config with the flux bias fixed for target_f01."""
        phi_e = self.calibrate(target_f01)
        device = self._config.device.model_copy(
            update={"phi_e": phi_e, "target_f01_T": target_f01}
        )
        return self._config.model_copy(update={"device": device})

    def spectrum(self) -> tuple[list[dict[str, Any]], dict[str, float]]:
        device = self.get_device()
        frequencies = qubit_frequencies(device)
        frequencies["phi_e"] = device.phi_e
        mismatch = frequencies["f12_P"] / REFERENCE_F12_P_GHZ - 1.0
        if abs(mismatch) > RETUNE_WARNING:
            log.warning(
                f"f12_P = {frequencies['f12_P']:.6f} GHz differs from "
                f"{REFERENCE_F12_P_GHZ} GHz by {mismatch:+.2%}; "
                f"consider run.retune_to_spectrum"
            )
        return spectrum_rows(device), frequencies

    def schedule_for(self, gate: str) -> PulseSchedule:
        schedule = self._config.schedule_for(gate)
        if self._config.run.retune_to_spectrum:
            schedule = retune_schedule(schedule, self._retune_delta())
        return schedule

    def evaluate_gate(self, gate: str, tau: Optional[float] = None) -> GateReport:
        run = self._config.run
        tau = run.tau_ns if tau is None else tau
        schedule = self.schedule_for(gate)
        device = self.get_device()
        with self._guard(f"evaluate {gate}"):
            block = self.simulator.simulate_block(device.composite, schedule, tau)
            block = apply_vz(block, schedule.theta_T, schedule.theta_P)
            report = build_gate_report(
                block, gate_for_name(gate), tau, run.fidelity_samples, run.rng_seed,
                schedule=schedule.to_dict(), workers=run.workers,
            )
        report.unitarity_deviation = getattr(self.simulator, "last_isometry_deviation", None)
        self.emit_event("gate.evaluated", {"gate": gate, "fidelity": report.fidelity})
        return report

    def optimize_gate(self, gate: str) -> tuple[GateReport, OptimizationTrace]:
        run = self._config.run
        options = self._config.optimizer.to_options(run.fidelity_samples, run.rng_seed, run.workers)
        seed_schedule = self.schedule_for(gate)
        device = self.get_device()
        with self._guard(f"optimize {gate}"):
            report, trace = optimize_gate(
                device.composite, gate, seed_schedule,
                mask=self._config.optimizer.mask,
                options=options,
                simulator=self.simulator,
            )
        self.emit_event("gate.optimized", {"gate": gate, "fidelity": report.fidelity})
        return report, trace

    def _initial_state(self, initial: Union[str, np.ndarray]) -> np.ndarray:
        composite = self.get_device().composite
        if not isinstance(initial, str):
            state = np.asarray(initial, dtype=np.complex128).reshape(-1)
            if state.shape[0] != composite.dim:
                raise DimensionError(f"Initial state needs {composite.dim} amplitudes")
            return state / np.linalg.norm(state)
        if initial in ("00", "01", "10", "11"):
            return basis_state(composite, initial)
        raise ConfigError(
            f"unknown initial state '{initial}', expected 00, 01, 10, 11 or an amplitude file",
            field_path="run.initial_state",
        )

    def simulate(
            self,
            initial: Union[str, np.ndarray],
            gate: Optional[str] = None
    ) -> TrajectoryRecord:
        run = self._config.run
        schedule = self.schedule_for(gate or run.gate)
        composite = self.get_device().composite
        state = self._initial_state(initial)
        recorder = TrajectoryRecorder(composite)
        with self._guard("simulate"):
            propagate(
                composite, schedule, 0.0, schedule.total_duration, run.tau_ns,
                recorder=recorder, initial=state, record_stride=run.record_stride,
            )
        record = recorder.result()
        self.emit_event("trajectory.simulated", {"samples": len(record)})
        return record

    def trotter_scan(self) -> list[TrotterErrorRow]:
        run = self._config.run
        composite = self.get_device().composite
        with self._guard("scan Trotter error"):
            rows = trotter_error_scan(
                composite, run.trotter_taus_ns, run.trotter_duration_ns, workers=run.workers
            )
        self.emit_event("trotter.scanned", {"points": len(rows)})
        return rows

    # -------------------------------------------------------------------------
    # Frontend interface
    # -------------------------------------------------------------------------
    def register_event_callback(self, topic: str, callback: Callable[[dict[str, Any]], None]) -> None:
        self._callbacks[topic].append(callback)

    def emit_event(
            self,
            topic: str,
            data: Optional[dict[str, Any]] = None,
            source: Optional[str] = None
    ) -> None:
        payload = dict(data or {})
        payload["topic"] = topic
        payload["source"] = source or __name__
        for callback in self._callbacks.get(topic, []) + self._callbacks.get("*", []):
            try:
                callback(payload)
            except Exception as e:
                log.error(f"Event callback for '{topic}' failed: {e}", exc_info=True)

    def write_results(
            self,
            name: str,
            payload: dict[str, Any],
            tables: Optional[dict[str, list[dict[str, Any]]]] = None
    ) -> list[Path]:
        paths = [self._artifacts.echo_config(), self._artifacts.write_json(f"{name}.json", payload)]
        for file_name, rows in (tables or {}).items():
            paths.append(self._artifacts.write_csv(file_name, rows))
        self.emit_event("results.written", {"paths": [str(path) for path in paths]})
        return paths
