"""Abstract interfaces of the simulation controller.

- BackendSimulationController: model building and numerical workflows
- FrontendSimulationController: events and result files

The controller (control.py) implements BOTH interfaces. The command line
only talks to the controller through them.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from .device import DeviceModel
from .evolve import TrajectoryRecord, TrotterErrorRow
from .metrics import GateReport
from .optimize import OptimizationTrace
from .pulses import PulseSchedule
from .settings import RunConfig


class _BaseSimulationController(ABC):
    """Base controller interface with shared methods."""

    @abstractmethod
    def get_config(self) -> RunConfig:
        """Get the resolved run config.

        Returns:
            Validated run config.
        """
        pass

    @abstractmethod
    def get_device(self) -> DeviceModel:
        """Get the device model, building it on first use.

        Returns:
            Device model at the resolved flux bias.
        """
        pass


class BackendSimulationController(_BaseSimulationController):
    """Backend controller interface - numerical workflows."""

    @abstractmethod
    def calibrate(self, target_f01: float) -> float:
        """Find the flux bias for a transmon frequency.

        Args:
            target_f01: Target transmon frequency (GHz).

        Returns:
            Reduced flux phi_e (rad).
        """
        pass

    @abstractmethod
    def spectrum(self) -> tuple[list[dict[str, Any]], dict[str, float]]:
        """Tabulate retained levels and qubit frequencies.

        Returns:
            Spectrum rows and the frequency summary (GHz).
        """
        pass

    @abstractmethod
    def schedule_for(self, gate: str) -> PulseSchedule:
        """Get the configured schedule of a gate.

        Args:
            gate: Gate name.

        Returns:
            Schedule, retuned to the computed spectrum when configured.
        """
        pass

    @abstractmethod
    def evaluate_gate(self, gate: str, tau: Optional[float] = None) -> GateReport:
        """Simulate a gate schedule and score it.

        Args:
            gate: Gate name.
            tau: Step width override (ns).

        Returns:
            Gate report with fidelity and tomography.
        """
        pass

    @abstractmethod
    def optimize_gate(self, gate: str) -> tuple[GateReport, OptimizationTrace]:
        """Re-optimize a gate schedule from its configured values.

        Args:
            gate: Gate name.

        Returns:
            Final report and optimizer trace.
        """
        pass

    @abstractmethod
    def simulate(
            self,
            initial: Union[str, np.ndarray],
            gate: Optional[str] = None
    ) -> TrajectoryRecord:
        """Propagate one initial state and record its trajectory.

        Args:
            initial: Basis label (00, 01, 10, 11) or a state vector.
            gate: Gate whose schedule drives the system.

        Returns:
            Recorded trajectory.
        """
        pass

    @abstractmethod
    def trotter_scan(self) -> list[TrotterErrorRow]:
        """Run the configured splitting-error scan.

        Returns:
            One row per step width.
        """
        pass


class FrontendSimulationController(_BaseSimulationController):
    """Frontend controller interface - events and result files."""

    @abstractmethod
    def register_event_callback(self, topic: str, callback: Callable[[dict[str, Any]], None]) -> None:
        """Register callback for an event topic.

        Args:
            topic: Event topic name.
            callback: Callable receiving the event data.
        """
        pass

    @abstractmethod
    def emit_event(
            self,
            topic: str,
            data: Optional[dict[str, Any]] = None,
            source: Optional[str] = None
    ) -> None:
        """Emit an event.

        Args:
            topic: Event topic name, ``<subject>.<past tense verb>``.
            data: Optional event data.
            source: Optional sender name.
        """
        pass

    @abstractmethod
    def write_results(
            self,
            name: str,
            payload: dict[str, Any],
            tables: Optional[dict[str, list[dict[str, Any]]]] = None
    ) -> list[Path]:
        """Write a JSON result plus CSV tables and echo the config.

        Args:
            name: Base name of the result files.
            payload: JSON payload; provenance is added.
            tables: CSV file name to rows.

        Returns:
            Written paths.
        """
        pass
