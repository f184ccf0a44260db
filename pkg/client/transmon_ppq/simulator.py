"""Backends that turn a schedule into a computational-subspace block."""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from .device import CompositeModel
from .evolve import DEFAULT_TAU, DriveBasis, Propagator, propagate, propagate_exact
from .linalg import ComplexMatrix
from .metrics import GateFrame, computational_block, to_rotating_frame_block
from .pulses import PulseSchedule

log = logging.getLogger(__name__)


class BackendGateSimulator(ABC):
    """Interface of a gate simulation backend."""

    @abstractmethod
    def simulate_block(
            self,
            model: CompositeModel,
            schedule: PulseSchedule,
            tau: float = DEFAULT_TAU
    ) -> ComplexMatrix:
        """Simulate the full schedule starting at t = 0.

        Args:
            model: Composite model of the device.
            schedule: Pulse schedule.
            tau: Step width (ns).

        Returns:
            4x4 computational block in the backend's qubit frame, before
            virtual-Z corrections.
        """
        pass


def _computational_columns(model: CompositeModel) -> np.ndarray:
    return np.eye(model.dim, dtype=np.complex128)[:, list(model.comp_idx)]


class _ColumnSimulator(BackendGateSimulator):
    """Propagates the four computational columns and keeps their norm check.

    ``frame`` selects the rotating frame of the returned block; None keeps
    the idle transition frequencies.
    """

    def __init__(self, frame: Optional[GateFrame] = None):
        self.frame = frame
        self.last_isometry_deviation: Optional[float] = None

    def _block(self, propagator: Propagator, model: CompositeModel) -> ComplexMatrix:
        self.last_isometry_deviation = propagator.unitarity_deviation()
        block = computational_block(propagator.U, model.comp_idx)
        return to_rotating_frame_block(block, model, propagator.t_end, self.frame)


class TrotterGateSimulator(_ColumnSimulator):
    """Split-operator propagation."""

    def __init__(self, frame: Optional[GateFrame] = None):
        super().__init__(frame)
        self._bases: dict[int, tuple[CompositeModel, DriveBasis]] = {}

    def _basis(self, model: CompositeModel) -> DriveBasis:
        cached = self._bases.get(id(model))
        if cached is None or cached[0] is not model:
            cached = (model, DriveBasis.from_model(model))
            self._bases[id(model)] = cached
        return cached[1]

    def simulate_block(self, model, schedule, tau=DEFAULT_TAU):
        propagator = propagate(
            model, schedule, 0.0, schedule.total_duration, tau,
            initial=_computational_columns(model),
            basis=self._basis(model),
        )
        log.debug(f"Propagated {propagator.step_count} steps over {schedule.total_duration} ns")
        return self._block(propagator, model)


class ExactGateSimulator(_ColumnSimulator):
    """Exact diagonalization at every step, for cross-checks."""

    def simulate_block(self, model, schedule, tau=DEFAULT_TAU):
        propagator = propagate_exact(
            model, schedule, 0.0, schedule.total_duration, tau,
            initial=_computational_columns(model),
        )
        return self._block(propagator, model)
