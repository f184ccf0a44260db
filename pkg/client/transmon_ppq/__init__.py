"""Pulse-level simulator for a transmon coupled to a parity-protected qubit."""

from .version import __version__
from .control import SimulationController
from .abstract import (
    BackendSimulationController,
    FrontendSimulationController,
)
from .device import DeviceSpec, build_device
from .pulses import PulseSchedule, reference_schedule

__all__ = (
    "__version__",
    "SimulationController",
    "BackendSimulationController",
    "FrontendSimulationController",
    "DeviceSpec",
    "build_device",
    "PulseSchedule",
    "reference_schedule",
)
