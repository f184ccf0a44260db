import numpy as np
import pytest

from transmon_ppq.device import (
    DeviceSpec,
    assemble_composite,
    build_device,
)
from transmon_ppq.simulator import BackendGateSimulator


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def device():
    """Default device at the calibrated flux bias."""
    return build_device(DeviceSpec.default())


@pytest.fixture(scope="session")
def model(device):
    return device.composite


@pytest.fixture(scope="session")
def uncoupled_model(device):
    """Same subsystems with the resonator coupling switched off."""
    return assemble_composite(device.transmon, device.ppq, device.resonator, 0.0)


class FixedBlockSimulator(BackendGateSimulator):
    """Returns a preset computational block instead of propagating."""

    def __init__(self, block):
        self.block = np.asarray(block, dtype=np.complex128)
        self.calls = 0

    def simulate_block(self, model, schedule, tau=1e-3):
        self.calls += 1
        return self.block.copy()


class FailingSimulator(BackendGateSimulator):
    def simulate_block(self, model, schedule, tau=1e-3):
        raise AssertionError("simulator must not be called")


@pytest.fixture
def fixed_block_simulator():
    return FixedBlockSimulator


@pytest.fixture
def failing_simulator():
    return FailingSimulator()
