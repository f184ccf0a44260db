"""Run configuration models.

Device energies are given in GHz and converted to rad/ns once, in
``DeviceSettings.to_spec``. Schedule fields keep the parameter names used in the reference schedules.
"""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..device import TWO_PI, DeviceSpec
from ..errors import ConfigError
from ..linalg import EigenMethod
from ..metrics import DEFAULT_SAMPLES, DEFAULT_SEED
from ..optimize import DEFAULT_MASK, PARAMETER_NAMES, OptimizerOptions
from ..pulses import REFERENCE_SCHEDULES, PulseSchedule

log = logging.getLogger(__name__)

GATE_NAMES = ("CNOT_TP", "RX_T", "RX_P", "identity")


class BaseSettingsModel(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DeviceSettings(BaseSettingsModel):
    """Circuit parameters in GHz."""

    E_C_T: float = Field(0.2, title="Transmon charging energy (GHz)", gt=0)
    E_J_sigma_T: float = Field(6.0, title="SQUID total Josephson energy (GHz)", gt=0)
    gamma_squid: float = Field(
        1.01,
        title="SQUID junction ratio",
        description="Ratio of the two SQUID junction energies",
        gt=0,
    )
    phi_e: Optional[float] = Field(
        None,
        title="Reduced flux bias (rad)",
        description="Null calibrates the flux to target_f01_T at load",
    )
    E_C_P: float = Field(0.2, title="PPQ charging energy (GHz)", gt=0)
    E_J_P: float = Field(3.0, title="PPQ pair tunneling energy (GHz)", ge=0)
    omega_R: float = Field(2.4, title="Resonator frequency (GHz)", gt=0)
    G: float = Field(0.01, title="Qubit-resonator coupling (GHz)", ge=0)
    n_max: int = Field(50, title="Charge basis cutoff", ge=10, le=200)
    d_trunc: int = Field(4, title="Levels kept per subsystem", ge=2, le=8)
    target_f01_T: float = Field(
        2.883,
        title="Transmon target frequency (GHz)",
        description="Used by flux calibration",
        gt=0,
    )

    def to_spec(self) -> DeviceSpec:
        return DeviceSpec(
            E_C_T=TWO_PI * self.E_C_T,
            E_J_sigma_T=TWO_PI * self.E_J_sigma_T,
            gamma_squid=self.gamma_squid,
            phi_e=self.phi_e,
            E_C_P=TWO_PI * self.E_C_P,
            E_J_P=TWO_PI * self.E_J_P,
            omega_R=TWO_PI * self.omega_R,
            G=TWO_PI * self.G,
            n_max=self.n_max,
            d_trunc=self.d_trunc,
            target_f01_T=self.target_f01_T,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        """SHA-256 of the canonical JSON form, for provenance."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


class ScheduleSettings(BaseSettingsModel):
    """Pulse schedule; frequencies in GHz, times in ns, phases in rad."""

    f1: float = Field(title="CR carrier frequency (GHz)", ge=0)
    T1: float = Field(title="CR duration T_S (ns)", ge=0)
    rho: float = Field(title="CR rise fraction", gt=0, lt=0.5)
    omega_S: float = Field(title="CR amplitude")
    gamma1: float = Field(title="CR carrier phase (rad)")
    f2: float = Field(title="Auxiliary carrier frequency (GHz)", ge=0)
    T2: float = Field(title="Auxiliary duration T_G (ns)", gt=0)
    omega_G: float = Field(title="Auxiliary amplitude")
    gamma2: float = Field(title="Auxiliary carrier phase (rad)")
    theta_T: float = Field(0.0, title="Transmon virtual-Z angle (rad)")
    theta_P: float = Field(0.0, title="PPQ virtual-Z angle (rad)")
    beta: float = Field(0.0, title="DRAG coefficient (ns)")
    sigma: Optional[float] = Field(None, title="Gaussian thickness (ns)", gt=0)
    aux_channel: Literal["ppq", "transmon"] = Field("ppq", title="Auxiliary pulse target")
    aux_origin: Literal["absolute", "pulse"] = Field(
        "absolute",
        title="Auxiliary carrier time origin",
        description="absolute counts from t = 0, pulse from the start of the auxiliary window",
    )

    def to_schedule(self) -> PulseSchedule:
        return PulseSchedule.from_dict(self.model_dump())

    @classmethod
    def from_schedule(cls, schedule: PulseSchedule) -> "ScheduleSettings":
        return cls(**schedule.to_dict())


class OptimizerSettings(BaseSettingsModel):
    mask: list[str] = Field(
        default_factory=lambda: list(DEFAULT_MASK),
        title="Free parameters",
    )
    max_evals: int = Field(300, title="Objective evaluation budget", ge=2)
    tol_x: float = Field(1e-6, title="Simplex diameter tolerance", ge=0)
    tol_f: float = Field(1e-7, title="Objective spread tolerance", ge=0)
    simplex_fraction: float = Field(0.02, title="Relative initial simplex step", gt=0)
    simplex_floor: float = Field(1e-4, title="Minimum initial simplex step", gt=0)
    coarse_tau_ns: float = Field(1e-2, title="Step width during iterations (ns)", gt=0)
    final_tau_ns: float = Field(1e-3, title="Step width of the final report (ns)", gt=0)

    @field_validator("mask")
    @classmethod
    def _known_parameters(cls, value: list[str]) -> list[str]:
        unknown = [name for name in value if name not in PARAMETER_NAMES]
        if unknown:
            raise ValueError(f"unknown parameters {unknown}")
        if not value:
            raise ValueError("at least one parameter must be free")
        return value

    def to_options(self, n_samples: int, seed: int, workers: int) -> OptimizerOptions:
        return OptimizerOptions(
            max_evals=self.max_evals,
            tol_x=self.tol_x,
            tol_f=self.tol_f,
            simplex_fraction=self.simplex_fraction,
            simplex_floor=self.simplex_floor,
            coarse_tau=self.coarse_tau_ns,
            final_tau=self.final_tau_ns,
            n_samples=n_samples,
            seed=seed,
            workers=workers,
        )


class RunSettings(BaseSettingsModel):
    gate: str = Field("CNOT_TP", title="Gate evaluated by fidelity, optimize and tomography")
    tau_ns: float = Field(1e-3, title="Trotter step (ns)", gt=0)
    fidelity_samples: int = Field(DEFAULT_SAMPLES, title="Random states for fidelity", ge=1)
    rng_seed: int = Field(DEFAULT_SEED, title="Fidelity sampling seed", ge=0)
    record_stride: int = Field(1000, title="Steps between trajectory samples", ge=1)
    record_amplitudes: bool = Field(False, title="Write state amplitudes to trajectory CSV")
    initial_state: str = Field("00", title="Initial label or amplitude file for simulate")
    workers: int = Field(1, title="Worker threads", ge=1)
    eigen_method: Literal["lapack", "jacobi"] = Field("lapack", title="Eigensolver backend")
    frame: Literal["reference", "idle"] = Field(
        "reference",
        title="Frame of reported gate blocks",
        description="reference rotates at the quoted qubit frequencies, idle at the computed ones",
    )
    retune_to_spectrum: bool = Field(
        False,
        title="Retune PPQ carriers",
        description="Shift PPQ carriers by the computed minus the quoted f12_P",
    )
    trotter_taus_ns: list[float] = Field(
        default_factory=lambda: [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
        title="Step widths of the Trotter error scan (ns)",
    )
    trotter_duration_ns: float = Field(100.0, title="Trotter scan duration (ns)", gt=0)
    output_dir: str = Field("results", title="Output directory")

    @field_validator("gate")
    @classmethod
    def _known_gate(cls, value: str) -> str:
        if value not in GATE_NAMES:
            raise ValueError(f"unknown gate '{value}', expected one of {GATE_NAMES}")
        return value

    @field_validator("trotter_taus_ns")
    @classmethod
    def _positive_taus(cls, value: list[float]) -> list[float]:
        if any(tau <= 0 for tau in value):
            raise ValueError("step widths must be positive")
        return value

    @property
    def method(self) -> EigenMethod:
        return self.eigen_method


def _default_schedules() -> dict[str, ScheduleSettings]:
    return {
        name: ScheduleSettings.from_schedule(schedule)
        for name, schedule in REFERENCE_SCHEDULES.items()
    }


class RunConfig(BaseSettingsModel):
    device: DeviceSettings = Field(default_factory=DeviceSettings)
    schedules: dict[str, ScheduleSettings] = Field(default_factory=_default_schedules)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    run: RunSettings = Field(default_factory=RunSettings)

    def schedule_for(self, gate: str) -> PulseSchedule:
        try:
            return self.schedules[gate].to_schedule()
        except KeyError:
            raise ConfigError(
                f"no schedule for gate '{gate}'", field_path=f"schedules.{gate}"
            ) from None


DEFAULT_VALUES = RunConfig().model_dump(mode="json")


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ()))


def parse_config(data: Union[str, bytes, dict]) -> RunConfig:
    """Validate raw JSON text or a mapping into a RunConfig.

    Raises:
        ConfigError: Invalid JSON or field values; carries the field path
            of the first error.
    """
    try:
        if isinstance(data, dict):
            return RunConfig.model_validate(data)
        return RunConfig.model_validate_json(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first.get("msg", str(exc)), field_path=_field_path(first)) from exc


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Load a JSON run config; defaults when path is None."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    config = parse_config(text)
    log.debug(f"Loaded config from {path}")
    return config


def dump_config(config: RunConfig) -> str:
    """Indented, key-ordered JSON of the config."""
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
