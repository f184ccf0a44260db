"""Pulse envelopes and the offset-charge drive signals.

The CR pulse drives the transmon with a sinusoidal flat-top envelope from
t = 0 to T1, the auxiliary Gaussian (optionally with DRAG quadrature)
follows on the target from T1 to T1 + T2. The CR carrier phase is
referenced to t = 0; the auxiliary carrier to t = 0 or to the start of its
own window, per schedule. Every ``eval_*`` accepts scalars or numpy arrays.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Mapping, Optional, Union

import numpy as np
import numpy.typing as npt

from .errors import ParameterError

log = logging.getLogger(__name__)

TimeLike = Union[float, npt.NDArray[np.float64]]


class Channel(str, Enum):
    TRANSMON = "transmon"
    PPQ = "ppq"


class CarrierOrigin(str, Enum):
    ABSOLUTE = "absolute"
    PULSE = "pulse"


def _like(t: npt.ArrayLike, values: npt.ArrayLike) -> TimeLike:
    values = np.asarray(values, dtype=float).reshape(np.shape(t))
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class GaussianEnvelope:
    """Baseline-subtracted Gaussian on [t0, t0 + duration).

    Attributes:
        amplitude: Peak value Omega_G.
        duration: Window length T_G (ns).
        sigma: Thickness (ns), T_G / 4 when not given.
        t0: Window start (ns).
    """

    amplitude: float
    duration: float
    sigma: Optional[float] = None
    t0: float = 0.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ParameterError(f"Gaussian duration must be > 0, got {self.duration}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.duration / 4.0)
        if self.sigma <= 0:
            raise ParameterError(f"Gaussian sigma must be > 0, got {self.sigma}")

    @property
    def baseline(self) -> float:
        return float(np.exp(-self.duration ** 2 / (8.0 * self.sigma ** 2)))


@dataclass(frozen=True)
class FlatTopEnvelope:
    """Sine rise, plateau and sine fall on [0, duration).

    ``rho`` is the rise fraction T_rise / T_S.
    """

    amplitude: float
    duration: float
    rho: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ParameterError(f"Flat-top duration must be > 0, got {self.duration}")
        if not 0.0 < self.rho < 0.5:
            raise ParameterError(f"rho must lie in (0, 0.5), got {self.rho}")

    @property
    def rise(self) -> float:
        return self.rho * self.duration

    @property
    def plateau(self) -> float:
        return self.duration - 2.0 * self.rise


@dataclass(frozen=True)
class DragSpec:
    beta: float = 0.0

    @property
    def enabled(self) -> bool:
        return self.beta != 0.0


def eval_gaussian(env: GaussianEnvelope, t: npt.ArrayLike) -> TimeLike:
    local = np.asarray(t, dtype=float) - env.t0
    inside = (local >= 0.0) & (local < env.duration)
    baseline = env.baseline
    shape = np.exp(-(local - 0.5 * env.duration) ** 2 / (2.0 * env.sigma ** 2))
    values = np.where(inside, env.amplitude * (shape - baseline) / (1.0 - baseline), 0.0)
    return _like(t, values)


def eval_gaussian_derivative(env: GaussianEnvelope, t: npt.ArrayLike) -> TimeLike:
    """Time derivative of eval_gaussian (1/ns), zero outside the window."""
    local = np.asarray(t, dtype=float) - env.t0
    inside = (local >= 0.0) & (local < env.duration)
    offset = local - 0.5 * env.duration
    shape = np.exp(-offset ** 2 / (2.0 * env.sigma ** 2))
    slope = -offset / env.sigma ** 2 * shape
    values = np.where(inside, env.amplitude * slope / (1.0 - env.baseline), 0.0)
    return _like(t, values)


def eval_flattop(env: FlatTopEnvelope, t: npt.ArrayLike) -> TimeLike:
    times = np.atleast_1d(np.asarray(t, dtype=float))
    rise, plateau = env.rise, env.plateau
    conditions = [
        (times >= 0.0) & (times < rise),
        (times >= rise) & (times < rise + plateau),
        (times >= rise + plateau) & (times < env.duration),
    ]
    choices = [
        env.amplitude * np.sin(np.pi * times / (2.0 * rise)),
        np.full_like(times, env.amplitude),
        env.amplitude * np.sin(np.pi * (times - plateau) / (2.0 * rise)),
    ]
    return _like(t, np.select(conditions, choices, default=0.0))


@dataclass(frozen=True)
class PulseSchedule:
    """Two-stage drive protocol: CR flat-top, then auxiliary Gaussian.

    Field names follow the published parameter table. Frequencies are in
    GHz, times in ns, phases in rad. ``T1 = 0`` silences the CR stage,
    which is how single-qubit schedules are expressed; ``aux_channel``
    selects which qubit the Gaussian drives. ``aux_origin`` sets the time
    the auxiliary carrier phase is counted from.
    """

    f1: float
    T1: float
    rho: float
    omega_S: float
    gamma1: float
    f2: float
    T2: float
    omega_G: float
    gamma2: float
    theta_T: float = 0.0
    theta_P: float = 0.0
    beta: float = 0.0
    sigma: Optional[float] = None
    aux_channel: Channel = field(default=Channel.PPQ)
    aux_origin: CarrierOrigin = field(default=CarrierOrigin.ABSOLUTE)

    def __post_init__(self):
        object.__setattr__(self, "aux_channel", Channel(self.aux_channel))
        object.__setattr__(self, "aux_origin", CarrierOrigin(self.aux_origin))

    @property
    def total_duration(self) -> float:
        return self.T1 + self.T2

    @property
    def drag(self) -> DragSpec:
        return DragSpec(self.beta)

    def cr_envelope(self) -> Optional[FlatTopEnvelope]:
        if self.T1 <= 0:
            return None
        return FlatTopEnvelope(self.omega_S, self.T1, self.rho)

    def aux_envelope(self) -> GaussianEnvelope:
        return GaussianEnvelope(self.omega_G, self.T2, self.sigma, t0=self.T1)

    def with_values(self, **values: Any) -> "PulseSchedule":
        return replace(self, **values)

    def to_dict(self) -> dict[str, Any]:
        data = {item.name: getattr(self, item.name) for item in fields(self)}
        data["aux_channel"] = self.aux_channel.value
        data["aux_origin"] = self.aux_origin.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PulseSchedule":
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"Unknown schedule fields: {sorted(unknown)}")
        return cls(**dict(data))


def cr_signal(schedule: PulseSchedule, t: npt.ArrayLike) -> TimeLike:
    envelope = schedule.cr_envelope()
    times = np.asarray(t, dtype=float)
    if envelope is None:
        return _like(t, np.zeros_like(times))
    carrier = np.cos(2.0 * np.pi * schedule.f1 * times - schedule.gamma1)
    return _like(t, np.asarray(eval_flattop(envelope, times)) * carrier)


def aux_signal(schedule: PulseSchedule, t: npt.ArrayLike) -> TimeLike:
    envelope = schedule.aux_envelope()
    times = np.asarray(t, dtype=float)
    origin = schedule.T1 if schedule.aux_origin is CarrierOrigin.PULSE else 0.0
    phase = 2.0 * np.pi * schedule.f2 * (times - origin) - schedule.gamma2
    values = np.asarray(eval_gaussian(envelope, times)) * np.cos(phase)
    if schedule.drag.enabled:
        derivative = np.asarray(eval_gaussian_derivative(envelope, times))
        values = values + schedule.beta * derivative * np.sin(phase)
    return _like(t, values)


def offset_charge(
        schedule: PulseSchedule,
        channel: Union[Channel, str],
        t: npt.ArrayLike
) -> TimeLike:
    """Offset charge n_g(t) applied to one qubit."""
    channel = Channel(channel)
    times = np.asarray(t, dtype=float)
    values = np.zeros_like(times)
    if channel is Channel.TRANSMON:
        values = values + np.asarray(cr_signal(schedule, times))
    if schedule.aux_channel is channel:
        values = values + np.asarray(aux_signal(schedule, times))
    return _like(t, values)


def idle_schedule(duration: float) -> PulseSchedule:
    """Schedule with both drives off, used for free evolution."""
    return PulseSchedule(
        f1=0.0, T1=0.0, rho=0.25, omega_S=0.0, gamma1=0.0,
        f2=0.0, T2=duration, omega_G=0.0, gamma2=0.0,
    )


# Published CNOT and single-qubit schedules.
REFERENCE_SCHEDULES: dict[str, PulseSchedule] = {
    "CNOT_TP": PulseSchedule(
        f1=2.8470, T1=1460.0, rho=0.09986, omega_S=0.03000, gamma1=-1.068e-6,
        f2=2.8472, T2=9.9966, omega_G=0.02078, gamma2=2.4186,
        theta_T=0.6007, theta_P=-0.0333, aux_origin=CarrierOrigin.PULSE,
    ),
    "RX_T": PulseSchedule(
        f1=2.8830, T1=0.0, rho=0.25, omega_S=0.0, gamma1=0.0,
        f2=2.8830, T2=20.0, omega_G=-0.0154, gamma2=0.0,
        beta=0.3979, aux_channel=Channel.TRANSMON,
    ),
    "RX_P": PulseSchedule(
        f1=2.8470, T1=0.0, rho=0.25, omega_S=0.0, gamma1=0.0,
        f2=2.8470, T2=20.0, omega_G=-0.0133, gamma2=0.0,
        aux_channel=Channel.PPQ,
    ),
}


def reference_schedule(gate: str) -> PulseSchedule:
    try:
        return REFERENCE_SCHEDULES[gate]
    except KeyError:
        raise ParameterError(
            f"No reference schedule for gate '{gate}', "
            f"expected one of {sorted(REFERENCE_SCHEDULES)}"
        ) from None


def retune_schedule(schedule: PulseSchedule, delta_ghz: float) -> PulseSchedule:
    """Shift the carriers that address the PPQ by delta_ghz.

    The CR carrier always sits on the PPQ transition; the auxiliary carrier
    only when it drives the PPQ.
    """
    values = {"f1": schedule.f1 + delta_ghz}
    if schedule.aux_channel is Channel.PPQ:
        values["f2"] = schedule.f2 + delta_ghz
    log.info(f"Retuning PPQ carriers by {delta_ghz:+.6f} GHz")
    return replace(schedule, **values)
