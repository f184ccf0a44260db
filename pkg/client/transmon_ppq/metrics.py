"""Gate targets, fidelity estimation and basis-state tomography.

Two-qubit operators act on the computational basis ordered
|00>, |01>, |10>, |11> where |ij> is the transmon in level i and the PPQ
in level j + 1, resonator empty.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import numpy.typing as npt

from .device import REFERENCE_F01_T_GHZ, REFERENCE_F12_P_GHZ, TWO_PI, CompositeModel
from .errors import DimensionError, ParameterError
from .linalg import ComplexMatrix
from .pulses import Channel
from .workers import run_jobs

log = logging.getLogger(__name__)

BASIS_LABELS = ("00", "01", "10", "11")
DEFAULT_SAMPLES = 10_000
DEFAULT_SEED = 1202
# Fixed so the estimate does not depend on the worker count.
SAMPLES_PER_CHUNK = 1000
SIGNIFICANT_POPULATION = 1e-3


@dataclass(frozen=True)
class IdealGate:
    label: str
    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.complex128)
        if matrix.shape != (4, 4):
            raise DimensionError(f"Ideal gate must be 4x4, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)


def ideal_cnot_tp() -> IdealGate:
    """CNOT with the transmon as control and the PPQ as target."""
    matrix = np.eye(4, dtype=np.complex128)[:, [0, 1, 3, 2]]
    return IdealGate("CNOT_TP", matrix)


def _rx(theta: float) -> np.ndarray:
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ideal_rx(qubit: Channel | str, theta: float = 0.5 * np.pi) -> IdealGate:
    qubit = Channel(qubit)
    if qubit is Channel.TRANSMON:
        return IdealGate("RX_T", np.kron(_rx(theta), np.eye(2)))
    return IdealGate("RX_P", np.kron(np.eye(2), _rx(theta)))


def ideal_identity() -> IdealGate:
    return IdealGate("identity", np.eye(4))


def gate_for_name(name: str) -> IdealGate:
    """Resolve CNOT_TP, RX_T, RX_P (pi/2 rotations) or identity."""
    factories = {
        "CNOT_TP": ideal_cnot_tp,
        "RX_T": lambda: ideal_rx(Channel.TRANSMON),
        "RX_P": lambda: ideal_rx(Channel.PPQ),
        "identity": ideal_identity,
    }
    try:
        return factories[name]()
    except KeyError:
        raise ParameterError(
            f"Unknown gate '{name}', expected one of {sorted(factories)}"
        ) from None


def computational_block(U: npt.ArrayLike, comp_idx: tuple[int, ...]) -> ComplexMatrix:
    """Restrict a propagator to the computational states.

    U may be the full dim x dim operator or the dim x 4 operator obtained by
    propagating only the computational columns.
    """
    U = np.asarray(U)
    rows = list(comp_idx)
    if U.shape[1] == len(rows):
        return U[rows, :].copy()
    if U.shape[0] != U.shape[1]:
        raise DimensionError(f"Cannot take a computational block of shape {U.shape}")
    return U[np.ix_(rows, rows)].copy()


@dataclass(frozen=True)
class GateFrame:
    """Qubit frame a gate block is reported in.

    Each qubit's computational pair rotates at the given frequency (GHz);
    None keeps the idle transition frequency of that qubit.
    """

    f_T: Optional[float] = None
    f_P: Optional[float] = None


# Frame of the quoted qubit frequencies, where the reference schedules
# and their virtual-Z angles are defined.
REFERENCE_FRAME = GateFrame(f_T=REFERENCE_F01_T_GHZ, f_P=REFERENCE_F12_P_GHZ)


def _frame_energies(model: CompositeModel, frame: Optional[GateFrame]) -> np.ndarray:
    energies = model.H0_diag[list(model.comp_idx)]
    if frame is None or (frame.f_T is None and frame.f_P is None):
        return energies
    base = energies[0]
    omega_T = energies[2] - base if frame.f_T is None else TWO_PI * frame.f_T
    omega_P = energies[1] - base if frame.f_P is None else TWO_PI * frame.f_P
    transmon = np.array([0.0, 0.0, 1.0, 1.0])
    ppq = np.array([0.0, 1.0, 0.0, 1.0])
    return base + omega_T * transmon + omega_P * ppq


def to_rotating_frame_block(
        B: npt.ArrayLike,
        model: CompositeModel,
        duration: float,
        frame: Optional[GateFrame] = None
) -> ComplexMatrix:
    """Move a lab-frame block into a rotating frame.

    Without a frame the idle phases exp(-i E_a T) of the computational rows
    are removed; a GateFrame replaces the idle qubit frequencies by its own.
    """
    energies = _frame_energies(model, frame)
    return np.exp(1j * duration * energies)[:, None] * np.asarray(B)


def virtual_z(theta_T: float, theta_P: float) -> np.ndarray:
    """Diagonal of R_Z(theta_T) (x) R_Z(theta_P).

    R_Z(theta) = diag(exp(-i theta/2), exp(+i theta/2)) on each pair.
    """
    levels = np.array([0.0, 1.0])
    transmon = np.exp(1j * theta_T * (levels - 0.5))
    ppq = np.exp(1j * theta_P * (levels - 0.5))
    return np.kron(transmon, ppq)


def apply_vz(B: npt.ArrayLike, theta_T: float, theta_P: float) -> ComplexMatrix:
    return virtual_z(theta_T, theta_P)[:, None] * np.asarray(B)


def random_states(count: int, seed_sequence: np.random.SeedSequence) -> np.ndarray:
    """Haar-random 4-dimensional pure states as rows."""
    rng = np.random.Generator(np.random.Philox(seed_sequence))
    states = rng.standard_normal((count, 4)) + 1j * rng.standard_normal((count, 4))
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def _chunk_sizes(n_samples: int) -> list[int]:
    full, rest = divmod(n_samples, SAMPLES_PER_CHUNK)
    return [SAMPLES_PER_CHUNK] * full + ([rest] if rest else [])


def fidelity_samples(
        B: npt.ArrayLike,
        ideal: IdealGate,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
        workers: int = 1
) -> np.ndarray:
    """Per-state overlaps |<psi| ideal^dagger B |psi>| in sample order."""
    if n_samples < 1:
        raise ParameterError(f"Fidelity needs at least one sample, got {n_samples}")
    operator = ideal.matrix.conj().T @ np.asarray(B)
    sizes = _chunk_sizes(n_samples)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def chunk(job: tuple[int, np.random.SeedSequence]) -> np.ndarray:
        size, seed_sequence = job
        states = random_states(size, seed_sequence)
        return np.abs(np.einsum("ni,ij,nj->n", states.conj(), operator, states))

    return np.concatenate(run_jobs(chunk, list(zip(sizes, seeds)), max_workers=workers))


def estimate_fidelity(
        B: npt.ArrayLike,
        ideal: IdealGate,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
        workers: int = 1
) -> float:
    """Average |<psi| ideal^dagger B |psi>| over seeded Haar-random states.

    Raises:
        ParameterError: n_samples < 1.
    """
    samples = fidelity_samples(B, ideal, n_samples, seed, workers)
    return float(min(1.0, samples.mean()))


@dataclass(frozen=True)
class TomographyRow:
    """Output of one basis input.

    Attributes:
        input_label: Basis input |ij>.
        populations: |amplitude|^2 per computational output.
        leakage: 1 - sum(populations).
        dominant: Label of the largest output amplitude.
        phases: Phase of each significant amplitude relative to the
            dominant amplitude of the |00> input's output.
        column_phases: Phase of each significant amplitude relative to the
            first significant amplitude of the same output.
    """

    input_label: str
    populations: tuple[float, ...]
    leakage: float
    dominant: str
    phases: dict[str, float]
    column_phases: dict[str, float]


@dataclass(frozen=True)
class TomographyTable:
    rows: tuple[TomographyRow, ...]

    def row(self, label: str) -> TomographyRow:
        return self.rows[BASIS_LABELS.index(label)]

    def to_rows(self) -> list[dict[str, Any]]:
        """Flat records for CSV output."""
        records = []
        for row in self.rows:
            record = {"input": row.input_label, "dominant": row.dominant, "leakage": row.leakage}
            for label, population in zip(BASIS_LABELS, row.populations):
                record[f"pop_{label}"] = population
            for label in BASIS_LABELS:
                record[f"phase_{label}"] = row.phases.get(label, "")
                record[f"column_phase_{label}"] = row.column_phases.get(label, "")
            records.append(record)
        return records


def _wrap(angle: float) -> float:
    return float(np.angle(np.exp(1j * angle)))


def state_tomography(
        B: npt.ArrayLike,
        threshold: float = SIGNIFICANT_POPULATION
) -> TomographyTable:
    """Populations, leakage and relative phases for each basis input."""
    B = np.asarray(B)
    if B.shape != (4, 4):
        raise DimensionError(f"Tomography needs a 4x4 block, got {B.shape}")
    reference = B[np.argmax(np.abs(B[:, 0])), 0]
    reference_phase = np.angle(reference) if abs(reference) > 0 else 0.0

    rows = []
    for column, input_label in enumerate(BASIS_LABELS):
        amplitudes = B[:, column]
        populations = np.abs(amplitudes) ** 2
        significant = [k for k in range(4) if populations[k] >= threshold]
        first_phase = np.angle(amplitudes[significant[0]]) if significant else 0.0
        rows.append(TomographyRow(
            input_label=input_label,
            populations=tuple(float(p) for p in populations),
            leakage=float(max(0.0, 1.0 - populations.sum())),
            dominant=BASIS_LABELS[int(np.argmax(populations))],
            phases={
                BASIS_LABELS[k]: _wrap(np.angle(amplitudes[k]) - reference_phase)
                for k in significant
            },
            column_phases={
                BASIS_LABELS[k]: _wrap(np.angle(amplitudes[k]) - first_phase)
                for k in significant
            },
        ))
    return TomographyTable(tuple(rows))


def _matrix_to_dict(matrix: np.ndarray) -> dict[str, list[list[float]]]:
    return {"re": np.real(matrix).tolist(), "im": np.imag(matrix).tolist()}


@dataclass
class GateReport:
    """Evaluation of one gate schedule."""

    gate: str
    comp_block: ComplexMatrix
    fidelity: float
    sample_count: int
    rng_seed: int
    tomography: TomographyTable
    tau: float
    schedule: dict[str, Any] = field(default_factory=dict)
    unitarity_deviation: Optional[float] = None

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def leakage(self) -> dict[str, float]:
        return {row.input_label: row.leakage for row in self.tomography.rows}

    def to_dict(self) -> dict[str, Any]:
        data = {
            "gate": self.gate,
            "fidelity": self.fidelity,
            "infidelity": self.infidelity,
            "sample_count": self.sample_count,
            "rng_seed": self.rng_seed,
            "tau_ns": self.tau,
            "schedule": dict(self.schedule),
            "comp_block": _matrix_to_dict(self.comp_block),
            "leakage": self.leakage,
            "tomography": self.tomography.to_rows(),
        }
        if self.unitarity_deviation is not None:
            data["unitarity_deviation"] = self.unitarity_deviation
        return data


def build_gate_report(
        B: npt.ArrayLike,
        ideal: IdealGate,
        tau: float,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
        schedule: Optional[dict[str, Any]] = None,
        workers: int = 1
) -> GateReport:
    """Score a virtual-Z corrected block against its target."""
    B = np.asarray(B)
    fidelity = estimate_fidelity(B, ideal, n_samples, seed, workers)
    log.info(f"{ideal.label}: F = {fidelity:.6f} ({n_samples} samples, seed {seed})")
    return GateReport(
        gate=ideal.label,
        comp_block=B,
        fidelity=fidelity,
        sample_count=n_samples,
        rng_seed=seed,
        tomography=state_tomography(B),
        tau=tau,
        schedule=schedule or {},
    )
