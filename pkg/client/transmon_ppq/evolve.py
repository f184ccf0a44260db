"""Time evolution of the composite system.

H(t) = H0 + H1(t) with H0 diagonal in the idle eigenbasis and

    H1(t) = c_T n_gT(t) N_T + c_P n_gP(t) N_P + G (X_R N_T + X_R N_P).

The four terms of H1 commute and share the eigenbasis W of
(a + a^dagger) (x) n_T (x) n_P, so each second-order Suzuki-Trotter step

    exp(-i tau H0/2) exp(-i tau H1(t_mid)) exp(-i tau H0/2)

is a diagonal phase in the W basis sandwiched between diagonal phases in
the idle basis. Consecutive H0 half steps are merged, which leaves one
matrix product per step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from .device import CompositeModel
from .errors import DimensionError, ParameterError
from .linalg import (
    ComplexMatrix,
    EigenMethod,
    eig_hermitian,
    expm_hermitian,
    kron,
    unitarity_deviation,
)
from .pulses import Channel, PulseSchedule, idle_schedule, offset_charge
from .workers import run_jobs

log = logging.getLogger(__name__)

DEFAULT_TAU = 1e-3
DEFAULT_RECORD_STRIDE = 1000
# Steps whose drive phases are generated in one vectorized block.
CHUNK_STEPS = 4096
# Relative slack when splitting a duration into whole steps.
STEP_SLACK = 1e-9

Subsystem = Union[Channel, str]


@dataclass(frozen=True)
class Propagator:
    """Accumulated evolution operator.

    ``U`` is dim x dim, or dim x m when only m initial columns were
    propagated.
    """

    U: ComplexMatrix
    t_start: float
    t_end: float
    tau: float
    step_count: int

    def unitarity_deviation(self) -> float:
        return unitarity_deviation(self.U)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray
    bloch_T: np.ndarray
    bloch_P: np.ndarray
    leakage: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class TrajectoryRecorder:
    """Collects state samples during propagation.

    Samples are stored in the idle rotating frame unless ``rotating`` is
    False. The recorder is owned by a single propagation.
    """

    model: CompositeModel
    rotating: bool = True
    _times: list[float] = field(default_factory=list, init=False, repr=False)
    _states: list[np.ndarray] = field(default_factory=list, init=False, repr=False)

    def record(self, t: float, state: np.ndarray) -> None:
        state = np.asarray(state, dtype=np.complex128).reshape(-1)
        if self.rotating:
            state = rotating_frame(state, self.model, t)
        self._times.append(float(t))
        self._states.append(state)

    def result(self) -> TrajectoryRecord:
        states = np.array(self._states).reshape(len(self._states), self.model.dim)
        return TrajectoryRecord(
            times=np.array(self._times),
            states=states,
            bloch_T=np.array([reduced_bloch(s, Channel.TRANSMON, self.model) for s in states]).reshape(-1, 3),
            bloch_P=np.array([reduced_bloch(s, Channel.PPQ, self.model) for s in states]).reshape(-1, 3),
            leakage=np.array([leakage(s, self.model) for s in states]),
        )


@dataclass(frozen=True)
class DriveBasis:
    """Common eigenbasis of the drive and coupling operators.

    Attributes:
        W: Unitary whose columns diagonalize N_T, N_P and X_R.
        n_T: Eigenvalues of N_T along the columns of W.
        n_P: Eigenvalues of N_P along the columns of W.
        coupling: Eigenvalues of G (X_R N_T + X_R N_P).
    """

    W: ComplexMatrix
    W_dag: ComplexMatrix
    n_T: np.ndarray
    n_P: np.ndarray
    coupling: np.ndarray
    prefactor_T: float
    prefactor_P: float

    @classmethod
    def from_model(cls, model: CompositeModel, method: EigenMethod = "lapack") -> "DriveBasis":
        transmon = eig_hermitian(model.n_T, method=method)
        ppq = eig_hermitian(model.n_P, method=method)
        resonator = eig_hermitian(model.x_R, method=method)
        ones = np.ones(model.levels)
        n_t = kron(ones, transmon.eigenvalues, ones)
        n_p = kron(ones, ones, ppq.eigenvalues)
        x_r = kron(resonator.eigenvalues, ones, ones)
        w = kron(resonator.eigenvectors, transmon.eigenvectors, ppq.eigenvectors)
        return cls(
            W=w,
            W_dag=w.conj().T,
            n_T=n_t,
            n_P=n_p,
            coupling=model.G * x_r * (n_t + n_p),
            prefactor_T=model.drive_prefactor_T,
            prefactor_P=model.drive_prefactor_P,
        )

    def drive_spectrum(self, g_T: npt.ArrayLike, g_P: npt.ArrayLike) -> np.ndarray:
        """Eigenvalues of H1 for offset charges g_T, g_P; shape (..., dim)."""
        g_T = np.asarray(g_T, dtype=float)[..., None]
        g_P = np.asarray(g_P, dtype=float)[..., None]
        return self.prefactor_T * g_T * self.n_T + self.prefactor_P * g_P * self.n_P + self.coupling

    def exp_drive(self, g_T: float, g_P: float, tau: float) -> ComplexMatrix:
        """Return exp(-i tau H1) in the idle basis."""
        phases = np.exp(-1j * tau * self.drive_spectrum(g_T, g_P))
        return (self.W * phases) @ self.W_dag

    def conjugate_diagonal(self, diagonal: np.ndarray) -> ComplexMatrix:
        """Return W^dagger diag(d) W."""
        return (self.W_dag * diagonal) @ self.W


def drive_hamiltonian(model: CompositeModel, schedule: PulseSchedule, t: float) -> ComplexMatrix:
    g_T = offset_charge(schedule, Channel.TRANSMON, t)
    g_P = offset_charge(schedule, Channel.PPQ, t)
    return (
        model.drive_prefactor_T * g_T * model.N_T
        + model.drive_prefactor_P * g_P * model.N_P
        + model.interaction()
    )


def _half_step(model: CompositeModel, tau: float) -> np.ndarray:
    return np.exp(-0.5j * tau * model.H0_diag)


def trotter_step(
        U_acc: ComplexMatrix,
        model: CompositeModel,
        schedule: PulseSchedule,
        t_mid: float,
        tau: float,
        basis: Optional[DriveBasis] = None,
        fast: bool = True
) -> ComplexMatrix:
    """Apply one symmetric splitting step to U_acc.

    Args:
        U_acc: Accumulated operator (dim x m).
        t_mid: Absolute midpoint time of the step.
        tau: Step width.
        basis: Precomputed drive basis, built on demand for the fast path.
        fast: Use the commuting-term factorization; otherwise exponentiate
            H1 with expm_hermitian.
    """
    half = _half_step(model, tau)
    if fast:
        basis = basis or DriveBasis.from_model(model)
        drive = basis.exp_drive(
            offset_charge(schedule, Channel.TRANSMON, t_mid),
            offset_charge(schedule, Channel.PPQ, t_mid),
            tau,
        )
    else:
        drive = expm_hermitian(drive_hamiltonian(model, schedule, t_mid), -tau)
    return half[:, None] * (drive @ (half[:, None] * np.asarray(U_acc)))


def step_grid(t0: float, t1: float, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and widths of the steps covering [t0, t1].

    Whole steps of width tau are followed by one shortened step when the
    duration is not a multiple of tau.

    Raises:
        ParameterError: tau <= 0 or t1 <= t0.
    """
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    if not t1 > t0:
        raise ParameterError(f"t1 must exceed t0, got [{t0}, {t1}]")
    duration = t1 - t0
    n_full = int(np.floor(duration / tau + STEP_SLACK))
    residual = duration - n_full * tau
    midpoints = t0 + (np.arange(n_full) + 0.5) * tau
    widths = np.full(n_full, tau)
    if residual > STEP_SLACK * tau:
        midpoints = np.append(midpoints, t0 + n_full * tau + 0.5 * residual)
        widths = np.append(widths, residual)
    return midpoints, widths


def _initial_columns(model: CompositeModel, initial: Optional[npt.ArrayLike]) -> np.ndarray:
    if initial is None:
        return np.eye(model.dim, dtype=np.complex128)
    columns = np.asarray(initial, dtype=np.complex128)
    if columns.ndim == 1:
        columns = columns[:, None]
    if columns.shape[0] != model.dim:
        raise DimensionError(f"Initial states need {model.dim} rows, got {columns.shape[0]}")
    return columns


def propagate(
        model: CompositeModel,
        schedule: PulseSchedule,
        t0: float,
        t1: float,
        tau: float = DEFAULT_TAU,
        recorder: Optional[TrajectoryRecorder] = None,
        initial: Optional[npt.ArrayLike] = None,
        record_stride: int = DEFAULT_RECORD_STRIDE,
        basis: Optional[DriveBasis] = None
) -> Propagator:
    """Suzuki-Trotter propagator from t0 to t1.

    Args:
        model: Composite model.
        schedule: Drive schedule, evaluated at absolute step midpoints.
        t0: Start time (ns).
        t1: End time (ns).
        tau: Step width (ns).
        recorder: Receives the state every ``record_stride`` steps plus the
            end points; requires a single initial state.
        initial: Columns to propagate (dim or dim x m); identity when None.
        record_stride: Steps between recorded samples.
        basis: Precomputed DriveBasis of the model.

    Returns:
        Propagator with U of shape dim x m.
    """
    midpoints, widths = step_grid(t0, t1, tau)
    columns = _initial_columns(model, initial)
    if recorder is not None:
        if columns.shape[1] != 1:
            raise ParameterError("Recording needs exactly one initial state")
        if record_stride < 1:
            raise ParameterError(f"record_stride must be >= 1, got {record_stride}")
        recorder.record(t0, columns[:, 0])

    basis = basis or DriveBasis.from_model(model)
    n_steps = len(widths)
    half_tau = _half_step(model, tau)
    merged_full = basis.conjugate_diagonal(half_tau * half_tau)
    last_half = _half_step(model, widths[-1])
    if widths[-1] != tau and n_steps > 1:
        merged_last = basis.conjugate_diagonal(half_tau * last_half)
    else:
        merged_last = merged_full

    # Accumulate in the W basis: v_k = E_k M v_{k-1}.
    v = basis.W_dag @ (_half_step(model, widths[0])[:, None] * columns)
    for start in range(0, n_steps, CHUNK_STEPS):
        stop = min(start + CHUNK_STEPS, n_steps)
        g_T = offset_charge(schedule, Channel.TRANSMON, midpoints[start:stop])
        g_P = offset_charge(schedule, Channel.PPQ, midpoints[start:stop])
        phases = np.exp(-1j * widths[start:stop, None] * basis.drive_spectrum(g_T, g_P))
        for offset, step in enumerate(range(start, stop)):
            if step > 0:
                v = (merged_last if step == n_steps - 1 else merged_full) @ v
            v *= phases[offset][:, None]
            done = step + 1
            if recorder is not None and done % record_stride == 0 and done < n_steps:
                recorder.record(t0 + done * tau, half_tau * (basis.W @ v[:, 0]))
        log.debug(f"Propagated {stop}/{n_steps} steps")

    U = last_half[:, None] * (basis.W @ v)
    if recorder is not None:
        recorder.record(t1, U[:, 0])
    return Propagator(U=U, t_start=t0, t_end=t1, tau=tau, step_count=n_steps)


def propagate_exact(
        model: CompositeModel,
        schedule: PulseSchedule,
        t0: float,
        t1: float,
        tau: float = DEFAULT_TAU,
        initial: Optional[npt.ArrayLike] = None,
        method: EigenMethod = "lapack"
) -> Propagator:
    """Reference propagator exponentiating H0 + H1(t_mid) at every step.

    Uses the same step midpoints as ``propagate``.
    """
    midpoints, widths = step_grid(t0, t1, tau)
    U = _initial_columns(model, initial)
    h0 = np.diag(model.H0_diag).astype(np.complex128)
    for t_mid, width in zip(midpoints, widths):
        hamiltonian = h0 + drive_hamiltonian(model, schedule, t_mid)
        U = expm_hermitian(hamiltonian, -width, method=method) @ U
    return Propagator(U=U, t_start=t0, t_end=t1, tau=tau, step_count=len(widths))


def rotating_frame(U_or_state: npt.ArrayLike, model: CompositeModel, t: float) -> np.ndarray:
    """Apply exp(+i H0 t), moving lab-frame amplitudes to the idle frame."""
    values = np.asarray(U_or_state)
    phases = np.exp(1j * t * model.H0_diag)
    return phases * values if values.ndim == 1 else phases[:, None] * values


def basis_state(model: CompositeModel, label: str) -> np.ndarray:
    """Computational state |ij>, i the transmon and j the PPQ qubit."""
    labels = ("00", "01", "10", "11")
    if label not in labels:
        raise ParameterError(f"Unknown basis label '{label}', expected one of {labels}")
    state = np.zeros(model.dim, dtype=np.complex128)
    state[model.comp_idx[labels.index(label)]] = 1.0
    return state


def plus_plus_state(model: CompositeModel) -> np.ndarray:
    """|0>_R (x) (|0> + |1>)/sqrt2 (x) (|1> + |2>)/sqrt2."""
    return 0.5 * sum(basis_state(model, label) for label in ("00", "01", "10", "11"))


def leakage(state: npt.ArrayLike, model: CompositeModel) -> float:
    """Population outside the computational states."""
    state = np.asarray(state)
    kept = np.sum(np.abs(state[list(model.comp_idx)]) ** 2)
    return float(np.clip(1.0 - kept, 0.0, 1.0))


def reduced_bloch(
        state: npt.ArrayLike,
        subsystem: Subsystem,
        model: Optional[CompositeModel] = None
) -> tuple[float, float, float]:
    """Bloch vector of one qubit's computational pair.

    The reduced density matrix is not renormalized, so a vector shorter
    than 1 signals leakage or entanglement. The transmon pair is levels
    {0, 1}, the PPQ pair levels {1, 2}.
    """
    psi = np.asarray(state, dtype=np.complex128).reshape(-1)
    d = model.levels if model is not None else int(round(len(psi) ** (1.0 / 3.0)))
    if d ** 3 != len(psi):
        raise DimensionError(f"State of length {len(psi)} is not a three-factor product")
    psi = psi.reshape(d, d, d)
    if Channel(subsystem) is Channel.TRANSMON:
        rho = np.einsum("kmp,knp->mn", psi, psi.conj())
        pair = [0, 1]
    else:
        rho = np.einsum("kmp,kmq->pq", psi, psi.conj())
        pair = [1, 2]
    block = rho[np.ix_(pair, pair)]
    return (
        float(2.0 * block[0, 1].real),
        float(2.0 * block[1, 0].imag),
        float((block[0, 0] - block[1, 1]).real),
    )


@dataclass(frozen=True)
class TrotterErrorRow:
    tau: float
    state_error: float
    state_distance: float


def state_error(psi_exact: npt.ArrayLike, psi_trotter: npt.ArrayLike) -> float:
    """1 - |<psi_exact|psi_trotter>|."""
    overlap = np.vdot(np.asarray(psi_exact), np.asarray(psi_trotter))
    return float(max(0.0, 1.0 - abs(overlap)))


def trotter_error_scan(
        model: CompositeModel,
        taus: Sequence[float],
        duration: float = 100.0,
        initial: Optional[npt.ArrayLike] = None,
        workers: int = 1
) -> list[TrotterErrorRow]:
    """Compare split-operator and exact-diagonalization free evolution.

    Args:
        model: Composite model; coupling stays on, drives are off.
        taus: Step widths to scan (ns).
        duration: Evolution time (ns).
        initial: Initial state, |++> by default.
        workers: Threads used across tau values.

    Returns:
        One row per tau in input order.
    """
    if len(taus) == 0:
        raise ParameterError("trotter_error_scan needs at least one tau")
    psi = plus_plus_state(model) if initial is None else np.asarray(initial, dtype=np.complex128)
    schedule = idle_schedule(duration)
    basis = DriveBasis.from_model(model)

    def scan_one(tau: float) -> TrotterErrorRow:
        trotter = propagate(model, schedule, 0.0, duration, tau, initial=psi, basis=basis).U[:, 0]
        exact = propagate_exact(model, schedule, 0.0, duration, tau, initial=psi).U[:, 0]
        row = TrotterErrorRow(
            tau=float(tau),
            state_error=state_error(exact, trotter),
            state_distance=float(np.linalg.norm(exact - trotter)),
        )
        log.info(f"tau={tau:.3e} ns: state error {row.state_error:.3e}")
        return row

    return run_jobs(scan_one, list(taus), max_workers=workers)
