"""Circuit models of the transmon, the PPQ and the bus resonator.

Both qubits are Cooper-pair boxes diagonalized in the charge basis
n in [-n_max, n_max]. The transmon tunnels single Cooper pairs, the
parity-protected qubit (PPQ) only pairs of Cooper pairs. All energies are
angular frequencies in rad/ns.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

import numpy as np
import numpy.typing as npt
from scipy import optimize

from .errors import AssemblyError, CalibrationRangeError, ParameterError
from .linalg import ComplexMatrix, EigenMethod, eig_hermitian, kron

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

# Frequencies quoted for the idle qubits, GHz.
REFERENCE_F01_T_GHZ = 2.883
REFERENCE_F12_P_GHZ = 2.847

# Bisection stays this far below phi_e = pi/2 where E_J reaches its minimum.
FLUX_EDGE = 1e-3
# Targets at most this far (GHz) above the zero-flux f01 calibrate to phi_e = 0.
FLUX_SNAP_GHZ = 1e-3
ENERGY_TIE_TOL = 1e-9
SMALL_GAP_WARNING = 1e-6


class ChargeKind(str, Enum):
    SINGLE_PAIR = "single-pair"
    PAIR_OF_PAIRS = "pair-of-pairs"


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"


_PARITY_RANK = {Parity.EVEN: 0, Parity.ODD: 1, Parity.MIXED: 2}


def _readonly(array: npt.ArrayLike) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class DeviceSpec:
    """Circuit parameters of the hybrid device (rad/ns unless noted).

    Defaults are the reference device values. ``phi_e = None`` requests
    calibration of the transmon flux bias to ``target_f01_T`` (GHz).
    """

    E_C_T: float = TWO_PI * 0.2
    E_J_sigma_T: float = TWO_PI * 6.0
    gamma_squid: float = 1.01
    phi_e: Optional[float] = None
    E_C_P: float = TWO_PI * 0.2
    E_J_P: float = TWO_PI * 3.0
    omega_R: float = TWO_PI * 2.4
    G: float = TWO_PI * 0.01
    n_max: int = 50
    d_trunc: int = 4
    target_f01_T: float = REFERENCE_F01_T_GHZ

    def __post_init__(self):
        positive = {
            "E_C_T": self.E_C_T,
            "E_J_sigma_T": self.E_J_sigma_T,
            "E_C_P": self.E_C_P,
            "omega_R": self.omega_R,
            "gamma_squid": self.gamma_squid,
            "target_f01_T": self.target_f01_T,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ParameterError(f"{name} must be > 0, got {value}")
        # Zero Josephson or coupling energy is kept as a diagnostic override.
        if self.E_J_P < 0:
            raise ParameterError(f"E_J_P must be >= 0, got {self.E_J_P}")
        if self.G < 0:
            raise ParameterError(f"G must be >= 0, got {self.G}")
        if self.n_max < 10:
            raise ParameterError(f"n_max must be >= 10, got {self.n_max}")
        if not 2 <= self.d_trunc <= 2 * self.n_max + 1:
            raise ParameterError(
                f"d_trunc must be in [2, 2 * n_max + 1] = [2, {2 * self.n_max + 1}], "
                f"got {self.d_trunc}"
            )

    @classmethod
    def default(cls) -> "DeviceSpec":
        return cls()


@dataclass(frozen=True)
class QubitModel:
    """Truncated eigenbasis model of one Cooper-pair box.

    Attributes:
        kind: Tunneling type of the junction.
        energies: Retained eigenenergies, ground subtracted (rad/ns).
        n_op: Charge-number operator in the retained eigenbasis.
        parity: Cooper-pair parity label per retained level.
        V: Retained eigenvectors in the charge basis (columns).
        charging_energy: E_C of the box (rad/ns), sets the drive prefactor.
    """

    kind: ChargeKind
    energies: np.ndarray
    n_op: np.ndarray
    parity: tuple[Parity, ...]
    V: np.ndarray
    charging_energy: float

    @property
    def levels(self) -> int:
        return len(self.energies)

    def transition_ghz(self, lower: int, upper: int) -> float:
        return float(self.energies[upper] - self.energies[lower]) / TWO_PI


@dataclass(frozen=True)
class ResonatorModel:
    annihilation: np.ndarray
    energies: np.ndarray

    @property
    def position(self) -> np.ndarray:
        """Return a + a^dagger."""
        return self.annihilation + self.annihilation.T


@dataclass(frozen=True)
class CompositeModel:
    """Resonator (x) transmon (x) PPQ model in the idle eigenbasis.

    Composite index of |k>|m_T>|m_P> is d^2 k + d m_T + m_P.
    """

    dim: int
    levels: int
    H0_diag: np.ndarray
    N_T: ComplexMatrix
    N_P: ComplexMatrix
    X_R_NT: ComplexMatrix
    X_R_NP: ComplexMatrix
    drive_prefactor_T: float
    drive_prefactor_P: float
    G: float
    comp_idx: tuple[int, ...]
    n_T: np.ndarray
    n_P: np.ndarray
    x_R: np.ndarray

    def index(self, k: int, m_t: int, m_p: int) -> int:
        return self.levels ** 2 * k + self.levels * m_t + m_p

    def interaction(self) -> ComplexMatrix:
        """Return H_I = G (a + a^dagger)(n_T + n_P)."""
        return self.G * (self.X_R_NT + self.X_R_NP)


@dataclass(frozen=True)
class DeviceModel:
    """Everything built from one DeviceSpec at its resolved flux bias."""

    spec: DeviceSpec
    phi_e: float
    transmon: QubitModel
    ppq: QubitModel
    resonator: ResonatorModel
    composite: CompositeModel


def squid_josephson_energy(E_J_sigma: float, gamma: float, phi_e: float) -> float:
    """Josephson energy of an asymmetric DC-SQUID.

    E_J = E_Jsigma sqrt(cos^2 phi_e + d^2 sin^2 phi_e), d = (gamma-1)/(gamma+1).
    """
    if E_J_sigma <= 0 or gamma <= 0:
        raise ParameterError("E_J_sigma and gamma must be positive")
    d = (gamma - 1.0) / (gamma + 1.0)
    return float(E_J_sigma * np.sqrt(np.cos(phi_e) ** 2 + d * d * np.sin(phi_e) ** 2))


def charge_number_operator(n_max: int) -> np.ndarray:
    return np.diag(np.arange(-n_max, n_max + 1, dtype=float))


def build_charge_hamiltonian(
        kind: ChargeKind,
        E_C: float,
        E_J: float,
        n_g: float,
        n_max: int
) -> np.ndarray:
    """Cooper-pair box Hamiltonian in the charge basis.

    Diagonal 4 E_C (n - n_g)^2; tunneling -E_J/2 on the first
    (single-pair) or second (pair-of-pairs) off-diagonals.
    """
    kind = ChargeKind(kind)
    charges = np.arange(-n_max, n_max + 1, dtype=float)
    hamiltonian = np.diag(4.0 * E_C * (charges - n_g) ** 2)
    step = 1 if kind is ChargeKind.SINGLE_PAIR else 2
    tunneling = np.full(len(charges) - step, -0.5 * E_J)
    hamiltonian += np.diag(tunneling, k=step) + np.diag(tunneling, k=-step)
    return hamiltonian


def classify_parity(eigvec: npt.ArrayLike, tol: float = 1e-8) -> Parity:
    """Label a charge-basis state by the parity of its Cooper-pair number."""
    amplitudes = np.asarray(eigvec)
    n_max = (len(amplitudes) - 1) // 2
    odd = (np.arange(-n_max, n_max + 1) % 2) != 0
    weights = np.abs(amplitudes) ** 2
    if weights[odd].sum() <= tol:
        return Parity.EVEN
    if weights[~odd].sum() <= tol:
        return Parity.ODD
    return Parity.MIXED


def _parity_sector_eigenpairs(
        hamiltonian: np.ndarray,
        method: EigenMethod
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Diagonalize even and odd charge sectors separately when decoupled."""
    dim = hamiltonian.shape[0]
    n_max = (dim - 1) // 2
    odd = (np.arange(-n_max, n_max + 1) % 2) != 0
    if np.any(hamiltonian[np.ix_(odd, ~odd)] != 0):
        return None

    values = []
    vectors = []
    for mask in (~odd, odd):
        sector = eig_hermitian(hamiltonian[np.ix_(mask, mask)], method=method)
        embedded = np.zeros((dim, len(sector.eigenvalues)), dtype=np.complex128)
        embedded[mask, :] = sector.eigenvectors
        values.append(sector.eigenvalues)
        vectors.append(embedded)
    values = np.concatenate(values)
    vectors = np.concatenate(vectors, axis=1)
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order]


def _break_ties(energies: np.ndarray, labels: list[Parity]) -> list[int]:
    """Order levels by energy, even before odd within an energy tie."""
    order = list(range(len(energies)))
    changed = True
    while changed:
        changed = False
        for pos in range(len(order) - 1):
            a, b = order[pos], order[pos + 1]
            tied = abs(energies[b] - energies[a]) <= ENERGY_TIE_TOL * max(1.0, abs(energies[a]))
            if tied and _PARITY_RANK[labels[a]] > _PARITY_RANK[labels[b]]:
                order[pos], order[pos + 1] = b, a
                changed = True
    return order


def diagonalize_and_truncate(
        H_large: npt.ArrayLike,
        kind: ChargeKind,
        d_trunc: int,
        charging_energy: float = 0.0,
        method: EigenMethod = "lapack"
) -> QubitModel:
    """Keep the lowest d_trunc eigenstates of a charge-basis Hamiltonian.

    Args:
        H_large: (2 n_max + 1)-dimensional charge Hamiltonian at the idle point.
        kind: Tunneling type, stored on the model.
        d_trunc: Number of retained levels.
        charging_energy: E_C of the box, kept for the drive prefactor.
        method: Eigensolver backend.

    Returns:
        QubitModel with ground-subtracted energies and the truncated
        charge operator V^dagger n V.
    """
    hamiltonian = np.asarray(H_large)
    dim = hamiltonian.shape[0]
    if dim % 2 != 1:
        raise ParameterError(f"Charge basis dimension must be odd, got {dim}")
    if not 2 <= d_trunc <= dim:
        raise ParameterError(f"d_trunc must lie in [2, {dim}], got {d_trunc}")

    sectors = _parity_sector_eigenpairs(hamiltonian, method)
    if sectors is None:
        decomposition = eig_hermitian(hamiltonian, method=method)
        values, vectors = decomposition.eigenvalues, decomposition.eigenvectors
    else:
        values, vectors = sectors

    # One spare level so a tie across the truncation edge is resolved.
    candidates = min(dim, d_trunc + 1)
    values = values[:candidates]
    vectors = vectors[:, :candidates]
    labels = [classify_parity(vectors[:, i]) for i in range(candidates)]
    order = _break_ties(values, labels)[:d_trunc]

    values = values[order]
    vectors = vectors[:, order]
    labels = tuple(labels[i] for i in order)

    gaps = np.diff(values)
    if np.any(gaps < SMALL_GAP_WARNING):
        log.warning(
            f"Retained {ChargeKind(kind).value} levels are nearly degenerate "
            f"(smallest gap {gaps.min():.3e} rad/ns)"
        )

    n_max = (dim - 1) // 2
    n_op = vectors.conj().T @ charge_number_operator(n_max) @ vectors
    n_op = 0.5 * (n_op + n_op.conj().T)
    if np.allclose(n_op.imag, 0.0, atol=1e-14):
        n_op = n_op.real

    return QubitModel(
        kind=ChargeKind(kind),
        energies=_readonly(values - values[0]),
        n_op=_readonly(n_op),
        parity=labels,
        V=_readonly(vectors),
        charging_energy=float(charging_energy),
    )


def build_transmon(spec: DeviceSpec, phi_e: float, method: EigenMethod = "lapack") -> QubitModel:
    E_J = squid_josephson_energy(spec.E_J_sigma_T, spec.gamma_squid, phi_e)
    hamiltonian = build_charge_hamiltonian(
        ChargeKind.SINGLE_PAIR, spec.E_C_T, E_J, 0.0, spec.n_max
    )
    return diagonalize_and_truncate(
        hamiltonian, ChargeKind.SINGLE_PAIR, spec.d_trunc, spec.E_C_T, method
    )


def build_ppq(spec: DeviceSpec, method: EigenMethod = "lapack") -> QubitModel:
    hamiltonian = build_charge_hamiltonian(
        ChargeKind.PAIR_OF_PAIRS, spec.E_C_P, spec.E_J_P, 0.0, spec.n_max
    )
    return diagonalize_and_truncate(
        hamiltonian, ChargeKind.PAIR_OF_PAIRS, spec.d_trunc, spec.E_C_P, method
    )


def transmon_frequencies(spec: DeviceSpec, phi_e: float) -> tuple[float, float]:
    """Return (f01, anharmonicity) of the idle transmon in GHz."""
    spec = _with_levels(spec, max(spec.d_trunc, 3))
    transmon = build_transmon(spec, phi_e)
    f01 = transmon.transition_ghz(0, 1)
    return f01, transmon.transition_ghz(1, 2) - f01


def _with_levels(spec: DeviceSpec, d_trunc: int) -> DeviceSpec:
    if spec.d_trunc == d_trunc:
        return spec
    values = {name: getattr(spec, name) for name in spec.__dataclass_fields__}
    values["d_trunc"] = d_trunc
    return DeviceSpec(**values)


def calibrate_flux(spec: DeviceSpec, target_f01: float, tol_ghz: float = 1e-6) -> float:
    """Find the reduced flux phi_e that puts the transmon f01 at target_f01.

    f01 decreases monotonically on [0, pi/2), so the root is bracketed by
    the zero-flux frequency and the frequency just below pi/2. A target up
    to FLUX_SNAP_GHZ above the zero-flux frequency returns 0.0 with a
    warning; the quoted 2.883 GHz sits 0.26 MHz above it at n_max = 50.

    Raises:
        CalibrationRangeError: Target outside the tunable band.
    """
    def detuning(phi: float) -> float:
        return transmon_frequencies(spec, phi)[0] - target_f01

    at_zero = detuning(0.0)
    if abs(at_zero) <= tol_ghz:
        return 0.0
    if -FLUX_SNAP_GHZ <= at_zero < 0:
        log.warning(
            f"Target f01 {target_f01} GHz is {-at_zero * 1e3:.3f} MHz above the zero-flux "
            f"frequency {at_zero + target_f01:.6f} GHz; using phi_e = 0"
        )
        return 0.0
    if at_zero < 0:
        raise CalibrationRangeError(
            f"Target f01 {target_f01} GHz is above the zero-flux frequency "
            f"{at_zero + target_f01:.6f} GHz"
        )
    upper = 0.5 * np.pi - FLUX_EDGE
    at_edge = detuning(upper)
    if at_edge > 0:
        raise CalibrationRangeError(
            f"Target f01 {target_f01} GHz is below the tunable band "
            f"(minimum {at_edge + target_f01:.6f} GHz)"
        )

    phi_e = float(optimize.bisect(detuning, 0.0, upper, xtol=1e-13, maxiter=200))
    residual = detuning(phi_e)
    if abs(residual) > tol_ghz:
        log.warning(f"Flux calibration residual {residual:.3e} GHz exceeds {tol_ghz:.0e}")
    log.info(f"Calibrated phi_e = {phi_e:.12f} rad for f01 = {target_f01} GHz")
    return phi_e


def build_resonator(omega_R: float, d: int = 4) -> ResonatorModel:
    """Truncated harmonic oscillator: a with sqrt(k+1) on the superdiagonal."""
    annihilation = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)
    return ResonatorModel(
        annihilation=_readonly(annihilation),
        energies=_readonly(omega_R * np.arange(d, dtype=float)),
    )


def assemble_composite(
        transmon: QubitModel,
        ppq: QubitModel,
        resonator: ResonatorModel,
        G: float
) -> CompositeModel:
    """Build the idle energies and drive/coupling operators of the full system.

    Raises:
        AssemblyError: Subsystems are truncated to different sizes.
    """
    d = resonator.energies.shape[0]
    if transmon.levels != d or ppq.levels != d:
        raise AssemblyError(
            f"Subsystem sizes differ: resonator {d}, transmon {transmon.levels}, "
            f"ppq {ppq.levels}"
        )

    identity = np.eye(d)
    h0 = (
        resonator.energies[:, None, None]
        + transmon.energies[None, :, None]
        + ppq.energies[None, None, :]
    ).reshape(-1)
    x_r = resonator.position
    comp_idx = tuple(d * i + (j + 1) for i in (0, 1) for j in (0, 1))

    return CompositeModel(
        dim=d ** 3,
        levels=d,
        H0_diag=_readonly(h0),
        N_T=_readonly(kron(identity, transmon.n_op, identity).astype(np.complex128)),
        N_P=_readonly(kron(identity, identity, ppq.n_op).astype(np.complex128)),
        X_R_NT=_readonly(kron(x_r, transmon.n_op, identity).astype(np.complex128)),
        X_R_NP=_readonly(kron(x_r, identity, ppq.n_op).astype(np.complex128)),
        drive_prefactor_T=-8.0 * transmon.charging_energy,
        drive_prefactor_P=-8.0 * ppq.charging_energy,
        G=float(G),
        comp_idx=comp_idx,
        n_T=transmon.n_op,
        n_P=ppq.n_op,
        x_R=_readonly(x_r),
    )


def build_device(spec: DeviceSpec, method: EigenMethod = "lapack") -> DeviceModel:
    """Diagonalize all subsystems and assemble the composite model.

    The flux bias is calibrated first when ``spec.phi_e`` is None.
    """
    phi_e = spec.phi_e
    if phi_e is None:
        phi_e = calibrate_flux(spec, spec.target_f01_T)
    transmon = build_transmon(spec, phi_e, method)
    ppq = build_ppq(spec, method)
    resonator = build_resonator(spec.omega_R, spec.d_trunc)
    composite = assemble_composite(transmon, ppq, resonator, spec.G)
    log.debug(
        f"Built device: f01_T={transmon.transition_ghz(0, 1):.6f} GHz, "
        f"f12_P={ppq.transition_ghz(1, 2):.6f} GHz"
    )
    return DeviceModel(
        spec=spec,
        phi_e=float(phi_e),
        transmon=transmon,
        ppq=ppq,
        resonator=resonator,
        composite=composite,
    )


def qubit_frequencies(device: DeviceModel) -> dict[str, float]:
    """Computational transition frequencies in GHz."""
    transmon, ppq = device.transmon, device.ppq
    frequencies = {
        "f01_T": transmon.transition_ghz(0, 1),
        "f12_P": ppq.transition_ghz(1, 2),
    }
    if transmon.levels > 2:
        frequencies["anharmonicity_T"] = transmon.transition_ghz(1, 2) - frequencies["f01_T"]
    return frequencies


def spectrum_rows(device: DeviceModel) -> list[dict[str, Any]]:
    """Rows (subsystem, level, energy_GHz, parity) for the spectrum report."""
    rows = []
    for name, model in (("transmon", device.transmon), ("ppq", device.ppq)):
        for level, (energy, parity) in enumerate(zip(model.energies, model.parity)):
            rows.append({
                "subsystem": name,
                "level": level,
                "energy_GHz": float(energy) / TWO_PI,
                "parity": parity.value,
            })
    for level, energy in enumerate(device.resonator.energies):
        rows.append({
            "subsystem": "resonator",
            "level": level,
            "energy_GHz": float(energy) / TWO_PI,
            "parity": "",
        })
    return rows
