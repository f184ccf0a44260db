import numpy as np
import pytest

from transmon_ppq.device import (
    FLUX_SNAP_GHZ,
    REFERENCE_F01_T_GHZ,
    TWO_PI,
    ChargeKind,
    DeviceSpec,
    Parity,
    assemble_composite,
    build_charge_hamiltonian,
    build_ppq,
    build_resonator,
    build_transmon,
    calibrate_flux,
    classify_parity,
    diagonalize_and_truncate,
    qubit_frequencies,
    spectrum_rows,
    squid_josephson_energy,
    transmon_frequencies,
)
from transmon_ppq.errors import AssemblyError, CalibrationRangeError, ParameterError
from transmon_ppq.linalg import kron


def test_squid_energy_limits():
    e_sigma = TWO_PI * 6.0
    assert squid_josephson_energy(e_sigma, 1.01, 0.0) == pytest.approx(e_sigma)
    d = 0.01 / 2.01
    assert squid_josephson_energy(e_sigma, 1.01, np.pi / 2) == pytest.approx(e_sigma * d)
    with pytest.raises(ParameterError):
        squid_josephson_energy(-1.0, 1.01, 0.0)


@pytest.mark.parametrize("kind, band", [
    (ChargeKind.SINGLE_PAIR, 1),
    (ChargeKind.PAIR_OF_PAIRS, 2),
])
def test_charge_hamiltonian_bands(kind, band):
    hamiltonian = build_charge_hamiltonian(kind, E_C=1.0, E_J=2.0, n_g=0.0, n_max=10)
    assert hamiltonian.shape == (21, 21)
    np.testing.assert_array_equal(hamiltonian, hamiltonian.T)
    np.testing.assert_allclose(np.diag(hamiltonian), 4.0 * np.arange(-10, 11) ** 2)
    np.testing.assert_allclose(np.diag(hamiltonian, k=band), -1.0)
    other = 2 if band == 1 else 1
    np.testing.assert_array_equal(np.diag(hamiltonian, k=other), 0.0)


def test_classify_parity():
    even = np.zeros(21)
    even[10] = 1.0
    odd = np.zeros(21)
    odd[11] = 1.0
    assert classify_parity(even) is Parity.EVEN
    assert classify_parity(odd) is Parity.ODD
    assert classify_parity((even + odd) / np.sqrt(2)) is Parity.MIXED


def test_bare_charge_ladder_without_tunneling():
    spec = DeviceSpec(E_J_P=0.0)
    ppq = build_ppq(spec)
    E_C = spec.E_C_P
    np.testing.assert_allclose(ppq.energies, [0.0, 4 * E_C, 4 * E_C, 16 * E_C], atol=1e-9)
    assert ppq.parity == (Parity.EVEN, Parity.ODD, Parity.ODD, Parity.EVEN)


def test_ppq_levels_have_definite_parity(device):
    ppq = device.ppq
    assert Parity.MIXED not in ppq.parity
    assert ppq.parity[0] is Parity.EVEN
    assert ppq.parity[1] == ppq.parity[2]
    for i in range(ppq.levels):
        for j in range(ppq.levels):
            if ppq.parity[i] != ppq.parity[j]:
                assert ppq.n_op[i, j] == 0.0
    assert abs(ppq.n_op[1, 2]) > 1e-3


def test_truncated_models_are_consistent(device):
    for qubit in (device.transmon, device.ppq):
        assert qubit.levels == 4
        assert qubit.energies[0] == 0.0
        assert np.all(np.diff(qubit.energies) > 0)
        np.testing.assert_allclose(qubit.n_op, np.conj(qubit.n_op).T, atol=1e-14)
        np.testing.assert_allclose(qubit.V.conj().T @ qubit.V, np.eye(4), atol=1e-12)
    assert not device.ppq.energies.flags.writeable


def test_ppq_jacobi_matches_lapack():
    spec = DeviceSpec.default()
    lapack = build_ppq(spec, method="lapack")
    jacobi = build_ppq(spec, method="jacobi")
    np.testing.assert_allclose(jacobi.energies, lapack.energies, atol=1e-9)
    np.testing.assert_allclose(np.abs(jacobi.n_op), np.abs(lapack.n_op), atol=1e-8)


def test_default_device_sits_at_zero_flux(device):
    # the quoted f01 lies just above the zero-flux frequency
    assert device.phi_e == 0.0
    assert device.transmon.transition_ghz(0, 1) == pytest.approx(2.8827, abs=1e-4)
    frequencies = qubit_frequencies(device)
    assert frequencies["f01_T"] == pytest.approx(REFERENCE_F01_T_GHZ, abs=FLUX_SNAP_GHZ)
    assert frequencies["anharmonicity_T"] < 0
    assert 2.0 < frequencies["f12_P"] < 4.0


def test_transmon_frequency_decreases_with_flux():
    spec = DeviceSpec.default()
    f_low, _ = transmon_frequencies(spec, 0.1)
    f_high, _ = transmon_frequencies(spec, 0.5)
    assert f_high < f_low


def test_zero_flux_transmon_spectrum():
    f01, anharmonicity = transmon_frequencies(DeviceSpec.default(), 0.0)
    assert f01 == pytest.approx(2.8827, abs=1e-4)
    assert anharmonicity == pytest.approx(-0.247, abs=1e-3)


def test_transmon_ground_state_has_mixed_parity(device):
    assert device.transmon.parity[0] is Parity.MIXED
    assert classify_parity(device.transmon.V[:, 0]) is Parity.MIXED


def test_spectra_converge_in_charge_cutoff():
    coarse = DeviceSpec(n_max=50)
    fine = DeviceSpec(n_max=80)
    for build in (lambda spec: build_transmon(spec, 0.0), build_ppq):
        np.testing.assert_allclose(
            build(fine).energies, build(coarse).energies, rtol=1e-9, atol=1e-12
        )
    spec = DeviceSpec.default()
    ground = [
        np.linalg.eigvalsh(
            build_charge_hamiltonian(ChargeKind.PAIR_OF_PAIRS, spec.E_C_P, spec.E_J_P, 0.0, n_max)
        )[0]
        for n_max in (50, 80)
    ]
    assert ground[0] == pytest.approx(ground[1], rel=1e-10)


def test_charge_hamiltonians_are_real_symmetric(device):
    # no complex phases at zero offset charge, so time reversal holds
    spec = device.spec
    for kind, E_C, E_J in (
        (ChargeKind.SINGLE_PAIR, spec.E_C_T, spec.E_J_sigma_T),
        (ChargeKind.PAIR_OF_PAIRS, spec.E_C_P, spec.E_J_P),
    ):
        hamiltonian = build_charge_hamiltonian(kind, E_C, E_J, 0.0, spec.n_max)
        assert np.isrealobj(hamiltonian) or np.all(np.imag(hamiltonian) == 0)
        np.testing.assert_array_equal(hamiltonian, np.conj(hamiltonian).T)
    for qubit in (device.transmon, device.ppq):
        np.testing.assert_allclose(np.imag(qubit.n_op), 0.0, atol=1e-14)


def test_calibration_at_zero_flux_returns_zero():
    spec = DeviceSpec.default()
    f_zero, _ = transmon_frequencies(spec, 0.0)
    assert calibrate_flux(spec, f_zero) == 0.0


def test_calibration_snaps_just_above_zero_flux(caplog):
    spec = DeviceSpec.default()
    f_zero, _ = transmon_frequencies(spec, 0.0)
    assert calibrate_flux(spec, REFERENCE_F01_T_GHZ) == 0.0
    assert calibrate_flux(spec, f_zero + 0.5 * FLUX_SNAP_GHZ) == 0.0
    assert "using phi_e = 0" in caplog.text
    with pytest.raises(CalibrationRangeError):
        calibrate_flux(spec, f_zero + 2 * FLUX_SNAP_GHZ)


def test_calibration_below_zero_flux_frequency():
    spec = DeviceSpec.default()
    phi_e = calibrate_flux(spec, 2.8)
    assert 0.0 < phi_e < np.pi / 2
    assert transmon_frequencies(spec, phi_e)[0] == pytest.approx(2.8, abs=1e-6)


@pytest.mark.parametrize("target", [10.0, 0.01])
def test_calibration_out_of_band(target):
    with pytest.raises(CalibrationRangeError):
        calibrate_flux(DeviceSpec.default(), target)


def test_explicit_flux_bypasses_calibration():
    spec = DeviceSpec(phi_e=0.2)
    transmon = build_transmon(spec, 0.2)
    f01, _ = transmon_frequencies(spec, 0.2)
    assert transmon.transition_ghz(0, 1) == pytest.approx(f01)


@pytest.mark.parametrize("values", [
    {"E_C_T": -1.0},
    {"n_max": 5},
    {"d_trunc": 1},
    {"G": -0.1},
])
def test_device_spec_validation(values):
    with pytest.raises(ParameterError):
        DeviceSpec(**values)


def test_truncation_message_names_range():
    with pytest.raises(ParameterError, match=r"\[2, 21\]"):
        DeviceSpec(n_max=10, d_trunc=22)


def test_diagonalize_rejects_bad_truncation():
    hamiltonian = build_charge_hamiltonian(ChargeKind.SINGLE_PAIR, 1.0, 10.0, 0.0, 10)
    with pytest.raises(ParameterError):
        diagonalize_and_truncate(hamiltonian, ChargeKind.SINGLE_PAIR, 30)
    with pytest.raises(ParameterError):
        diagonalize_and_truncate(hamiltonian[:20, :20], ChargeKind.SINGLE_PAIR, 4)


def test_resonator_operators():
    resonator = build_resonator(2.0, 4)
    a = resonator.annihilation
    np.testing.assert_allclose(np.diag(a.T @ a), [0, 1, 2, 3])
    np.testing.assert_allclose(resonator.energies, [0, 2, 4, 6])
    np.testing.assert_allclose(resonator.position, a + a.T)


def test_composite_layout(device, model):
    d = model.levels
    assert model.dim == 64
    assert model.comp_idx == (1, 2, 5, 6)
    for k in range(d):
        for m_t in range(d):
            for m_p in range(d):
                i = model.index(k, m_t, m_p)
                expected = (
                    device.resonator.energies[k]
                    + device.transmon.energies[m_t]
                    + device.ppq.energies[m_p]
                )
                assert model.H0_diag[i] == pytest.approx(expected)
    expected = kron(device.resonator.position, device.transmon.n_op, np.eye(d))
    np.testing.assert_allclose(model.X_R_NT, expected)
    assert model.drive_prefactor_T == pytest.approx(-8.0 * device.spec.E_C_T)
    assert model.drive_prefactor_P == pytest.approx(-8.0 * device.spec.E_C_P)
    interaction = model.interaction()
    np.testing.assert_allclose(interaction, interaction.conj().T)


def test_assembly_rejects_mismatched_sizes(device):
    small = build_resonator(1.0, 3)
    with pytest.raises(AssemblyError):
        assemble_composite(device.transmon, device.ppq, small, 0.1)


def test_spectrum_rows(device):
    rows = spectrum_rows(device)
    assert len(rows) == 12
    assert {row["subsystem"] for row in rows} == {"transmon", "ppq", "resonator"}
    ppq_rows = [row for row in rows if row["subsystem"] == "ppq"]
    assert ppq_rows[0]["parity"] == "even"
    assert ppq_rows[0]["energy_GHz"] == 0.0
