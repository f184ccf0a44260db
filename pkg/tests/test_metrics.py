import json

import numpy as np
import pytest

from transmon_ppq.device import TWO_PI
from transmon_ppq.errors import DimensionError, ParameterError
from transmon_ppq.metrics import (
    DEFAULT_SEED,
    REFERENCE_FRAME,
    GateFrame,
    apply_vz,
    build_gate_report,
    computational_block,
    estimate_fidelity,
    fidelity_samples,
    gate_for_name,
    ideal_cnot_tp,
    ideal_identity,
    ideal_rx,
    state_tomography,
    to_rotating_frame_block,
    virtual_z,
)


def test_cnot_permutes_target_when_control_set():
    cnot = ideal_cnot_tp().matrix
    np.testing.assert_allclose(cnot @ cnot.conj().T, np.eye(4))
    np.testing.assert_allclose(cnot, cnot.conj().T)
    np.testing.assert_allclose(cnot @ np.eye(4)[:, 2], np.eye(4)[:, 3])
    np.testing.assert_allclose(cnot @ np.eye(4)[:, 1], np.eye(4)[:, 1])


@pytest.mark.parametrize("name", ["RX_T", "RX_P"])
def test_rx_gates(name):
    gate = gate_for_name(name)
    assert gate.label == name
    np.testing.assert_allclose(gate.matrix @ gate.matrix.conj().T, np.eye(4), atol=1e-15)
    # two quarter turns make -iX on the addressed qubit
    flip = -1j * np.array([[0, 1], [1, 0]])
    expected = np.kron(flip, np.eye(2)) if name == "RX_T" else np.kron(np.eye(2), flip)
    np.testing.assert_allclose(gate.matrix @ gate.matrix, expected, atol=1e-15)


def test_rx_acts_on_selected_qubit():
    rx_t = ideal_rx("transmon").matrix
    out = rx_t @ np.eye(4)[:, 0]
    np.testing.assert_allclose(np.abs(out) ** 2, [0.5, 0.0, 0.5, 0.0])
    rx_p = ideal_rx("ppq").matrix
    out = rx_p @ np.eye(4)[:, 0]
    np.testing.assert_allclose(np.abs(out) ** 2, [0.5, 0.5, 0.0, 0.0])


def test_gate_for_name_rejects_unknown():
    with pytest.raises(ParameterError):
        gate_for_name("SWAP")


def test_ideal_gate_shape_is_checked():
    from transmon_ppq.metrics import IdealGate

    with pytest.raises(DimensionError):
        IdealGate("bad", np.eye(3))


def test_computational_block_from_full_and_columns(model):
    U = np.eye(model.dim)
    idx = list(model.comp_idx)
    U[:, [idx[2], idx[3]]] = U[:, [idx[3], idx[2]]]
    np.testing.assert_allclose(computational_block(U, model.comp_idx), ideal_cnot_tp().matrix)
    np.testing.assert_allclose(
        computational_block(U[:, idx], model.comp_idx), ideal_cnot_tp().matrix
    )
    with pytest.raises(DimensionError):
        computational_block(np.zeros((64, 10)), model.comp_idx)


def test_rotating_frame_block_removes_idle_phases(model):
    duration = 12.5
    energies = model.H0_diag[list(model.comp_idx)]
    lab = np.diag(np.exp(-1j * duration * energies))
    np.testing.assert_allclose(to_rotating_frame_block(lab, model, duration), np.eye(4), atol=1e-12)


def test_reference_frame_removes_quoted_frequencies(model):
    duration = 40.0
    quoted = TWO_PI * np.array([0.0, REFERENCE_FRAME.f_P, REFERENCE_FRAME.f_T,
                                 REFERENCE_FRAME.f_T + REFERENCE_FRAME.f_P])
    offset = model.H0_diag[model.comp_idx[0]]
    lab = np.diag(np.exp(-1j * duration * (offset + quoted)))
    block = to_rotating_frame_block(lab, model, duration, REFERENCE_FRAME)
    np.testing.assert_allclose(block, np.eye(4), atol=1e-10)
    idle = to_rotating_frame_block(lab, model, duration, GateFrame())
    np.testing.assert_array_equal(idle, to_rotating_frame_block(lab, model, duration))


def test_virtual_z():
    np.testing.assert_allclose(virtual_z(0.0, 0.0), 1.0)
    diagonal = virtual_z(0.4, -0.2)
    expected = np.exp(1j * np.array([
        0.4 * -0.5 + -0.2 * -0.5,
        0.4 * -0.5 + -0.2 * 0.5,
        0.4 * 0.5 + -0.2 * -0.5,
        0.4 * 0.5 + -0.2 * 0.5,
    ]))
    np.testing.assert_allclose(diagonal, expected)


def test_apply_vz():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_array_equal(apply_vz(B, 0.0, 0.0), B)
    rotated = apply_vz(B, 2 * np.pi, 0.0)
    np.testing.assert_allclose(np.abs(rotated), np.abs(B))
    np.testing.assert_allclose(rotated, -B, atol=1e-14)
    np.testing.assert_allclose(apply_vz(apply_vz(B, 0.3, 0.7), -0.3, -0.7), B, atol=1e-14)


def test_fidelity_of_ideal_gate_is_one():
    cnot = ideal_cnot_tp()
    assert estimate_fidelity(cnot.matrix, cnot, n_samples=2000) == pytest.approx(1.0, abs=1e-12)
    shifted = np.exp(0.83j) * cnot.matrix
    assert estimate_fidelity(shifted, cnot, n_samples=2000) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_never_exceeds_one():
    identity = ideal_identity()
    assert estimate_fidelity(np.eye(4), identity, n_samples=100) <= 1.0


def test_fidelity_is_deterministic_across_workers():
    cnot = ideal_cnot_tp()
    B = apply_vz(cnot.matrix, 0.2, -0.1)
    serial = estimate_fidelity(B, cnot, n_samples=5500, seed=7, workers=1)
    parallel = estimate_fidelity(B, cnot, n_samples=5500, seed=7, workers=4)
    assert serial == parallel
    assert estimate_fidelity(B, cnot, n_samples=5500, seed=7) == serial
    assert estimate_fidelity(B, cnot, n_samples=5500, seed=8) != serial


def test_fidelity_estimate_within_sampling_error():
    cnot = ideal_cnot_tp()
    B = cnot.matrix.copy()
    B[:, 3] = 0.0
    samples = fidelity_samples(B, cnot, n_samples=10_000, seed=DEFAULT_SEED)
    estimate = samples.mean()
    standard_error = samples.std(ddof=1) / np.sqrt(len(samples))
    oracle = fidelity_samples(B, cnot, n_samples=200_000, seed=99).mean()
    assert abs(estimate - oracle) < 4 * standard_error


def test_fidelity_standard_error_across_seeds():
    cnot = ideal_cnot_tp()
    B = apply_vz(cnot.matrix, 0.1, 0.0)
    estimates = np.array([
        estimate_fidelity(B, cnot, n_samples=10_000, seed=seed) for seed in range(30)
    ])
    assert 0.998 < estimates.mean() < 0.9995
    assert estimates.std(ddof=1) < 5e-4


def test_fidelity_needs_samples():
    with pytest.raises(ParameterError):
        estimate_fidelity(np.eye(4), ideal_identity(), n_samples=0)


def test_tomography_of_cnot():
    table = state_tomography(ideal_cnot_tp().matrix)
    row = table.row("10")
    assert row.dominant == "11"
    assert row.populations[3] == pytest.approx(1.0)
    assert row.leakage == pytest.approx(0.0)
    assert row.phases == {"11": pytest.approx(0.0)}
    assert table.row("00").dominant == "00"


def test_tomography_relative_phase_of_rx():
    table = state_tomography(ideal_rx("transmon").matrix)
    row = table.row("10")
    np.testing.assert_allclose(row.populations, [0.5, 0.0, 0.5, 0.0], atol=1e-15)
    assert row.column_phases["00"] == 0.0
    assert row.column_phases["10"] == pytest.approx(np.pi / 2)


def test_tomography_reports_leakage():
    B = 0.9 * np.eye(4)
    table = state_tomography(B)
    assert table.row("01").leakage == pytest.approx(0.19)
    records = table.to_rows()
    assert len(records) == 4
    assert records[0]["input"] == "00"
    assert records[0]["phase_01"] == ""


def test_gate_report_serializes():
    cnot = ideal_cnot_tp()
    report = build_gate_report(cnot.matrix, cnot, tau=1e-3, n_samples=100, schedule={"T1": 1.0})
    assert report.infidelity == pytest.approx(0.0, abs=1e-12)
    assert report.leakage == {label: pytest.approx(0.0) for label in ("00", "01", "10", "11")}
    data = json.loads(json.dumps(report.to_dict()))
    assert data["gate"] == "CNOT_TP"
    assert data["rng_seed"] == DEFAULT_SEED
    assert data["comp_block"]["re"][2][3] == 1.0
    assert "unitarity_deviation" not in data
