import numpy as np
import pytest
from scipy.optimize import rosen

from transmon_ppq.errors import OptimizationInitError, ParameterError
from transmon_ppq.metrics import apply_vz, ideal_cnot_tp
from transmon_ppq.optimize import (
    INVALID_SCHEDULE_PENALTY,
    GateObjective,
    NelderMeadOptions,
    OptimizationProblem,
    OptimizerOptions,
    gate_infidelity,
    initial_simplex,
    nelder_mead,
    optimize_gate,
    schedule_from_vector,
    validate_schedule,
    vector_from_schedule,
)
from transmon_ppq.pulses import reference_schedule


def test_rosenbrock():
    x, f, trace = nelder_mead(
        rosen, [-1.2, 1.0], NelderMeadOptions(max_evals=500, tol_x=1e-10, tol_f=1e-14)
    )
    assert f <= 1e-8
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-3)
    assert trace.evaluations <= 500
    assert np.all(np.diff(trace.best_values) <= 0)


def test_quadratic_five_dimensions():
    def objective(x):
        return float(np.sum((x - 1.0) ** 2))

    x, f, trace = nelder_mead(
        objective,
        np.zeros(5),
        NelderMeadOptions(initial_step=[0.5] * 5, max_evals=2000, tol_x=1e-9, tol_f=0.0),
    )
    np.testing.assert_allclose(x, 1.0, atol=1e-6)
    assert trace.evaluations <= 2000


def test_constant_objective_stops_immediately():
    x0 = np.array([0.3, -2.0, 5.0])
    x, f, trace = nelder_mead(lambda x: 4.0, x0)
    np.testing.assert_array_equal(x, x0)
    assert f == 4.0
    assert trace.evaluations == 4


def test_runs_are_deterministic():
    options = NelderMeadOptions(max_evals=120)
    _, _, first = nelder_mead(rosen, [-1.2, 1.0], options)
    _, _, second = nelder_mead(rosen, [-1.2, 1.0], options)
    assert first.rows == second.rows
    assert first.rows[-1].evals <= 120


def test_initial_simplex_defaults():
    simplex = initial_simplex(np.array([2.0, 0.0]))
    np.testing.assert_allclose(simplex, [[2.0, 0.0], [2.1, 0.0], [2.0, 0.00025]])


def test_non_finite_values_are_penalized():
    def objective(x):
        if x[0] > 1.0:
            return float("nan")
        return float(np.sum(x ** 2))

    x, f, trace = nelder_mead(
        objective, [0.9, 0.5], NelderMeadOptions(initial_step=[0.2, 0.1])
    )
    assert trace.penalized_evals >= 1
    assert f < 1e-6


def test_all_penalized_simplex_raises():
    with pytest.raises(OptimizationInitError):
        nelder_mead(lambda x: float("inf"), [1.0, 2.0])


@pytest.mark.parametrize("options", [
    NelderMeadOptions(max_evals=2),
    NelderMeadOptions(initial_step=[0.1]),
])
def test_option_validation(options):
    with pytest.raises(ParameterError):
        nelder_mead(rosen, [0.0, 0.0], options)


def test_trace_rows():
    _, _, trace = nelder_mead(rosen, [-1.2, 1.0], NelderMeadOptions(max_evals=60))
    rows = trace.to_rows()
    assert list(rows[0]) == ["iteration", "best_I", "simplex_diameter", "evals"]
    assert rows[0]["iteration"] == 0
    assert rows[0]["evals"] == 3


@pytest.mark.parametrize("max_evals", [4, 5, 6, 7, 11, 17, 60])
def test_budget_exhaustion_records_each_iteration_once(max_evals):
    _, f_best, trace = nelder_mead(rosen, [-1.2, 1.0], NelderMeadOptions(max_evals=max_evals))
    iterations = [row.iteration for row in trace.rows]
    assert iterations == list(range(len(iterations)))
    assert trace.evaluations <= max_evals
    assert trace.rows[-1].best == f_best


def test_schedule_vector_round_trip():
    schedule = reference_schedule("CNOT_TP")
    names = ("f1", "omega_S", "theta_P")
    vector = vector_from_schedule(schedule, names)
    np.testing.assert_allclose(vector, [2.847, 0.03, -0.0333])
    moved = schedule_from_vector(schedule, names, vector + 0.001)
    assert moved.f1 == pytest.approx(2.848)
    assert moved.T1 == schedule.T1


def test_validate_schedule():
    schedule = reference_schedule("CNOT_TP")
    assert validate_schedule(schedule) == []
    assert validate_schedule(schedule.with_values(rho=0.6))
    assert validate_schedule(schedule.with_values(T2=0.0))
    assert validate_schedule(schedule.with_values(omega_S=float("nan")))
    # rho only matters while the CR stage is on
    assert validate_schedule(reference_schedule("RX_T").with_values(rho=0.7)) == []


def test_invalid_schedule_scores_penalty(model, failing_simulator):
    schedule = reference_schedule("CNOT_TP").with_values(rho=0.6)
    value = gate_infidelity(model, schedule, "CNOT_TP", simulator=failing_simulator)
    assert value == INVALID_SCHEDULE_PENALTY


def test_gate_infidelity_of_exact_block(model, fixed_block_simulator):
    simulator = fixed_block_simulator(ideal_cnot_tp().matrix)
    schedule = reference_schedule("CNOT_TP").with_values(theta_T=0.0, theta_P=0.0)
    first = gate_infidelity(model, schedule, "CNOT_TP", n_samples=500, simulator=simulator)
    second = gate_infidelity(model, schedule, "CNOT_TP", n_samples=500, simulator=simulator)
    assert first == pytest.approx(0.0, abs=1e-12)
    assert first == second


def test_virtual_z_angles_correct_phases(model, fixed_block_simulator):
    block = apply_vz(ideal_cnot_tp().matrix, -0.3, 0.2)
    simulator = fixed_block_simulator(block)
    schedule = reference_schedule("CNOT_TP").with_values(theta_T=0.3, theta_P=-0.2)
    value = gate_infidelity(model, schedule, "CNOT_TP", n_samples=500, simulator=simulator)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_objective_reuses_block_when_only_angles_change(model, fixed_block_simulator):
    simulator = fixed_block_simulator(ideal_cnot_tp().matrix)
    objective = GateObjective(
        model, reference_schedule("CNOT_TP"), ("theta_T", "theta_P"), "CNOT_TP",
        tau=1e-2, n_samples=200, simulator=simulator,
    )
    objective(np.array([0.0, 0.0]))
    objective(np.array([0.1, -0.4]))
    assert simulator.calls == 1
    objective.template = objective.template.with_values(f1=2.9)
    objective(np.array([0.1, -0.4]))
    assert simulator.calls == 2


def test_objective_counts_penalties(model, failing_simulator):
    objective = GateObjective(
        model, reference_schedule("CNOT_TP"), ("rho",), "CNOT_TP",
        tau=1e-2, simulator=failing_simulator,
    )
    assert objective(np.array([0.8])) == INVALID_SCHEDULE_PENALTY
    assert objective.penalized == 1


def test_problem_validation():
    schedule = reference_schedule("CNOT_TP")
    with pytest.raises(ParameterError):
        OptimizationProblem.from_schedule(schedule, (), OptimizerOptions())
    with pytest.raises(ParameterError, match="Unknown parameters"):
        OptimizationProblem.from_schedule(schedule, ("omega",), OptimizerOptions())
    with pytest.raises(ParameterError):
        OptimizationProblem.from_schedule(schedule, ("f1", "aux_channel"), OptimizerOptions())
    problem = OptimizationProblem.from_schedule(schedule, ("f1", "theta_T"), OptimizerOptions())
    np.testing.assert_allclose(problem.step, [0.02 * 2.847, 0.02 * 0.6007])


def test_optimize_virtual_z_angles(model, fixed_block_simulator):
    simulator = fixed_block_simulator(apply_vz(ideal_cnot_tp().matrix, -0.3, 0.2))
    seed = reference_schedule("CNOT_TP").with_values(theta_T=0.0, theta_P=0.0)
    options = OptimizerOptions(n_samples=2000, tol_f=1e-10)
    before = 1.0 - gate_infidelity(model, seed, "CNOT_TP", n_samples=2000, simulator=simulator)

    report, trace = optimize_gate(
        model, "CNOT_TP", seed, mask=("theta_T", "theta_P"), options=options, simulator=simulator
    )

    assert report.fidelity >= before
    assert report.fidelity >= 1.0 - 1e-4
    assert report.schedule["theta_T"] == pytest.approx(0.3, abs=0.02)
    assert report.schedule["theta_P"] == pytest.approx(-0.2, abs=0.02)
    assert report.tau == options.final_tau
    assert trace.fidelity_final == report.fidelity
    assert trace.notes["coarse_tau_ns"] == 1e-2
    assert trace.notes["final_tau_ns"] == 1e-3
    assert np.all(np.diff(trace.best_values) <= 0)
    assert trace.evaluations <= options.max_evals
