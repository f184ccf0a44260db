"""Nelder-Mead calibration of pulse schedules.

The simplex moves follow the standard reflection, expansion, contraction
and shrink steps with coefficients (1, 2, 0.5, 0.5). Termination is on
the first of: simplex diameter <= tol_x, objective spread <= tol_f, or
an exhausted evaluation budget.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt

from .device import CompositeModel
from .errors import OptimizationInitError, ParameterError
from .metrics import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    REFERENCE_FRAME,
    GateReport,
    IdealGate,
    apply_vz,
    build_gate_report,
    estimate_fidelity,
    gate_for_name,
)
from .pulses import PulseSchedule
from .simulator import BackendGateSimulator, TrotterGateSimulator

log = logging.getLogger(__name__)

PARAMETER_NAMES = (
    "f1", "T1", "rho", "omega_S", "gamma1",
    "f2", "T2", "omega_G", "gamma2",
    "theta_T", "theta_P", "beta",
)
DEFAULT_MASK = ("f1", "omega_S", "gamma2", "theta_T", "theta_P")
# Objective value of a schedule that cannot be simulated.
INVALID_SCHEDULE_PENALTY = 1.0

REFLECTION = 1.0
EXPANSION = 2.0
CONTRACTION = 0.5
SHRINK = 0.5

GateTarget = Union[IdealGate, str]


@dataclass(frozen=True)
class NelderMeadOptions:
    """Settings of a Nelder-Mead run.

    Attributes:
        initial_step: Absolute displacement per coordinate for the initial
            simplex. None uses 5% of each coordinate (0.00025 for zeros).
        max_evals: Objective evaluation budget, 200 x dimension when None.
        tol_x: Simplex diameter (max-norm distance to the best vertex).
        tol_f: Spread of objective values across the simplex.
        penalty: Value substituted for non-finite objective values.
    """

    initial_step: Optional[Sequence[float]] = None
    max_evals: Optional[int] = None
    tol_x: float = 1e-8
    tol_f: float = 1e-12
    penalty: float = 1e12


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best: float
    diameter: float
    evals: int


@dataclass
class OptimizationTrace:
    rows: list[TraceRow] = field(default_factory=list)
    evaluations: int = 0
    penalized_evals: int = 0
    x_final: Optional[np.ndarray] = None
    f_final: Optional[float] = None
    fidelity_final: Optional[float] = None
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def best_values(self) -> list[float]:
        return [row.best for row in self.rows]

    def to_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "iteration": row.iteration,
                "best_I": row.best,
                "simplex_diameter": row.diameter,
                "evals": row.evals,
            }
            for row in self.rows
        ]


class _BudgetExhausted(Exception):
    pass


def initial_simplex(x0: np.ndarray, step: Optional[Sequence[float]] = None) -> np.ndarray:
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for k in range(n):
        if step is not None:
            simplex[k + 1, k] = x0[k] + step[k]
        elif x0[k] != 0:
            simplex[k + 1, k] = 1.05 * x0[k]
        else:
            simplex[k + 1, k] = 0.00025
    return simplex


def nelder_mead(
        objective: Callable[[np.ndarray], float],
        x0: npt.ArrayLike,
        options: Optional[NelderMeadOptions] = None
) -> tuple[np.ndarray, float, OptimizationTrace]:
    """Minimize objective starting from x0.

    Returns:
        (x_best, f_best, trace). The trace holds one row per iteration with
        a non-increasing best value.

    Raises:
        ParameterError: Empty x0 or a budget below dimension + 1.
        OptimizationInitError: Every initial vertex was penalized.
    """
    options = options or NelderMeadOptions()
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    if n < 1:
        raise ParameterError("Nelder-Mead needs at least one free parameter")
    max_evals = options.max_evals or 200 * n
    if max_evals < n + 1:
        raise ParameterError(f"Budget {max_evals} is below dimension + 1 = {n + 1}")
    if options.initial_step is not None and len(options.initial_step) != n:
        raise ParameterError(f"initial_step needs {n} entries")

    trace = OptimizationTrace()

    def evaluate(x: np.ndarray) -> tuple[float, bool]:
        if trace.evaluations >= max_evals:
            raise _BudgetExhausted
        trace.evaluations += 1
        value = float(objective(x))
        if not np.isfinite(value):
            trace.penalized_evals += 1
            return options.penalty, True
        return value, False

    simplex = initial_simplex(x0, options.initial_step)
    results = [evaluate(vertex) for vertex in simplex]
    if all(penalized for _, penalized in results):
        raise OptimizationInitError("Objective is non-finite at every initial vertex")
    values = np.array([value for value, _ in results])

    def sort():
        order = np.argsort(values, kind="stable")
        return simplex[order], values[order]

    def diameter() -> float:
        return float(np.max(np.abs(simplex[1:] - simplex[0])))

    def record(iteration: int):
        trace.rows.append(TraceRow(iteration, float(values[0]), diameter(), trace.evaluations))

    simplex, values = sort()
    record(0)
    iteration = 0
    changed = False
    try:
        while True:
            spread = float(np.max(np.abs(values[1:] - values[0])))
            if diameter() <= options.tol_x or spread <= options.tol_f:
                break
            if trace.evaluations >= max_evals:
                break
            iteration += 1
            changed = False

            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = (1 + REFLECTION) * centroid - REFLECTION * worst
            fr, _ = evaluate(xr)
            shrink = False
            if fr < values[0]:
                xe = (1 + REFLECTION * EXPANSION) * centroid - REFLECTION * EXPANSION * worst
                fe, _ = evaluate(xe)
                if fe < fr:
                    simplex[-1], values[-1] = xe, fe
                else:
                    simplex[-1], values[-1] = xr, fr
            elif fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
            elif fr < values[-1]:
                xc = (1 + CONTRACTION * REFLECTION) * centroid - CONTRACTION * REFLECTION * worst
                fc, _ = evaluate(xc)
                if fc <= fr:
                    simplex[-1], values[-1] = xc, fc
                else:
                    shrink = True
            else:
                xcc = (1 - CONTRACTION) * centroid + CONTRACTION * worst
                fcc, _ = evaluate(xcc)
                if fcc < values[-1]:
                    simplex[-1], values[-1] = xcc, fcc
                else:
                    shrink = True

            if shrink:
                for j in range(1, n + 1):
                    vertex = simplex[0] + SHRINK * (simplex[j] - simplex[0])
                    values[j], _ = evaluate(vertex)
                    simplex[j] = vertex
                    changed = True

            simplex, values = sort()
            record(iteration)
    except _BudgetExhausted:
        # only a partial shrink leaves the simplex moved
        if changed:
            simplex, values = sort()
            record(iteration)

    log.debug(
        f"Nelder-Mead stopped after {iteration} iterations, "
        f"{trace.evaluations} evaluations, best {values[0]:.6e}"
    )
    trace.x_final = simplex[0].copy()
    trace.f_final = float(values[0])
    return trace.x_final, trace.f_final, trace


def vector_from_schedule(schedule: PulseSchedule, names: Sequence[str]) -> np.ndarray:
    return np.array([float(getattr(schedule, name)) for name in names])


def schedule_from_vector(
        template: PulseSchedule,
        names: Sequence[str],
        vector: npt.ArrayLike
) -> PulseSchedule:
    values = np.asarray(vector, dtype=float)
    return template.with_values(**{name: float(v) for name, v in zip(names, values)})


def validate_schedule(schedule: PulseSchedule) -> list[str]:
    """Return the reasons a schedule cannot be simulated (empty if valid)."""
    problems = []
    numeric = {name: getattr(schedule, name) for name in PARAMETER_NAMES}
    bad = [name for name, value in numeric.items() if not np.isfinite(value)]
    if bad:
        problems.append(f"non-finite values: {bad}")
    if schedule.T1 < 0:
        problems.append(f"T1 = {schedule.T1} is negative")
    if schedule.T2 <= 0:
        problems.append(f"T2 = {schedule.T2} is not positive")
    if schedule.T1 > 0 and not 0.0 < schedule.rho < 0.5:
        problems.append(f"rho = {schedule.rho} outside (0, 0.5)")
    if schedule.sigma is not None and schedule.sigma <= 0:
        problems.append(f"sigma = {schedule.sigma} is not positive")
    if schedule.f1 < 0 or schedule.f2 < 0:
        problems.append("negative carrier frequency")
    return problems


def _resolve_gate(gate: GateTarget) -> IdealGate:
    return gate if isinstance(gate, IdealGate) else gate_for_name(gate)


def gate_infidelity(
        model: CompositeModel,
        schedule: PulseSchedule,
        gate: GateTarget,
        tau: float = 1e-2,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
        simulator: Optional[BackendGateSimulator] = None,
        workers: int = 1
) -> float:
    """1 - F of a schedule, or 1.0 when the schedule is invalid.

    The same seed is used for every call, so repeated evaluations of one
    schedule give identical values.
    """
    problems = validate_schedule(schedule)
    if problems:
        log.debug(f"Penalizing schedule: {'; '.join(problems)}")
        return INVALID_SCHEDULE_PENALTY
    simulator = simulator or TrotterGateSimulator(frame=REFERENCE_FRAME)
    block = simulator.simulate_block(model, schedule, tau)
    block = apply_vz(block, schedule.theta_T, schedule.theta_P)
    return 1.0 - estimate_fidelity(block, _resolve_gate(gate), n_samples, seed, workers)


class GateObjective:
    """Infidelity as a function of the free parameter vector.

    The last simulated block is reused when only the virtual-Z angles
    change between evaluations.
    """

    def __init__(
            self,
            model: CompositeModel,
            template: PulseSchedule,
            names: Sequence[str],
            gate: GateTarget,
            tau: float,
            n_samples: int = DEFAULT_SAMPLES,
            seed: int = DEFAULT_SEED,
            simulator: Optional[BackendGateSimulator] = None,
            workers: int = 1
    ):
        self.model = model
        self.template = template
        self.names = tuple(names)
        self.ideal = _resolve_gate(gate)
        self.tau = tau
        self.n_samples = n_samples
        self.seed = seed
        self.simulator = simulator or TrotterGateSimulator(frame=REFERENCE_FRAME)
        self.workers = workers
        self.penalized = 0
        self._cached_pulse: Optional[PulseSchedule] = None
        self._cached_block: Optional[np.ndarray] = None

    def block(self, schedule: PulseSchedule) -> np.ndarray:
        pulse = schedule.with_values(theta_T=0.0, theta_P=0.0)
        if pulse != self._cached_pulse:
            self._cached_block = self.simulator.simulate_block(self.model, pulse, self.tau)
            self._cached_pulse = pulse
        return self._cached_block

    def __call__(self, vector: np.ndarray) -> float:
        schedule = schedule_from_vector(self.template, self.names, vector)
        problems = validate_schedule(schedule)
        if problems:
            self.penalized += 1
            log.debug(f"Penalizing schedule: {'; '.join(problems)}")
            return INVALID_SCHEDULE_PENALTY
        block = apply_vz(self.block(schedule), schedule.theta_T, schedule.theta_P)
        fidelity = estimate_fidelity(block, self.ideal, self.n_samples, self.seed, self.workers)
        return 1.0 - fidelity


@dataclass(frozen=True)
class OptimizerOptions:
    """Gate calibration settings; see NelderMeadOptions for the simplex ones."""

    max_evals: int = 300
    tol_x: float = 1e-6
    tol_f: float = 1e-7
    simplex_fraction: float = 0.02
    simplex_floor: float = 1e-4
    coarse_tau: float = 1e-2
    final_tau: float = 1e-3
    n_samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    workers: int = 1


def _check_names(names: Sequence[str]) -> None:
    if not names:
        raise ParameterError("At least one parameter must be free")
    unknown = [name for name in names if name not in PARAMETER_NAMES]
    if unknown:
        raise ParameterError(f"Unknown parameters {unknown}, expected {PARAMETER_NAMES}")


@dataclass(frozen=True)
class OptimizationProblem:
    names: tuple[str, ...]
    x0: np.ndarray
    step: np.ndarray
    max_evals: int
    tol_x: float
    tol_f: float

    def __post_init__(self):
        _check_names(self.names)
        if self.max_evals < len(self.names) + 1:
            raise ParameterError(
                f"Budget {self.max_evals} is below dimension + 1 = {len(self.names) + 1}"
            )

    @classmethod
    def from_schedule(
            cls,
            schedule: PulseSchedule,
            mask: Sequence[str],
            options: OptimizerOptions
    ) -> "OptimizationProblem":
        names = tuple(mask)
        _check_names(names)
        x0 = vector_from_schedule(schedule, names)
        step = np.maximum(options.simplex_fraction * np.abs(x0), options.simplex_floor)
        return cls(names, x0, step, options.max_evals, options.tol_x, options.tol_f)


def optimize_gate(
        model: CompositeModel,
        gate: GateTarget,
        seed_schedule: PulseSchedule,
        mask: Sequence[str] = DEFAULT_MASK,
        options: Optional[OptimizerOptions] = None,
        simulator: Optional[BackendGateSimulator] = None
) -> tuple[GateReport, OptimizationTrace]:
    """Calibrate the masked parameters of seed_schedule against a gate.

    Iterations run at ``coarse_tau``; the best point is re-evaluated at
    ``final_tau`` for the report.
    """
    options = options or OptimizerOptions()
    simulator = simulator or TrotterGateSimulator(frame=REFERENCE_FRAME)
    ideal = _resolve_gate(gate)
    problem = OptimizationProblem.from_schedule(seed_schedule, mask, options)
    objective = GateObjective(
        model, seed_schedule, problem.names, ideal, options.coarse_tau,
        options.n_samples, options.seed, simulator, options.workers,
    )
    log.info(
        f"Optimizing {ideal.label} over {list(problem.names)} "
        f"(budget {problem.max_evals}, tau {options.coarse_tau} ns)"
    )
    x_best, f_best, trace = nelder_mead(
        objective,
        problem.x0,
        NelderMeadOptions(
            initial_step=problem.step,
            max_evals=problem.max_evals,
            tol_x=problem.tol_x,
            tol_f=problem.tol_f,
            penalty=INVALID_SCHEDULE_PENALTY,
        ),
    )

    best = schedule_from_vector(seed_schedule, problem.names, x_best)
    block = simulator.simulate_block(model, best, options.final_tau)
    block = apply_vz(block, best.theta_T, best.theta_P)
    report = build_gate_report(
        block, ideal, options.final_tau, options.n_samples, options.seed,
        schedule=best.to_dict(), workers=options.workers,
    )
    trace.fidelity_final = report.fidelity
    trace.notes.update({
        "parameters": list(problem.names),
        "coarse_tau_ns": options.coarse_tau,
        "final_tau_ns": options.final_tau,
        "coarse_infidelity": f_best,
        "final_infidelity": report.infidelity,
        "penalized_schedules": objective.penalized,
    })
    log.info(
        f"{ideal.label}: I = {f_best:.3e} at tau {options.coarse_tau} ns, "
        f"{report.infidelity:.3e} at tau {options.final_tau} ns"
    )
    return report, trace
