"""Classical annealers standing in for quantum annealing hardware.

* :func:`simulated_anneal` - forward annealing from random states under a
  geometric temperature decay.
* :func:`reverse_anneal` - starts from a supplied state, reheats to a turning
  point, pauses, and cools again.
* :func:`simulated_quantum_anneal` - path-integral Monte Carlo with a linearly
  decreasing transverse field.

Every reported state goes through :func:`repair_feasibility`; the raw annealer
output and its energy are kept on each :class:`Sample`.

Trial ``k`` draws all of its randomness from ``default_rng([seed, k])``, so a
result does not depend on how trials are scheduled.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .graph import Matching, OracleCapError, oracle_solve, DEFAULT_ORACLE_CAP
from .qubo import DEFAULT_LAMBDA, QuboProblem, encode, energy

DEFAULT_SWEEPS = 250
DEFAULT_TRIALS = 100
REVERSE_SWEEP_FRACTION = 0.3
DEFAULT_REVERSE_TRIALS = 1
DEFAULT_TARGET_PROB = 0.99
ENERGY_TOL = 1e-9


class ScheduleKind(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class AnnealSchedule:
    """Fluctuation profile over ``sweeps`` sweeps.

    The fluctuation level ``s`` is 1 at full thermal (or transverse-field)
    strength and 0 when frozen. Forward schedules ramp it 1 -> 0. Reverse
    schedules go 0 -> ``turning_point``, hold there for ``pause_fraction`` of
    the sweeps, then return to 0. A ``turning_point`` of None means "the level
    whose temperature is ``reheat_ratio`` times the hot temperature".
    """

    kind: ScheduleKind = ScheduleKind.FORWARD
    sweeps: int = DEFAULT_SWEEPS
    turning_point: float | None = None
    pause_fraction: float = 0.25
    reheat_ratio: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.sweeps < 1:
            raise SolverError("sweeps must be >= 1")
        if self.turning_point is not None and not 0 < self.turning_point < 1:
            raise SolverError("turning point must lie in (0, 1)")
        if not 0 <= self.pause_fraction <= 1:
            raise SolverError("pause fraction must lie in [0, 1]")

    @classmethod
    def reverse(cls, sweeps: int = round(REVERSE_SWEEP_FRACTION * DEFAULT_SWEEPS), **kw):
        return cls(ScheduleKind.REVERSE, sweeps, **kw)

    def levels(self, t_hot: float = 1.0, t_cold: float = 1.0) -> np.ndarray:
        if self.kind is ScheduleKind.FORWARD:
            if self.sweeps == 1:
                return np.zeros(1)
            return np.linspace(1.0, 0.0, self.sweeps)
        top = self.turning_point
        if top is None:
            top = _level_for_temperature(self.reheat_ratio * t_hot, t_hot, t_cold)
        ramp = max(1, round(self.sweeps * (1 - self.pause_fraction) / 2))
        ramp = min(ramp, self.sweeps // 2) or 1
        hold = self.sweeps - 2 * ramp
        up = top * np.arange(1, ramp + 1) / ramp
        down = top * (1 - np.arange(1, ramp + 1) / ramp)
        out = np.concatenate([up, np.full(max(hold, 0), top), down])
        return out[: self.sweeps]

    def temperatures(self, t_hot: float, t_cold: float) -> np.ndarray:
        return t_cold * (t_hot / t_cold) ** self.levels(t_hot, t_cold)


def _level_for_temperature(t: float, t_hot: float, t_cold: float) -> float:
    if t_hot <= t_cold:
        return 1.0
    return float(np.clip(math.log(t / t_cold) / math.log(t_hot / t_cold), 0.0, 1.0))


def default_temperatures(problem: QuboProblem) -> tuple[float, float]:
    big, small = problem.coefficient_scale
    return 2.0 * big, 0.01 * small


@dataclass
class Sample:
    raw_state: np.ndarray
    raw_energy: float
    state: np.ndarray
    energy: float
    wall_time: float


@dataclass
class SolveResult:
    solver: str
    samples: list[Sample]
    sweeps_per_trial: int
    best_state: np.ndarray = field(init=False)
    best_energy: float = field(init=False)

    def __post_init__(self):
        if not self.samples:
            raise SolverError("a result needs at least one sample")
        k = min(range(len(self.samples)), key=lambda t: (self.samples[t].energy, t))
        self.best_state = self.samples[k].state
        self.best_energy = self.samples[k].energy

    @property
    def trial_count(self) -> int:
        return len(self.samples)

    @property
    def wall_time_mean(self) -> float:
        return float(np.mean([s.wall_time for s in self.samples]))

    @property
    def wall_time_std(self) -> float:
        return float(np.std([s.wall_time for s in self.samples]))

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([s.energy for s in self.samples])

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "solver": self.solver,
            "trial_count": self.trial_count,
            "sweeps_per_trial": self.sweeps_per_trial,
            "best_energy": self.best_energy,
            "best_state": [int(b) for b in self.best_state],
            "energies": [s.energy for s in self.samples],
            "raw_energies": [s.raw_energy for s in self.samples],
        }
        if timing:
            out["wall_time_per_trial"] = {"mean": self.wall_time_mean, "std": self.wall_time_std}
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2)


def repair_feasibility(problem: QuboProblem, state) -> np.ndarray:
    """Turn any state into a feasible, per-block maximal one.

    Selected edges are kept greedily by descending gain (dropping the weaker
    edge of every conflict), then unselected edges are added greedily by
    descending gain wherever both endpoints are still free. Gain ties fall
    back to edge order.
    """
    x = np.asarray(state)
    out = np.zeros(problem.num_vars, dtype=np.uint8)
    for p, (graph, block) in enumerate(zip(problem.graphs, problem.block_slices)):
        bits = x[block]
        ranked = sorted(range(graph.num_edges),
                        key=lambda k: (-graph.gain(graph.edges[k][:2]), graph.edges[k][:2]))
        used_left: set[int] = set()
        used_right: set[int] = set()
        for pass_selected in (True, False):
            for k in ranked:
                if bool(bits[k]) != pass_selected:
                    continue
                u, v, _ = graph.edges[k]
                if u not in used_left and v not in used_right:
                    used_left.add(u)
                    used_right.add(v)
                    out[block.start + k] = 1
    return out


def _finish(problem: QuboProblem, raw: np.ndarray, started: float) -> Sample:
    fixed = repair_feasibility(problem, raw)
    return Sample(raw.astype(np.uint8), energy(problem, raw), fixed, energy(problem, fixed),
                  time.perf_counter() - started)


def _random_inputs(rng: np.random.Generator, sweeps: int, n: int):
    orders = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (sweeps, 1)), axis=1)
    return orders, rng.random((sweeps, n))


def _anneal_trials(problem, temps, trials, seed, initial=None) -> list[Sample]:
    indptr, indices, coeffs = problem.csr
    linear = problem.linear_vector
    n = problem.num_vars
    samples = []
    for trial in range(trials):
        started = time.perf_counter()
        rng = np.random.default_rng([seed, trial])
        if initial is None:
            state = rng.integers(0, 2, n).astype(np.int64)
        else:
            state = np.array(initial, dtype=np.int64)
        orders, uniforms = _random_inputs(rng, len(temps), n)
        _kernels.metropolis_sweeps(state, linear, indptr, indices, coeffs, temps, orders, uniforms)
        samples.append(_finish(problem, state, started))
    return samples


def simulated_anneal(problem: QuboProblem, sweeps: int = DEFAULT_SWEEPS,
                     trials: int = DEFAULT_TRIALS, seed: int = 0,
                     t_hot: float | None = None, t_cold: float | None = None) -> SolveResult:
    """Forward simulated annealing from uniformly random initial states."""
    if sweeps < 1 or trials < 1:
        raise SolverError("sweeps and trials must be >= 1")
    hot, cold = default_temperatures(problem)
    hot, cold = t_hot or hot, t_cold or cold
    temps = AnnealSchedule(ScheduleKind.FORWARD, sweeps).temperatures(hot, cold)
    return SolveResult("sa", _anneal_trials(problem, temps, trials, seed), sweeps)


def reverse_anneal(problem: QuboProblem, initial, schedule: AnnealSchedule | None = None,
                   trials: int = DEFAULT_REVERSE_TRIALS, seed: int = 0,
                   t_hot: float | None = None, t_cold: float | None = None) -> SolveResult:
    """Reverse annealing from ``initial``: reheat, pause, cool."""
    schedule = schedule or AnnealSchedule.reverse()
    if schedule.kind is not ScheduleKind.REVERSE:
        raise SolverError("reverse annealing needs a reverse schedule")
    if trials < 1:
        raise SolverError("trials must be >= 1")
    initial = np.asarray(initial)
    if initial.shape != (problem.num_vars,):
        raise SolverError(f"initial state has shape {initial.shape}, expected ({problem.num_vars},)")
    hot, cold = default_temperatures(problem)
    hot, cold = t_hot or hot, t_cold or cold
    temps = schedule.temperatures(hot, cold)
    return SolveResult("rsa", _anneal_trials(problem, temps, trials, seed, initial), schedule.sweeps)


def transverse_coupling(gamma: np.ndarray, slices: int, temperature: float) -> np.ndarray:
    """Dimensionless inter-slice coupling ``-0.5 * ln tanh(gamma / (slices * T))``."""
    return -0.5 * np.log(np.tanh(gamma / (slices * temperature)))


def simulated_quantum_anneal(problem: QuboProblem, trotter_slices: int = 8,
                             sweeps: int = DEFAULT_SWEEPS, trials: int = DEFAULT_TRIALS,
                             seed: int = 0, gamma_hot: float | None = None,
                             gamma_cold: float | None = None,
                             temperature: float | None = None) -> SolveResult:
    """Path-integral Monte Carlo annealing of the transverse field.

    The field falls linearly from ``gamma_hot`` to ``gamma_cold`` while the
    physical temperature stays fixed. The reported state is the best slice
    after repair.
    """
    if trotter_slices < 2:
        raise SolverError("need at least two Trotter slices")
    if sweeps < 1 or trials < 1:
        raise SolverError("sweeps and trials must be >= 1")
    big, _ = problem.coefficient_scale
    gamma_hot = gamma_hot or 2.0 * big
    gamma_cold = gamma_cold or 1e-3 * big
    temperature = temperature or 0.05 * big
    gammas = np.linspace(gamma_hot, gamma_cold, sweeps)
    couplings = transverse_coupling(gammas, trotter_slices, temperature)
    slice_temp = trotter_slices * temperature
    indptr, indices, coeffs = problem.csr
    linear = problem.linear_vector
    n = problem.num_vars
    samples = []
    for trial in range(trials):
        started = time.perf_counter()
        rng = np.random.default_rng([seed, trial])
        replicas = rng.integers(0, 2, (trotter_slices, n)).astype(np.int64)
        orders = rng.permuted(
            np.tile(np.arange(n, dtype=np.int64), (sweeps, trotter_slices, 1)), axis=2)
        uniforms = rng.random((sweeps, trotter_slices, n))
        _kernels.path_integral_sweeps(replicas, linear, indptr, indices, coeffs, slice_temp,
                                      couplings, orders, uniforms)
        candidates = [_finish(problem, r, started) for r in replicas]
        best = min(candidates, key=lambda s: (s.energy, s.raw_energy))
        best.wall_time = time.perf_counter() - started
        samples.append(best)
    return SolveResult("sqa", samples, sweeps)


def oracle_result(problem: QuboProblem, max_edges: int = DEFAULT_ORACLE_CAP) -> SolveResult:
    """Exact solve of every block, one connected component at a time."""
    started = time.perf_counter()
    matchings = []
    for graph in problem.graphs:
        edges = []
        for comp in graph.components():
            m, _ = oracle_solve(graph.subgraph(comp), max_edges)
            edges.extend(m.edges)
        matchings.append(Matching(frozenset(edges)))
    state = encode(problem, [m.edges for m in matchings])
    e = energy(problem, state)
    return SolveResult("oracle", [Sample(state, e, state, e, time.perf_counter() - started)], 0)


def tts(anneal_time: float, p_success: float, p_target: float = DEFAULT_TARGET_PROB) -> float:
    """Time to reach the optimum at least once with probability ``p_target``."""
    if not 0 < p_target < 1:
        raise SolverError("target probability must lie in (0, 1)")
    if p_success >= p_target:
        return anneal_time
    if p_success <= 0:
        return math.inf
    return anneal_time * math.log(1 - p_target) / math.log(1 - p_success)


def success_probability(result: SolveResult, optimal_energy: float, raw: bool = True,
                        tol: float = ENERGY_TOL) -> float:
    """Fraction of trials that hit ``optimal_energy``.

    With ``raw`` the annealer's own output must be the optimum (a repaired hit
    does not count); otherwise the repaired states are scored.
    """
    hits = 0
    for s in result.samples:
        if raw:
            ok = abs(s.raw_energy - optimal_energy) <= tol and np.array_equal(s.raw_state, s.state)
        else:
            ok = abs(s.energy - optimal_energy) <= tol
        hits += ok
    return hits / result.trial_count


@dataclass(frozen=True)
class SolverConfig:
    """Solver selection plus the knobs a key=value config file can set.

    ``sweeps`` and ``trials`` left as None resolve to the solver's defaults:
    250 sweeps x 100 trials forward, 0.3x the sweeps and 1 trial reverse.
    """

    solver: str = "sa"
    sweeps: int | None = None
    trials: int | None = None
    seed: int = 0
    lam: float = DEFAULT_LAMBDA
    trotter_slices: int = 8
    turning_point: float | None = None
    pause_fraction: float = 0.25
    oracle_cap: int = DEFAULT_ORACLE_CAP

    SOLVERS = ("sa", "rsa", "sqa", "oracle")

    def __post_init__(self):
        if self.solver not in self.SOLVERS:
            raise SolverError(f"unknown solver {self.solver!r}")

    @property
    def resolved_sweeps(self) -> int:
        if self.sweeps is not None:
            return self.sweeps
        if self.solver == "rsa":
            return round(REVERSE_SWEEP_FRACTION * DEFAULT_SWEEPS)
        return DEFAULT_SWEEPS

    @property
    def resolved_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return DEFAULT_REVERSE_TRIALS if self.solver == "rsa" else DEFAULT_TRIALS

    @classmethod
    def from_mapping(cls, values: dict[str, str], **overrides) -> "SolverConfig":
        kw: dict = {}
        casts = {"sweeps": int, "trials": int, "seed": int, "lambda": float, "lam": float,
                 "trotter_slices": int, "turning_point": float, "pause_fraction": float,
                 "oracle_cap": int, "solver": str}
        for key, val in values.items():
            if key == "schedule":
                if val == "reverse" and "solver" not in values:
                    kw["solver"] = "rsa"
                continue
            if key in casts:
                kw["lam" if key == "lambda" else key] = casts[key](val)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


def run_solver(problem: QuboProblem, config: SolverConfig, initial=None) -> SolveResult:
    if config.solver == "sa":
        return simulated_anneal(problem, config.resolved_sweeps, config.resolved_trials, config.seed)
    if config.solver == "rsa":
        if initial is None:
            initial = np.zeros(problem.num_vars, dtype=np.uint8)
        schedule = AnnealSchedule.reverse(config.resolved_sweeps, turning_point=config.turning_point,
                                          pause_fraction=config.pause_fraction)
        return reverse_anneal(problem, initial, schedule, config.resolved_trials, config.seed)
    if config.solver == "sqa":
        return simulated_quantum_anneal(problem, config.trotter_slices, config.resolved_sweeps,
                                        config.resolved_trials, config.seed)
    return oracle_result(problem, config.oracle_cap)


def measure_tts(problem: QuboProblem, config: SolverConfig, optimal_energy: float,
                target_prob: float = DEFAULT_TARGET_PROB, anneal_time: float | None = None,
                initial=None) -> float:
    """Run ``config`` on ``problem`` and convert its raw hit rate into a TTS.

    ``anneal_time`` defaults to the sweeps per trial, i.e. TTS in sweep units.
    """
    result = run_solver(problem, config, initial)
    t = float(result.sweeps_per_trial) if anneal_time is None else anneal_time
    return tts(t, success_probability(result, optimal_energy), target_prob)


__all__ = [
    "AnnealSchedule", "OracleCapError", "Sample", "ScheduleKind", "SolveResult", "SolverConfig",
    "SolverError", "measure_tts", "oracle_result", "repair_feasibility", "reverse_anneal",
    "run_solver", "simulated_anneal", "simulated_quantum_anneal", "success_probability", "tts",
]
