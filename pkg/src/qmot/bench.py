"""Synthetic matching benchmarks: error rate and time-to-solution tables."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .ensemble import SolutionSet, error_rate, integrate_cyclic, integrate_majority
from .graph import COST, SIMILARITY, GraphError, Matching, WeightedBipartiteGraph, oracle_solve
from .qubo import build_matching_qubo, decode, encode, energy
from .solvers import SolverConfig, reverse_anneal, AnnealSchedule, run_solver, tts

INTEGRATORS = ("none", "majority", "cyclic")

ERROR_COLUMNS = ["n", "P", "solver", "integrator", "graphs", "trials_per_graph", "error_rate",
                 "success_prob", "tts_sweeps", "tts_seconds"]
REVERSE_COLUMNS = ["n", "P", "flip_prob", "graphs", "trials_per_graph", "fa_sweeps", "ra_sweeps",
                   "fa_error_rate", "ra_error_rate", "fa_tts_sweeps", "ra_tts_sweeps",
                   "fa_tts_seconds", "ra_tts_seconds"]
TIMING_COLUMNS = {"tts_seconds", "fa_tts_seconds", "ra_tts_seconds"}


@dataclass(frozen=True)
class BenchmarkSpec:
    sizes: tuple[int, ...] = (4, 6, 8)
    degree: int = 4
    weight_range: tuple[float, float] = (-1.0, 0.0)
    graphs_per_n: int = 10
    trials_per_graph: int = 250
    multiplicities: tuple[int, ...] = (1, 2, 3, 5)
    flip_prob: float = 0.05
    seed: int = 0
    oracle_cap: int = 64
    target_prob: float = 0.99

    def __post_init__(self):
        for n in self.sizes:
            if not 1 <= self.degree <= n:
                raise GraphError(f"no {self.degree}-regular bipartite graph on {n}+{n} nodes")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip probability must lie in [0, 1]")
        if any(p < 1 for p in self.multiplicities):
            raise ValueError("multiplicities must be >= 1")
        if self.trials_per_graph < max(self.multiplicities, default=1):
            raise ValueError("trials per graph must cover the largest multiplicity")

    def graph_seed(self, n: int, index: int) -> int:
        return int(np.random.SeedSequence([self.seed, n, index]).generate_state(1)[0])


def gen_benchmark_graph(n: int, degree: int = 4, weight_range=(-1.0, 0.0),
                        seed: int = 0, max_restarts: int = 1000) -> WeightedBipartiteGraph:
    """Random ``degree``-regular ``n x n`` bipartite graph with uniform weights.

    The edge set is the superposition of ``degree`` random permutations; a
    permutation that reuses an existing edge is redrawn, and the whole draw
    restarts if one cannot be placed.
    """
    if not 1 <= degree <= n:
        raise GraphError(f"no {degree}-regular bipartite graph on {n}+{n} nodes")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        edges: set[tuple[int, int]] = set()
        for _ in range(degree):
            for _ in range(2000):
                perm = rng.permutation(n)
                cand = {(u, int(perm[u])) for u in range(n)}
                if not cand & edges:
                    edges |= cand
                    break
            else:
                break
        if len(edges) == n * degree:
            break
    else:
        raise GraphError(f"failed to draw a {degree}-regular graph on {n}+{n} nodes")
    lo, hi = weight_range
    keys = sorted(edges)
    weights = rng.uniform(lo, hi, len(keys))
    convention = COST if hi <= 0 else SIMILARITY
    return WeightedBipartiteGraph(n, n, tuple((u, v, float(w)) for (u, v), w in zip(keys, weights)),
                                  convention)


def integrate(name: str, graph: WeightedBipartiteGraph, group: Sequence[Matching]) -> Matching:
    if name == "none":
        return group[0]
    sset = SolutionSet.shared(graph, group)
    if name == "majority":
        return integrate_majority(sset)
    if name == "cyclic":
        return integrate_cyclic(sset)
    raise ValueError(f"unknown integrator {name!r}")


def grouped_error_rate(graph, oracle: Matching, matchings: Sequence[Matching], p: int,
                       integrator: str) -> float:
    """Error rate after integrating consecutive ``p``-tuples of ``matchings``."""
    groups = [matchings[k * p:(k + 1) * p] for k in range(len(matchings) // p)]
    if not groups:
        raise ValueError(f"fewer than {p} trials to group")
    return error_rate([integrate(integrator, graph, g) for g in groups], oracle, graph)


@dataclass
class _Instance:
    graph: WeightedBipartiteGraph
    oracle: Matching
    seed: int
    problem: object = field(default=None)

    @property
    def optimum_state(self):
        return encode(self.problem, [self.oracle.edges])


def _instances(spec: BenchmarkSpec, n: int) -> list[_Instance]:
    out = []
    for g in range(spec.graphs_per_n):
        seed = spec.graph_seed(n, g)
        graph = gen_benchmark_graph(n, spec.degree, spec.weight_range, seed)
        oracle, _ = oracle_solve(graph, spec.oracle_cap)
        out.append(_Instance(graph, oracle, seed, build_matching_qubo(graph)))
    return out


def _matchings(problem, result) -> list[Matching]:
    return [decode(problem, s.state)[0].matching() for s in result.samples]


def _fmt(x: float) -> str:
    return "inf" if x == float("inf") else f"{x:.6g}"


def run_error_rate_experiment(spec: BenchmarkSpec, solver_config: SolverConfig,
                              integrator: str = "cyclic") -> list[dict]:
    """Error rate and TTS per (n, P) for trial groups merged by ``integrator``.

    Every graph gets ``trials_per_graph`` independent trials. They are split
    into consecutive groups of ``P`` and each group is merged into one
    matching, which is scored against the oracle by weight. TTS uses the
    success probability pooled over graphs, with one anneal of ``sweeps``
    sweeps per merged answer (the ``P`` copies run side by side as one
    block-diagonal problem); ``tts_seconds`` charges the measured wall time of
    all ``P`` trials.
    """
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")
    mults = [p for p in spec.multiplicities if integrator != "none" or p == 1]
    rows = []
    for n in spec.sizes:
        errs = {p: [] for p in mults}
        walls = []
        for inst in _instances(spec, n):
            cfg = replace(solver_config, trials=spec.trials_per_graph, seed=inst.seed)
            problem = build_matching_qubo(inst.graph, cfg.lam)
            result = run_solver(problem, cfg)
            walls.append(result.wall_time_mean)
            found = _matchings(problem, result)
            for p in mults:
                errs[p].append(grouped_error_rate(inst.graph, inst.oracle, found, p, integrator))
        sweeps = solver_config.resolved_sweeps
        for p in mults:
            err = float(np.mean(errs[p]))
            ps = 1.0 - err
            rows.append({
                "n": n, "P": p, "solver": solver_config.solver, "integrator": integrator,
                "graphs": spec.graphs_per_n, "trials_per_graph": spec.trials_per_graph,
                "error_rate": err, "success_prob": ps,
                "tts_sweeps": tts(sweeps, ps, spec.target_prob),
                "tts_seconds": tts(float(np.mean(walls)) * p, ps, spec.target_prob),
            })
    rows.sort(key=lambda r: (r["n"], r["P"]))
    return rows


def corrupt(state: np.ndarray, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``flip_prob``."""
    flips = rng.random(state.shape[0]) < flip_prob
    return (np.asarray(state, dtype=np.uint8) ^ flips).astype(np.uint8)


def run_reverse_experiment(spec: BenchmarkSpec, fa_config: SolverConfig,
                           ra_config: SolverConfig, integrator: str = "cyclic") -> list[dict]:
    """Forward vs reverse annealing from corrupted optima.

    Each reverse run starts from the oracle state with every bit flipped with
    probability ``spec.flip_prob``. Both sides run ``trials_per_graph``
    independent single answers per graph; for ``P > 1`` consecutive answers
    are merged with ``integrator``.
    """
    rows = []
    ra_sweeps = ra_config.resolved_sweeps
    fa_sweeps = fa_config.resolved_sweeps
    schedule = AnnealSchedule.reverse(ra_sweeps, turning_point=ra_config.turning_point,
                                      pause_fraction=ra_config.pause_fraction)
    mults = list(spec.multiplicities)
    for n in spec.sizes:
        fa_err = {p: [] for p in mults}
        ra_err = {p: [] for p in mults}
        fa_wall, ra_wall = [], []
        for inst in _instances(spec, n):
            problem = build_matching_qubo(inst.graph, fa_config.lam)
            fa = run_solver(problem, replace(fa_config, trials=spec.trials_per_graph,
                                             seed=inst.seed))
            fa_wall.append(fa.wall_time_mean)
            fa_found = _matchings(problem, fa)
            rng = np.random.default_rng([inst.seed, 1])
            target = inst.optimum_state
            ra_found = []
            for k in range(spec.trials_per_graph):
                start = corrupt(target, spec.flip_prob, rng)
                res = reverse_anneal(problem, start, schedule, ra_config.resolved_trials,
                                     seed=inst.seed + k + 1)
                ra_wall.append(res.wall_time_mean * res.trial_count)
                ra_found.append(decode(problem, res.best_state)[0].matching())
            for p in mults:
                fa_err[p].append(grouped_error_rate(inst.graph, inst.oracle, fa_found, p,
                                                    integrator if p > 1 else "none"))
                ra_err[p].append(grouped_error_rate(inst.graph, inst.oracle, ra_found, p,
                                                    integrator if p > 1 else "none"))
        for p in mults:
            fe, re_ = float(np.mean(fa_err[p])), float(np.mean(ra_err[p]))
            rows.append({
                "n": n, "P": p, "flip_prob": spec.flip_prob, "graphs": spec.graphs_per_n,
                "trials_per_graph": spec.trials_per_graph, "fa_sweeps": fa_sweeps,
                "ra_sweeps": ra_sweeps, "fa_error_rate": fe, "ra_error_rate": re_,
                "fa_tts_sweeps": tts(fa_sweeps, 1 - fe, spec.target_prob),
                "ra_tts_sweeps": tts(ra_sweeps, 1 - re_, spec.target_prob),
                "fa_tts_seconds": tts(float(np.mean(fa_wall)) * p, 1 - fe, spec.target_prob),
                "ra_tts_seconds": tts(float(np.mean(ra_wall)) * p, 1 - re_, spec.target_prob),
            })
    rows.sort(key=lambda r: (r["n"], r["P"]))
    return rows


def rows_to_csv(rows: list[dict], columns: list[str], timing: bool = True) -> str:
    cols = [c for c in columns if timing or c not in TIMING_COLUMNS]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    return buf.getvalue()
