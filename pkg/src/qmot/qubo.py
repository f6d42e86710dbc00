"""QUBO objectives for (multiplexed) bipartite maximal matching.

For one graph the objective over edge variables ``x[u, v]`` is::

    F(x) = -sum gain(u, v) x[u, v]
           + lam * sum_u  sum_{i<j} x[u, v_i] x[u, v_j]
           + lam * sum_v  sum_{i<j} x[u_i, v] x[u_j, v]

so a feasible state costs exactly minus the gain of the matching it encodes,
and every pair of selected edges sharing a node adds ``lam``. Several graphs
over the same node sets are stacked block-diagonally, one block per tracker.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .graph import Edge, GraphError, Matching, NodeId, Side, WeightedBipartiteGraph

DEFAULT_LAMBDA = 0.7


class QuboError(ValueError):
    pass


@dataclass(frozen=True)
class QuboProblem:
    """Sparse upper-triangular QUBO over edge variables.

    ``var_index[k] == (p, u, v)`` names the edge behind variable ``k``; ``p``
    is the block (tracker) index.
    """

    num_vars: int
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]
    var_index: tuple[tuple[int, int, int], ...]
    lam: float
    graphs: tuple[WeightedBipartiteGraph, ...]

    @property
    def num_blocks(self) -> int:
        return len(self.graphs)

    @cached_property
    def index_of(self) -> dict[tuple[int, int, int], int]:
        return {key: k for k, key in enumerate(self.var_index)}

    @cached_property
    def block_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for g in self.graphs:
            out.append(slice(start, start + g.num_edges))
            start += g.num_edges
        return tuple(out)

    @cached_property
    def linear_vector(self) -> np.ndarray:
        b = np.zeros(self.num_vars)
        for i, c in self.linear.items():
            b[i] = c
        return b

    @cached_property
    def coupling_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.quadratic:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
        keys = sorted(self.quadratic)
        i = np.array([a for a, _ in keys], dtype=np.int64)
        j = np.array([b for _, b in keys], dtype=np.int64)
        c = np.array([self.quadratic[k] for k in keys])
        return i, j, c

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric neighbour lists ``(indptr, indices, coeffs)`` for local fields."""
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.num_vars)]
        for (a, b), c in sorted(self.quadratic.items()):
            nbrs[a].append((b, c))
            nbrs[b].append((a, c))
        indptr = np.zeros(self.num_vars + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(n) for n in nbrs])
        indices = np.array([j for n in nbrs for j, _ in n], dtype=np.int64)
        coeffs = np.array([c for n in nbrs for _, c in n], dtype=np.float64)
        return indptr, indices, coeffs

    @cached_property
    def coefficient_scale(self) -> tuple[float, float]:
        """(max, min nonzero) absolute coefficient."""
        vals = [abs(c) for c in self.linear.values()] + [abs(c) for c in self.quadratic.values()]
        vals = [v for v in vals if v > 0]
        if not vals:
            return 1.0, 1.0
        return max(vals), min(vals)


def build_multiplexed_qubo(graphs: Sequence[WeightedBipartiteGraph],
                           lam: float = DEFAULT_LAMBDA) -> QuboProblem:
    """Block-diagonal QUBO summing one matching objective per graph."""
    if lam <= 0:
        raise QuboError(f"penalty weight must be positive, got {lam}")
    if not graphs:
        raise QuboError("need at least one graph")
    n_left, n_right = graphs[0].n_left, graphs[0].n_right
    for g in graphs:
        if (g.n_left, g.n_right) != (n_left, n_right):
            raise QuboError("all graphs must share the track and detection node sets")

    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    var_index: list[tuple[int, int, int]] = []
    for p, g in enumerate(graphs):
        by_left: dict[int, list[int]] = {}
        by_right: dict[int, list[int]] = {}
        for u, v, _ in g.edges:
            k = len(var_index)
            var_index.append((p, u, v))
            gain = g.gain((u, v))
            if gain != 0:
                linear[k] = -gain
            by_left.setdefault(u, []).append(k)
            by_right.setdefault(v, []).append(k)
        for group in (*by_left.values(), *by_right.values()):
            for a in range(len(group)):
                for b in range(a + 1, len(group)):
                    key = (group[a], group[b])
                    quadratic[key] = quadratic.get(key, 0.0) + lam
    return QuboProblem(len(var_index), linear, quadratic, tuple(var_index), float(lam), tuple(graphs))


def build_matching_qubo(graph: WeightedBipartiteGraph, lam: float = DEFAULT_LAMBDA) -> QuboProblem:
    if graph.num_edges == 0:
        raise QuboError("graph has no edges")
    return build_multiplexed_qubo([graph], lam)


def _as_bits(problem: QuboProblem, state) -> np.ndarray:
    x = np.asarray(state, dtype=np.int64)
    if x.shape != (problem.num_vars,):
        raise QuboError(f"state has shape {x.shape}, problem has {problem.num_vars} variables")
    if np.any((x != 0) & (x != 1)):
        raise QuboError("state must be binary")
    return x


def energy(problem: QuboProblem, state) -> float:
    x = _as_bits(problem, state).astype(np.float64)
    i, j, c = problem.coupling_arrays
    return float(problem.linear_vector @ x + c @ (x[i] * x[j]))


@dataclass(frozen=True)
class DecodedBlock:
    """Edges selected in one block; ``conflicts`` lists nodes hit more than once."""

    edges: frozenset
    conflicts: tuple[NodeId, ...]

    @property
    def feasible(self) -> bool:
        return not self.conflicts

    def matching(self) -> Matching:
        if self.conflicts:
            raise GraphError(f"infeasible block, conflicting nodes {list(self.conflicts)}")
        return Matching(self.edges)


def decode(problem: QuboProblem, state) -> list[DecodedBlock]:
    x = _as_bits(problem, state)
    chosen: list[list[Edge]] = [[] for _ in problem.graphs]
    for k in np.flatnonzero(x):
        p, u, v = problem.var_index[k]
        chosen[p].append((u, v))
    out = []
    for edges in chosen:
        lefts: dict[int, int] = {}
        rights: dict[int, int] = {}
        for u, v in edges:
            lefts[u] = lefts.get(u, 0) + 1
            rights[v] = rights.get(v, 0) + 1
        conflicts = [NodeId(Side.TRACK, u) for u, c in sorted(lefts.items()) if c > 1]
        conflicts += [NodeId(Side.DETECTION, v) for v, c in sorted(rights.items()) if c > 1]
        out.append(DecodedBlock(frozenset(edges), tuple(conflicts)))
    return out


def encode(problem: QuboProblem, matchings: Sequence[Iterable[Edge]]) -> np.ndarray:
    """Binary state selecting ``matchings[p]`` in block ``p``."""
    if len(matchings) != problem.num_blocks:
        raise QuboError(f"expected {problem.num_blocks} edge sets, got {len(matchings)}")
    x = np.zeros(problem.num_vars, dtype=np.uint8)
    for p, edges in enumerate(matchings):
        for u, v in edges:
            try:
                x[problem.index_of[(p, u, v)]] = 1
            except KeyError:
                raise QuboError(f"edge ({u}, {v}) is not a variable of block {p}") from None
    return x


def format_qubo(problem: QuboProblem) -> str:
    """``vars K`` then ``i j coeff`` rows; ``i == j`` rows are linear terms."""
    lines = [f"# lambda {problem.lam!r}", f"vars {problem.num_vars}"]
    lines += [f"{i} {i} {c!r}" for i, c in sorted(problem.linear.items())]
    lines += [f"{i} {j} {c!r}" for (i, j), c in sorted(problem.quadratic.items())]
    return "\n".join(lines) + "\n"


def parse_qubo(text: str) -> tuple[int, dict[int, float], dict[tuple[int, int], float]]:
    """Read the export format back as ``(num_vars, linear, quadratic)``."""
    num_vars = None
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for ln in text.splitlines():
        parts = ln.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "vars":
            num_vars = int(parts[1])
            continue
        i, j, c = int(parts[0]), int(parts[1]), float(parts[2])
        if i == j:
            linear[i] = linear.get(i, 0.0) + c
        else:
            key = (min(i, j), max(i, j))
            quadratic[key] = quadratic.get(key, 0.0) + c
    if num_vars is None:
        raise QuboError("missing 'vars K' line")
    return num_vars, linear, quadratic


def write_qubo(problem: QuboProblem, path: str | Path) -> None:
    Path(path).write_text(format_qubo(problem))
