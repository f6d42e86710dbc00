"""Merging several matchings of one edge set into a single matching.

All inputs share nodes and edges; each comes with its own weights. Internally
everything is scored as cost = -gain, averaged over the input weightings when
they differ.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from .graph import Edge, GraphError, Matching, WeightedBipartiteGraph, matching_weight

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class SolutionSet:
    graphs: tuple[WeightedBipartiteGraph, ...]
    solutions: tuple[Matching, ...]

    def __post_init__(self):
        graphs, solutions = tuple(self.graphs), tuple(self.solutions)
        if not graphs or len(graphs) != len(solutions):
            raise GraphError("need one graph per solution and at least one of each")
        ref = graphs[0]
        keys = set(ref.edge_keys)
        for g in graphs[1:]:
            if (g.n_left, g.n_right) != (ref.n_left, ref.n_right) or set(g.edge_keys) != keys:
                raise GraphError("all graphs must share nodes and edges")
        for m in solutions:
            if not m.edges <= keys:
                raise GraphError(f"solution uses edges outside the graph: {sorted(m.edges - keys)}")
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "solutions", solutions)

    @classmethod
    def shared(cls, graph: WeightedBipartiteGraph, solutions: Sequence[Matching]) -> "SolutionSet":
        """All solutions scored on the same weights."""
        return cls(tuple(graph for _ in solutions), tuple(solutions))

    @property
    def size(self) -> int:
        return len(self.solutions)

    def mean_cost(self) -> dict[Edge, float]:
        return {e: -math.fsum(g.gain(e) for g in self.graphs) / len(self.graphs)
                for e in self.graphs[0].edge_keys}


def integrate_majority(sset: SolutionSet) -> Matching:
    """Greedy vote count: most-voted edges first, skipping conflicts.

    Ties in votes go to the larger summed gain, then to edge order. No
    completion step is applied, so the result may be non-maximal.
    """
    votes: dict[Edge, int] = {}
    for m in sset.solutions:
        for e in m.edges:
            votes[e] = votes.get(e, 0) + 1
    combined = {e: math.fsum(g.gain(e) for g in sset.graphs) for e in votes}
    order = sorted(votes, key=lambda e: (-votes[e], -combined[e], e))
    return _greedy(order, ())


def _greedy(order, seed_edges) -> Matching:
    chosen = set(seed_edges)
    left = {u for u, _ in chosen}
    right = {v for _, v in chosen}
    for u, v in order:
        if u not in left and v not in right:
            chosen.add((u, v))
            left.add(u)
            right.add(v)
    return Matching(frozenset(chosen))


def _components(edges: set[Edge]) -> list[list[Edge]]:
    """Components of a max-degree-2 edge set, each as an ordered walk."""
    at: dict[tuple[str, int], list[Edge]] = {}
    for u, v in edges:
        at.setdefault(("L", u), []).append((u, v))
        at.setdefault(("R", v), []).append((u, v))

    def ends(e):
        return ("L", e[0]), ("R", e[1])

    seen: set[Edge] = set()
    out = []
    # paths start from degree-1 nodes; whatever remains afterwards are cycles
    starts = sorted(n for n, es in at.items() if len(es) == 1) + sorted(at)
    for node in starts:
        for first in sorted(at[node]):
            if first in seen:
                continue
            walk, cur = [], node
            e = first
            while e is not None and e not in seen:
                seen.add(e)
                walk.append(e)
                a, b = ends(e)
                cur = b if cur == a else a
                e = next((f for f in at[cur] if f not in seen), None)
            out.append(walk)
    return out


def _merge(current: frozenset, other: frozenset, cost: dict[Edge, float]) -> frozenset:
    """One integration step: per conflict component keep the cheaper side."""
    kept: set[Edge] = set()
    for walk in _components(set(current) | set(other)):
        if len(walk) == 1:
            kept.update(walk)
            continue
        # consecutive edges alternate between the two matchings
        side_a = [e for e in walk if e in current]
        side_b = [e for e in walk if e in other]
        ca = math.fsum(cost[e] for e in side_a)
        cb = math.fsum(cost[e] for e in side_b)
        if abs(ca - cb) <= WEIGHT_TOL:
            pick = side_a if min(side_a) < min(side_b) else side_b
        else:
            pick = side_a if ca < cb else side_b
        kept.update(pick)
    return frozenset(kept)


def integrate_cyclic(sset: SolutionSet) -> Matching:
    """Cyclic alternating-path integration of ``P`` matchings.

    Starting from the first solution, each round merges the running result
    with the next solution (wrapping around to the first on the last round).
    Wherever the union of the two has a node of degree 2, the union splits into
    alternating paths and even cycles; for each one, the edges of whichever
    matching has the smaller cost are kept. The final result is completed to a
    maximal matching by adding free edges in order of increasing cost.
    """
    cost = sset.mean_cost()
    k = sset.solutions[0].edges
    p = sset.size
    for i in range(1, p + 1):
        k = _merge(k, sset.solutions[i % p].edges, cost)
    order = sorted(cost, key=lambda e: (cost[e], e))
    return _greedy(order, k)


def error_rate(results: Sequence[Matching], oracle: Matching, graph: WeightedBipartiteGraph,
               tol: float = WEIGHT_TOL) -> float:
    """Fraction of ``results`` whose total weight misses the oracle's by more than ``tol``."""
    if not results:
        raise ValueError("no results to score")
    best = matching_weight(graph, oracle)
    misses = sum(abs(matching_weight(graph, m) - best) > tol for m in results)
    return misses / len(results)
