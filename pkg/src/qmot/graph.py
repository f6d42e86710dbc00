"""Bipartite track/detection graphs, matchings and the exact matching oracle.

Edges are ``(left, right)`` index pairs: ``left`` indexes a track node and
``right`` a detection node, so the side of a node is implied by its position
in the pair.

Two weight conventions exist. ``"similarity"`` graphs carry weights in [0, 1]
where larger is better (tracking graphs). ``"cost"`` graphs carry weights in
[-1, 0] that are already cost coefficients, smaller is better (synthetic
benchmark graphs). :meth:`WeightedBipartiteGraph.gain` maps both onto one
"larger is better" scale.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple

Edge = tuple[int, int]

SIMILARITY = "similarity"
COST = "cost"
CONVENTIONS = (SIMILARITY, COST)

DEFAULT_ORACLE_CAP = 24
_TIE_TOL = 1e-12


class Side(str, Enum):
    TRACK = "track"
    DETECTION = "detection"


class NodeId(NamedTuple):
    side: Side
    index: int


class GraphError(ValueError):
    """Malformed graph, matching, or graph file."""


class OracleCapError(RuntimeError):
    """The brute-force oracle refused a graph above its edge cap."""


@dataclass(frozen=True)
class WeightedBipartiteGraph:
    n_left: int
    n_right: int
    edges: tuple[tuple[int, int, float], ...]
    convention: str = SIMILARITY
    _weights: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_left < 0 or self.n_right < 0:
            raise GraphError("node counts must be non-negative")
        if self.convention not in CONVENTIONS:
            raise GraphError(f"unknown weight convention {self.convention!r}")
        norm = []
        weights = {}
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < self.n_left and 0 <= v < self.n_right):
                raise GraphError(f"edge ({u}, {v}) outside a {self.n_left}x{self.n_right} graph")
            if (u, v) in weights:
                raise GraphError(f"duplicate edge ({u}, {v})")
            if not math.isfinite(w):
                raise GraphError(f"edge ({u}, {v}) has non-finite weight")
            weights[(u, v)] = w
            norm.append((u, v, w))
        norm.sort()
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "_weights", weights)

    @classmethod
    def from_weights(cls, n_left: int, n_right: int, weights: dict[Edge, float],
                     convention: str = SIMILARITY) -> "WeightedBipartiteGraph":
        return cls(n_left, n_right, tuple((u, v, w) for (u, v), w in weights.items()), convention)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_keys(self) -> list[Edge]:
        return [(u, v) for u, v, _ in self.edges]

    def has_edge(self, edge: Edge) -> bool:
        return edge in self._weights

    def weight(self, edge: Edge) -> float:
        try:
            return self._weights[edge]
        except KeyError:
            raise GraphError(f"edge {edge} is not in the graph") from None

    def gain(self, edge: Edge) -> float:
        """Weight on the larger-is-better scale, whatever the convention."""
        w = self.weight(edge)
        return w if self.convention == SIMILARITY else -w

    def with_weights(self, weights: dict[Edge, float], convention: str | None = None):
        """Same node and edge sets, new weights."""
        if set(weights) != set(self._weights):
            raise GraphError("replacement weights must cover exactly the existing edges")
        return WeightedBipartiteGraph.from_weights(
            self.n_left, self.n_right, weights, convention or self.convention)

    def components(self) -> list[list[Edge]]:
        """Edge lists of the connected components that contain at least one edge."""
        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v, _ in self.edges:
            a, b = ("L", u), ("R", v)
            parent.setdefault(a, a)
            parent.setdefault(b, b)
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        groups: dict = {}
        for u, v, _ in self.edges:
            groups.setdefault(find(("L", u)), []).append((u, v))
        return sorted(groups.values())

    def subgraph(self, edges: Iterable[Edge]) -> "WeightedBipartiteGraph":
        """Restriction to ``edges``, keeping the node counts."""
        return WeightedBipartiteGraph(
            self.n_left, self.n_right, tuple((u, v, self.weight((u, v))) for u, v in edges),
            self.convention)


@dataclass(frozen=True)
class Matching:
    """A set of edges no two of which share a node."""

    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        lefts = [u for u, _ in edges]
        rights = [v for _, v in edges]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise GraphError(f"edges {sorted(edges)} share a node")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def of(cls, *edges: Edge) -> "Matching":
        return cls(frozenset(edges))

    def __iter__(self) -> Iterator[Edge]:
        return iter(sorted(self.edges))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge) -> bool:
        return edge in self.edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def as_dict(self) -> dict[int, int]:
        """left -> right."""
        return dict(self.edges)


def _check_edges(graph: WeightedBipartiteGraph, m: Matching) -> None:
    for e in m.edges:
        if not graph.has_edge(e):
            raise GraphError(f"matching edge {e} is not in the graph")


def is_maximal(graph: WeightedBipartiteGraph, m: Matching) -> bool:
    """True iff no graph edge can be added to ``m`` without sharing a node."""
    _check_edges(graph, m)
    used_left = {u for u, _ in m.edges}
    used_right = {v for _, v in m.edges}
    return all(u in used_left or v in used_right for u, v, _ in graph.edges)


def matching_weight(graph: WeightedBipartiteGraph, m: Matching) -> float:
    """Sum of raw edge weights of ``m``."""
    _check_edges(graph, m)
    return math.fsum(graph.weight(e) for e in m.sorted_edges())


def matching_gain(graph: WeightedBipartiteGraph, m: Matching) -> float:
    _check_edges(graph, m)
    return math.fsum(graph.gain(e) for e in m.sorted_edges())


def oracle_solve(graph: WeightedBipartiteGraph,
                 max_edges: int = DEFAULT_ORACLE_CAP) -> tuple[Matching, float]:
    """Exact maximum-weight maximal matching by exhaustive enumeration.

    Enumerates every matching (branching per track on "unmatched" or one free
    neighbour), keeps the maximal ones, and returns the best by gain together
    with its raw weight. Ties go to the lexicographically smallest sorted edge
    list, so the answer is deterministic.

    Raises :class:`OracleCapError` when the graph has more than ``max_edges``
    edges.
    """
    if graph.num_edges > max_edges:
        raise OracleCapError(f"graph has {graph.num_edges} edges, oracle cap is {max_edges}")

    adj: list[list[tuple[int, float]]] = [[] for _ in range(graph.n_left)]
    for u, v, _ in graph.edges:
        adj[u].append((v, graph.gain((u, v))))
    # optimistic bound on what tracks u.. can still add
    tail_bound = [0.0] * (graph.n_left + 1)
    for u in range(graph.n_left - 1, -1, -1):
        tail_bound[u] = tail_bound[u + 1] + max([0.0] + [g for _, g in adj[u]])

    best_gain = -math.inf
    best_edges: list[Edge] | None = None
    chosen: list[Edge] = []
    right_used = [False] * graph.n_right
    left_used = [False] * graph.n_left

    def leaf(total: float) -> None:
        nonlocal best_gain, best_edges
        for u, v, _ in graph.edges:
            if not left_used[u] and not right_used[v]:
                return
        if total > best_gain + _TIE_TOL or (
                abs(total - best_gain) <= _TIE_TOL and sorted(chosen) < best_edges):
            best_gain = total
            best_edges = sorted(chosen)

    def rec(u: int, total: float) -> None:
        if total + tail_bound[u] < best_gain - _TIE_TOL:
            return
        if u == graph.n_left:
            leaf(total)
            return
        for v, g in adj[u]:
            if not right_used[v]:
                right_used[v] = left_used[u] = True
                chosen.append((u, v))
                rec(u + 1, total + g)
                chosen.pop()
                right_used[v] = left_used[u] = False
        rec(u + 1, total)

    rec(0, 0.0)
    m = Matching(frozenset(best_edges or ()))
    return m, matching_weight(graph, m)


def format_graph(graph: WeightedBipartiteGraph) -> str:
    lines = [f"{graph.n_left} {graph.n_right} {graph.num_edges} {graph.convention}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> WeightedBipartiteGraph:
    """Parse the ``N M |E| [convention]`` + ``left right weight`` line format.

    Without an explicit convention token, a graph whose weights are all <= 0
    (and not all zero) is read as a cost graph.
    """
    rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise GraphError("empty graph file")
    head = rows[0]
    if len(head) not in (3, 4):
        raise GraphError(f"bad header {' '.join(head)!r}")
    try:
        n, m, k = (int(x) for x in head[:3])
        edges = [(int(a), int(b), float(c)) for a, b, c in rows[1:]]
    except ValueError as exc:
        raise GraphError(f"malformed graph file: {exc}") from None
    if len(edges) != k:
        raise GraphError(f"header declares {k} edges, found {len(edges)}")
    if len(head) == 4:
        convention = head[3]
    else:
        ws = [w for _, _, w in edges]
        convention = COST if ws and max(ws) <= 0 and min(ws) < 0 else SIMILARITY
    return WeightedBipartiteGraph(n, m, tuple(edges), convention)


def read_graph(path: str | Path) -> WeightedBipartiteGraph:
    return parse_graph(Path(path).read_text())


def write_graph(graph: WeightedBipartiteGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))
