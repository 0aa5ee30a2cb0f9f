"""Directed network layer: base graphs, bounded-confidence pruning, reachability.

Edge ``(i, j)`` means agent ``i`` receives information from agent ``j``.
Node indices are 1-based.  Base topologies store mutual edges; asymmetry of
influence comes from the per-agent update weights and bounds of confidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import dst
from .errors import FrameMismatch, NodeOutOfRange


@dataclass(frozen=True)
class DirectedGraph:
    n: int
    edges: frozenset[tuple[int, int]]
    _adj: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for i, j in self.edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise NodeOutOfRange(f"edge ({i}, {j}) outside [1, {self.n}]")
            if i == j:
                raise ValueError(f"self-loop ({i}, {i}) not allowed; self-weight lives per agent")

    def adjacency(self) -> np.ndarray:
        """Boolean receive matrix, 0-based: ``adj[i, j]`` iff edge (i+1, j+1)."""
        if self._adj is None:
            adj = np.zeros((self.n, self.n), dtype=bool)
            for i, j in self.edges:
                adj[i - 1, j - 1] = True
            adj.setflags(write=False)
            object.__setattr__(self, "_adj", adj)
        return self._adj

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "DirectedGraph":
        return DirectedGraph(n, frozenset((int(i), int(j)) for i, j in edges))

    @staticmethod
    def from_mutual_pairs(n: int, pairs: Iterable[tuple[int, int]]) -> "DirectedGraph":
        """Build from undirected pairs, materializing both directions."""
        e = set()
        for i, j in pairs:
            e.add((int(i), int(j)))
            e.add((int(j), int(i)))
        return DirectedGraph.from_edges(n, e)

    def mutual_pairs(self) -> list[tuple[int, int]]:
        pairs = sorted({(min(i, j), max(i, j)) for i, j in self.edges})
        for i, j in pairs:
            if (i, j) not in self.edges or (j, i) not in self.edges:
                raise ValueError(f"edge between {i} and {j} is not mutual")
        return pairs

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(p) for p in self.mutual_pairs()]}

    @staticmethod
    def from_dict(data: dict) -> "DirectedGraph":
        return DirectedGraph.from_mutual_pairs(int(data["n"]), data["edges"])


def neighbors(g: DirectedGraph, i: int) -> set[int]:
    """Agents ``i`` can receive from (its in-neighborhood)."""
    if not 1 <= i <= g.n:
        raise NodeOutOfRange(f"node {i} outside [1, {g.n}]")
    return {j for (a, j) in g.edges if a == i}


@dataclass(frozen=True)
class PrunedView:
    """Bounded-confidence view: only edges whose opinion distance fits the bound."""

    base: DirectedGraph
    epsilon: tuple[float, ...]
    kept: np.ndarray  # boolean receive matrix, 0-based
    _edges: frozenset[tuple[int, int]] | None = field(default=None, repr=False, compare=False)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        if self._edges is None:
            rows, cols = np.nonzero(self.kept)
            object.__setattr__(self, "_edges", frozenset(
                (int(i) + 1, int(j) + 1) for i, j in zip(rows, cols)))
        return self._edges

    def neighbors(self, i: int) -> set[int]:
        return {int(j) + 1 for j in np.nonzero(self.kept[i - 1])[0]}

    def neighbor_counts(self) -> np.ndarray:
        return self.kept.sum(axis=1)


def _mass_rows(opinions, frame_size: int | None = None) -> tuple[np.ndarray, int]:
    if isinstance(opinions, np.ndarray):
        if frame_size is None:
            frame_size = int(np.log2(opinions.shape[1]))
        return opinions, frame_size
    frames = {boe.frame for boe in opinions}
    if len(frames) != 1:
        raise FrameMismatch("opinions live on different frames")
    frame = frames.pop()
    return np.vstack([boe.masses for boe in opinions]), frame.size


def prune(g: DirectedGraph, opinions, epsilon: Sequence[float],
          frame_size: int | None = None) -> PrunedView:
    """Keep edge ``(i, j)`` iff the opinion distance is within agent i's bound.

    ``opinions`` is either a list of bodies of evidence or a stacked mass
    matrix (rows in node order).  Retention can be asymmetric when bounds
    differ per agent.
    """
    rows, size = _mass_rows(opinions, frame_size)
    if rows.shape[0] != g.n:
        raise ValueError(f"need {g.n} opinions, got {rows.shape[0]}")
    eps = np.asarray(epsilon, dtype=float)
    if eps.shape != (g.n,):
        raise ValueError(f"need {g.n} bounds, got shape {eps.shape}")
    dist = dst.pairwise_jousselme(rows, size)
    kept = g.adjacency() & (dist <= eps[:, None])
    return PrunedView(g, tuple(float(e) for e in eps), kept)


def _reach(n: int, arcs: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in arcs.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def out_component(g: DirectedGraph, i: int) -> set[int]:
    """Nodes reachable from ``i`` along the direction of information flow."""
    if not 1 <= i <= g.n:
        raise NodeOutOfRange(f"node {i} outside [1, {g.n}]")
    arcs: dict[int, list[int]] = {}
    for a, j in g.edges:  # j influences a
        arcs.setdefault(j, []).append(a)
    return _reach(g.n, arcs, i)


def in_component(g: DirectedGraph, i: int) -> set[int]:
    """Nodes from which ``i`` is reachable along the direction of information flow."""
    if not 1 <= i <= g.n:
        raise NodeOutOfRange(f"node {i} outside [1, {g.n}]")
    arcs: dict[int, list[int]] = {}
    for a, j in g.edges:
        arcs.setdefault(a, []).append(j)
    return _reach(g.n, arcs, i)


def is_connected(g: DirectedGraph) -> bool:
    """Connectivity of the underlying undirected graph."""
    if g.n == 1:
        return True
    arcs: dict[int, list[int]] = {}
    for i, j in g.edges:
        arcs.setdefault(i, []).append(j)
        arcs.setdefault(j, []).append(i)
    return len(_reach(g.n, arcs, 1)) == g.n


def erdos_renyi(n: int, p: float, seed: int) -> DirectedGraph:
    """Mutual-link Erdos-Renyi graph: each pair joined with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p:
                pairs.append((i, j))
    return DirectedGraph.from_mutual_pairs(n, pairs)


def erdos_renyi_connected(n: int, p: float, seed: int, max_attempts: int = 1000) -> DirectedGraph:
    """Regenerate with incremented seed until the sample is connected."""
    for attempt in range(max_attempts):
        g = erdos_renyi(n, p, seed + attempt)
        if is_connected(g):
            return g
    raise RuntimeError(f"no connected sample in {max_attempts} attempts (n={n}, p={p})")
