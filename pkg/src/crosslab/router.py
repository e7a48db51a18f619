"""Shortest-path routing of a complete graph over a random cubic expander.

This is a combinatorial model of drawing K_n on a surface: each vertex of
the cubic graph stands for a region, and every pair of regions exchanges
n^2 / g^2 units of flow along one BFS shortest path.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CubicGraph:
    vertex_count: int
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.vertex_count) for v in self.adjacency[u] if u < v]

    def bfs(self, source: int) -> np.ndarray:
        dist = np.full(self.vertex_count, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def is_connected(self) -> bool:
        return self.vertex_count == 0 or bool(np.all(self.bfs(0) >= 0))


def graph_from_edges(vertex_count: int, edges) -> CubicGraph:
    adj = [[] for _ in range(vertex_count)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return CubicGraph(vertex_count, tuple(tuple(sorted(a)) for a in adj))


def random_cubic_graph(g: int, seed: int, max_attempts: int = 10_000) -> CubicGraph:
    """Uniform-ish simple connected 3-regular graph on g vertices by the configuration model.

    Pairings with loops or repeated edges are rejected, as are disconnected graphs.
    """
    if g < 4 or g % 2:
        raise ValueError(f"a simple cubic graph needs an even vertex count >= 4, got {g}")
    rng = random.Random(seed)
    stubs = [v for v in range(g) for _ in range(3)]
    for _ in range(max_attempts):
        rng.shuffle(stubs)
        pairs = set()
        ok = True
        for i in range(0, len(stubs), 2):
            u, v = stubs[i], stubs[i + 1]
            key = (min(u, v), max(u, v))
            if u == v or key in pairs:
                ok = False
                break
            pairs.add(key)
        if ok:
            graph = graph_from_edges(g, sorted(pairs))
            if graph.is_connected():
                return graph
    raise RoutingError(f"no simple connected cubic graph after {max_attempts} pairings")


@dataclass(frozen=True)
class RoutingResult:
    n: int
    g: int
    congestion: np.ndarray = field(repr=False)
    paths: dict = field(repr=False)

    @property
    def weight(self) -> float:
        return self.n ** 2 / self.g ** 2


def _lex_path(graph: CubicGraph, dist_to_target: np.ndarray, u: int) -> list[int]:
    """Lexicographically smallest shortest path from u to the BFS root."""
    path = [u]
    while dist_to_target[u] > 0:
        u = min(v for v in graph.adjacency[u] if dist_to_target[v] == dist_to_target[u] - 1)
        path.append(u)
    return path


def route_all_pairs(graph: CubicGraph, n: int) -> RoutingResult:
    """Route every unordered pair {u, v} along one shortest path; endpoints count as traversed."""
    g = graph.vertex_count
    if not graph.is_connected():
        raise RoutingError("graph is disconnected")
    weight = n ** 2 / g ** 2
    load = np.zeros(g, dtype=np.int64)
    paths = {}
    for v in range(g):
        dist = graph.bfs(v)
        for u in range(v):
            path = _lex_path(graph, dist, u)
            paths[(u, v)] = path
            load[path] += 1
    return RoutingResult(n, g, load * weight, paths)


def congestion_crossing_estimate(result: RoutingResult) -> float:
    """Sum of squared congestion, an upper estimate for the crossing number."""
    return float(np.sum(np.square(result.congestion)))
