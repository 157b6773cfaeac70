"""Physical architecture: modules, local couplings, quantum channels.

Two edge kinds: local edges connect qubits inside one module (SWAP/CNOT),
quantum channels connect communication qubits of different modules
(entanglement generation). Routing paths treat both as one hop; the reward
metric weights channels with w > 1 and live entangled pairs with 1.
"""

from __future__ import annotations

import heapq
import json
from pathlib import Path

import numpy as np


def _norm_edge(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError(f"self-loop edge ({a}, {b})")
    return (a, b) if a < b else (b, a)


class CouplingGraph:
    """Immutable device graph: qubits, local edges, channels, module map."""

    def __init__(
        self,
        num_qubits: int,
        local_edges: list[tuple[int, int]],
        quantum_channels: list[tuple[int, int]],
        module_of: list[int],
    ):
        self.num_qubits = int(num_qubits)
        self.local_edges = sorted({_norm_edge(a, b) for a, b in local_edges})
        self.quantum_channels = sorted({_norm_edge(a, b) for a, b in quantum_channels})
        self.module_of = [int(m) for m in module_of]
        self._validate()

        self._local_set = set(self.local_edges)
        self._channel_set = set(self.quantum_channels)
        self.local_neighbors: list[list[int]] = [[] for _ in range(self.num_qubits)]
        self.neighbors: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for a, b in self.local_edges + self.quantum_channels:
            self.neighbors[a].append(b)
            self.neighbors[b].append(a)
        for a, b in self.local_edges:
            self.local_neighbors[a].append(b)
            self.local_neighbors[b].append(a)
        for lst in self.neighbors:
            lst.sort()
        for lst in self.local_neighbors:
            lst.sort()

    def _validate(self) -> None:
        if len(self.module_of) != self.num_qubits:
            raise ValueError("module_of length must equal num_qubits")
        for a, b in self.local_edges + self.quantum_channels:
            if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise ValueError(f"edge ({a}, {b}) out of range")
        overlap = set(self.local_edges) & set(self.quantum_channels)
        if overlap:
            raise ValueError(f"edges are both local and channel: {sorted(overlap)}")
        for a, b in self.local_edges:
            if self.module_of[a] != self.module_of[b]:
                raise ValueError(f"local edge ({a}, {b}) crosses modules")
        for a, b in self.quantum_channels:
            if self.module_of[a] == self.module_of[b]:
                raise ValueError(f"channel ({a}, {b}) inside one module")
        # connectivity over all edges
        if self.num_qubits:
            seen = {0}
            stack = [0]
            adj: list[list[int]] = [[] for _ in range(self.num_qubits)]
            for a, b in self.local_edges + self.quantum_channels:
                adj[a].append(b)
                adj[b].append(a)
            while stack:
                for nxt in adj[stack.pop()]:
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            if len(seen) != self.num_qubits:
                raise ValueError("coupling graph is not connected")

    def is_local_edge(self, a: int, b: int) -> bool:
        return _norm_edge(a, b) in self._local_set

    def is_channel(self, a: int, b: int) -> bool:
        return _norm_edge(a, b) in self._channel_set

    def channel_endpoint_in_module(self, channel: tuple[int, int], module: int) -> int | None:
        a, b = channel
        if self.module_of[a] == module:
            return a
        if self.module_of[b] == module:
            return b
        return None

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "local_edges": [list(e) for e in self.local_edges],
            "quantum_channels": [list(e) for e in self.quantum_channels],
            "module_of": list(self.module_of),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CouplingGraph:
        return cls(
            d["num_qubits"],
            [tuple(e) for e in d["local_edges"]],
            [tuple(e) for e in d["quantum_channels"]],
            d["module_of"],
        )


def save_graph(path: str | Path, graph: CouplingGraph) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> CouplingGraph:
    return CouplingGraph.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- built-in topologies -----------------------------------------------------

# One IBM Q Guadalupe module (16 qubits); the second module mirrors with +16.
_GUADALUPE_EDGES = [
    (1, 2), (2, 3), (3, 5), (5, 8), (8, 11), (11, 14), (14, 13), (13, 12),
    (12, 10), (10, 7), (7, 4), (4, 1), (6, 7), (0, 1), (8, 9), (12, 15),
]


def build_guadalupe_pair() -> CouplingGraph:
    """Two 16-qubit heavy-hex modules joined by one channel (0, 16)."""
    edges = list(_GUADALUPE_EDGES)
    edges += [(a + 16, b + 16) for a, b in _GUADALUPE_EDGES]
    module_of = [0] * 16 + [1] * 16
    return CouplingGraph(32, edges, [(0, 16)], module_of)


def build_grid_pair() -> CouplingGraph:
    """Two 4x4 grid modules joined by one channel (0, 16) on facing corners."""
    edges = []
    for base in (0, 16):
        for row in range(4):
            for col in range(4):
                q = base + row * 4 + col
                if col < 3:
                    edges.append((q, q + 1))
                if row < 3:
                    edges.append((q, q + 4))
    module_of = [0] * 16 + [1] * 16
    return CouplingGraph(32, edges, [(0, 16)], module_of)


def build_twin_square_pair() -> CouplingGraph:
    """Two 2x2 square modules joined by one channel (1, 4); desk-scale system."""
    edges = [(0, 1), (1, 3), (2, 3), (0, 2), (4, 5), (5, 7), (6, 7), (4, 6)]
    return CouplingGraph(8, edges, [(1, 4)], [0, 0, 0, 0, 1, 1, 1, 1])


TOPOLOGIES = {
    "guadalupe2": build_guadalupe_pair,
    "grid4x4x2": build_grid_pair,
    "twin2x2": build_twin_square_pair,
}


def build_topology(name: str) -> CouplingGraph:
    try:
        return TOPOLOGIES[name]()
    except KeyError:
        raise ValueError(f"unknown topology {name!r}; known: {sorted(TOPOLOGIES)}") from None


# -- precomputed routing paths ------------------------------------------------


class PathTable:
    """One frozen shortest path per ordered qubit pair.

    All edges count one hop (a channel hop is realized by teleportation, a
    local hop by a SWAP). Ties between equal-length paths are broken by a
    seeded random draw once at build time, so runs are reproducible.
    """

    def __init__(self, graph: CouplingGraph, rng: np.random.Generator):
        self.graph = graph
        n = graph.num_qubits
        self.dist = np.full((n, n), -1, dtype=np.int64)
        self._paths: dict[tuple[int, int], tuple[int, ...]] = {}

        for src in range(n):
            dist = self._bfs(src)
            self.dist[src, :] = dist
            for dst in range(n):
                if dst == src:
                    continue
                # walk backwards, sampling uniformly among predecessors
                node = dst
                rev = [dst]
                while node != src:
                    cands = [u for u in self.graph.neighbors[node] if dist[u] == dist[node] - 1]
                    node = cands[int(rng.integers(len(cands)))] if len(cands) > 1 else cands[0]
                    rev.append(node)
                self._paths[(src, dst)] = tuple(reversed(rev))

    def _bfs(self, src: int) -> np.ndarray:
        dist = np.full(self.graph.num_qubits, -1, dtype=np.int64)
        dist[src] = 0
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for v in self.graph.neighbors[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        return dist

    def path(self, i: int, j: int) -> tuple[int, ...]:
        if i == j:
            raise ValueError("path endpoints must differ")
        return self._paths[(i, j)]

    def hops(self, i: int, j: int) -> int:
        return int(self.dist[i, j])


def shortest_path(graph: CouplingGraph, i: int, j: int, seed: int = 0) -> tuple[int, ...]:
    """Convenience one-off path query (builds a throwaway table)."""
    return PathTable(graph, np.random.default_rng(seed)).path(i, j)


# -- reward distance metric ----------------------------------------------------


def weighted_distance(
    graph: CouplingGraph,
    src: int,
    dst: int,
    w: float,
    epr_edges: list[tuple[int, int]],
) -> float:
    """Dijkstra distance where local edges weigh 1, channels w, EPR links 1."""
    extra: dict[int, list[tuple[int, float]]] = {}
    for a, b in epr_edges:
        extra.setdefault(a, []).append((b, 1.0))
        extra.setdefault(b, []).append((a, 1.0))

    dist = [float("inf")] * graph.num_qubits
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == dst:
            return d
        if d > dist[u]:
            continue
        for v in graph.local_neighbors[u]:
            if d + 1.0 < dist[v]:
                dist[v] = d + 1.0
                heapq.heappush(heap, (dist[v], v))
        for a, b in graph.quantum_channels:
            if u == a or u == b:
                v = b if u == a else a
                if d + w < dist[v]:
                    dist[v] = d + w
                    heapq.heappush(heap, (dist[v], v))
        for v, wt in extra.get(u, ()):
            if d + wt < dist[v]:
                dist[v] = d + wt
                heapq.heappush(heap, (dist[v], v))
    raise ValueError(f"no path from {src} to {dst}")


def frontier_distance(
    graph: CouplingGraph,
    holder_pairs: list[tuple[int, int]],
    w: float,
    epr_edges: list[tuple[int, int]],
) -> float:
    """Sum of weighted distances between the holders of each frontier gate."""
    if w <= 1:
        raise ValueError("distance weight w must exceed 1")
    return sum(weighted_distance(graph, a, b, w, epr_edges) for a, b in holder_pairs)
