"""Agent action alphabets, admissibility masks, and chain expansion.

Two alphabets share the environment:

* baseline: STOP, one SWAP per local edge, one teleport and one generate
  per channel; size 1 + |E_n| + 2|E_c|.
* rout: STOP, one generate per channel, and one directed routing action
  per ordered qubit pair (i, j) that moves the content of i to j along a
  frozen shortest path as a chain of SWAPs and teleports; size
  1 + |E_c| + |V|(|V|-1).

Routing actions are masked down to three classes: a frontier qubit moving
toward its gate partner, a non-initialized qubit moving toward a channel
endpoint in its module, and an entangled half / frontier qubit moving
toward one another within a module. A pair is admitted only if the first
operation of its chain can be issued immediately.
"""

from __future__ import annotations

import numpy as np

from .config import EnvConfig
from .env import EMPTY, InfeasibleActionError, RoutingEnv
from .hardware import CouplingGraph, PathTable

CLASS_FRONTIER_TO_PARTNER = "frontier_to_partner"  # class i
CLASS_FREE_TO_CHANNEL = "free_to_channel"  # class ii
CLASS_HALF_TO_FRONTIER = "half_to_frontier"  # class iii, half mover
CLASS_FRONTIER_TO_HALF = "frontier_to_half"  # class iii, frontier mover


def generate_admissible(env: RoutingEnv, a: int, b: int) -> bool:
    return (
        env.idle(a)
        and env.idle(b)
        and env.mapping[a] == EMPTY
        and env.mapping[b] == EMPTY
        and env.pair_on(a, b) is None
    )


def expand_rout(graph: CouplingGraph, paths: PathTable, i: int, j: int) -> list[tuple]:
    """Primitive operations realizing the move of i's content to j.

    Local path edges become SWAPs. A channel crossing consumes two path
    vertices in one teleport: the mover must stand adjacent to the near
    endpoint, jumps to the far endpoint, and the near endpoint's half is
    measured out. A path that starts on a channel edge cannot be crossed
    (the mover occupies the communication qubit itself) and expands to the
    reachable prefix, possibly empty.
    """
    path = paths.path(i, j)
    ops: list[tuple] = []
    m = 0
    while m < len(path) - 1:
        a, b = path[m], path[m + 1]
        if graph.is_channel(a, b):
            break
        if m + 2 < len(path) and graph.is_channel(path[m + 1], path[m + 2]):
            ops.append(("tq", a, path[m + 1], path[m + 2]))
            m += 2
        else:
            ops.append(("swap", a, b))
            m += 1
    return ops


def first_op_executable(env: RoutingEnv, ops: list[tuple]) -> bool:
    if not ops:
        return False
    op = ops[0]
    if op[0] == "swap":
        _, a, b = op
        return env.idle(a) and env.idle(b)
    _, src, near, far = op
    return (
        env.idle(src)
        and env.idle(near)
        and env.idle(far)
        and env.mapping[src] >= 0
        and env.pair_on(near, far) is not None
    )


class BaselineActionSpace:
    """Per-edge alphabet: STOP | SWAP_e | telequbit_e | generate_e."""

    kind = "baseline"

    def __init__(self, graph: CouplingGraph):
        self.graph = graph
        self.swaps = list(graph.local_edges)
        self.channels = list(graph.quantum_channels)
        self.size = 1 + len(self.swaps) + 2 * len(self.channels)
        self.num_heads = self.size

    def mask(self, env: RoutingEnv) -> np.ndarray:
        m = np.zeros(self.size, dtype=bool)
        m[0] = True
        for k, (a, b) in enumerate(self.swaps):
            m[1 + k] = env.idle(a) and env.idle(b)
        off = 1 + len(self.swaps)
        for k, ch in enumerate(self.channels):
            m[off + k] = env.choose_telequbit_source(ch) is not None
        off += len(self.channels)
        for k, (a, b) in enumerate(self.channels):
            m[off + k] = generate_admissible(env, a, b)
        return m

    def has_nonstop_admissible(self, env: RoutingEnv) -> bool:
        return bool(self.mask(env)[1:].any())

    def apply(self, env: RoutingEnv, idx: int) -> tuple[str, tuple, int]:
        ns, nc = len(self.swaps), len(self.channels)
        if idx == 0:
            return "stop", (), env.apply_stop(multi_step=False)
        if idx <= ns:
            edge = self.swaps[idx - 1]
            env.apply_swap(edge)
            return "swap", edge, 0
        if idx <= ns + nc:
            ch = self.channels[idx - 1 - ns]
            env.apply_telequbit(ch)
            return "tq", ch, 0
        if idx <= ns + 2 * nc:
            ch = self.channels[idx - 1 - ns - nc]
            env.apply_generate(ch)
            return "gen", ch, 0
        raise IndexError(f"action index {idx} out of range")

    def describe(self, idx: int) -> str:
        ns, nc = len(self.swaps), len(self.channels)
        if idx == 0:
            return "STOP"
        if idx <= ns:
            a, b = self.swaps[idx - 1]
            return f"SWAP:{a}-{b}"
        if idx <= ns + nc:
            a, b = self.channels[idx - 1 - ns]
            return f"TQ:{a}-{b}"
        a, b = self.channels[idx - 1 - ns - nc]
        return f"GEN:{a}-{b}"

    def action_values(self, heads: np.ndarray, alpha: float) -> np.ndarray:
        return heads


class RoutActionSpace:
    """Qubit-pair alphabet: STOP | gen_e | ROUT(i, j) over ordered pairs."""

    kind = "rout"

    def __init__(self, graph: CouplingGraph, paths: PathTable):
        self.graph = graph
        self.paths = paths
        self.channels = list(graph.quantum_channels)
        v = graph.num_qubits
        self.num_pairs = v * (v - 1)
        self.size = 1 + len(self.channels) + self.num_pairs
        self.num_heads = 1 + len(self.channels) + v
        # per-qubit head index of source/destination for every pair action
        self._src = np.repeat(np.arange(v), v - 1)
        self._dst = np.concatenate([[j for j in range(v) if j != i] for i in range(v)])

    # -- index layout ------------------------------------------------------

    def pair_index(self, i: int, j: int) -> int:
        v = self.graph.num_qubits
        return 1 + len(self.channels) + i * (v - 1) + (j - 1 if j > i else j)

    def decode_pair(self, idx: int) -> tuple[int, int]:
        v = self.graph.num_qubits
        k = idx - 1 - len(self.channels)
        i, r = divmod(k, v - 1)
        return i, r + 1 if r >= i else r

    # -- admissibility -----------------------------------------------------

    def _half_positions(self, env: RoutingEnv) -> list[int]:
        return sorted(q for pair in env.epr_pairs for q in pair)

    def matching_classes(self, env: RoutingEnv, i: int, j: int) -> list[str]:
        """Class labels justifying ROUT(i, j); at most one by construction.

        A frontier-qubit mover is classified toward its partner first and
        toward an entangled half only otherwise, so the classes partition
        the admissible pairs.
        """
        if i == j:
            return []
        graph, paths = self.graph, self.paths
        content = int(env.mapping[i])
        mod_i = graph.module_of[i]
        if content >= 0:
            partner = env.frontier_partner().get(content)
            if partner is None:
                return []
            p = env.holder(partner)
            if paths.hops(i, p) >= 2 and j in paths.path(i, p)[1:]:
                return [CLASS_FRONTIER_TO_PARTNER]
            for h in self._half_positions(env):
                if graph.module_of[h] == mod_i and paths.hops(i, h) >= 2 and j in paths.path(i, h)[1:]:
                    return [CLASS_FRONTIER_TO_HALF]
            return []
        if content == EMPTY:
            for ch in self.channels:
                c = graph.channel_endpoint_in_module(ch, mod_i)
                if c is None or c == i:
                    continue
                if j in paths.path(i, c)[1:]:
                    return [CLASS_FREE_TO_CHANNEL]
            return []
        frontier_positions = sorted(env.holder(v) for v in env.frontier_partner())
        for f in frontier_positions:
            if graph.module_of[f] == mod_i and f != i and paths.hops(i, f) >= 2 and j in paths.path(i, f)[1:]:
                return [CLASS_HALF_TO_FRONTIER]
        return []

    def _admissible_pairs(self, env: RoutingEnv) -> dict[tuple[int, int], str]:
        """All class-justified (i, j) pairs; precedence mirrors matching_classes."""
        graph, paths = self.graph, self.paths
        out: dict[tuple[int, int], str] = {}
        partner = env.frontier_partner()
        frontier_positions = sorted(env.holder(v) for v in partner)
        halves = self._half_positions(env)

        for v in sorted(partner):
            i, p = env.holder(v), env.holder(partner[v])
            if paths.hops(i, p) >= 2:
                for j in paths.path(i, p)[1:]:
                    out.setdefault((i, int(j)), CLASS_FRONTIER_TO_PARTNER)
        for i in range(graph.num_qubits):
            if env.mapping[i] != EMPTY:
                continue
            for ch in self.channels:
                c = graph.channel_endpoint_in_module(ch, graph.module_of[i])
                if c is None or c == i:
                    continue
                for j in paths.path(i, c)[1:]:
                    out.setdefault((i, int(j)), CLASS_FREE_TO_CHANNEL)
        for h in halves:
            for f in frontier_positions:
                if graph.module_of[f] == graph.module_of[h] and paths.hops(h, f) >= 2:
                    for j in paths.path(h, f)[1:]:
                        out.setdefault((h, int(j)), CLASS_HALF_TO_FRONTIER)
        for f in frontier_positions:
            for h in halves:
                if graph.module_of[f] == graph.module_of[h] and paths.hops(f, h) >= 2:
                    for j in paths.path(f, h)[1:]:
                        out.setdefault((f, int(j)), CLASS_FRONTIER_TO_HALF)
        return out

    def mask(self, env: RoutingEnv) -> np.ndarray:
        m = np.zeros(self.size, dtype=bool)
        m[0] = True
        for k, (a, b) in enumerate(self.channels):
            m[1 + k] = generate_admissible(env, a, b)
        for (i, j) in self._admissible_pairs(env):
            ops = expand_rout(self.graph, self.paths, i, j)
            if first_op_executable(env, ops):
                m[self.pair_index(i, j)] = True
        return m

    def has_nonstop_admissible(self, env: RoutingEnv) -> bool:
        for a, b in self.channels:
            if generate_admissible(env, a, b):
                return True
        for (i, j) in self._admissible_pairs(env):
            if first_op_executable(env, expand_rout(self.graph, self.paths, i, j)):
                return True
        return False

    def apply(self, env: RoutingEnv, idx: int) -> tuple[str, tuple, int]:
        if idx == 0:
            return "stop", (), env.apply_stop(multi_step=True)
        if idx <= len(self.channels):
            ch = self.channels[idx - 1]
            env.apply_generate(ch)
            return "gen", ch, 0
        i, j = self.decode_pair(idx)
        ops = expand_rout(self.graph, self.paths, i, j)
        if not first_op_executable(env, ops):
            raise InfeasibleActionError(f"routing chain {i}->{j} cannot start")
        head = ops[0]
        if head[0] == "swap":
            env.apply_swap((head[1], head[2]))
        else:
            env.apply_telequbit((head[2], head[3]), source=head[1])
        if len(ops) > 1:
            env.enqueue_chain(ops[1:])
        return "rout", (i, j), 0

    def describe(self, idx: int) -> str:
        if idx == 0:
            return "STOP"
        if idx <= len(self.channels):
            a, b = self.channels[idx - 1]
            return f"GEN:{a}-{b}"
        i, j = self.decode_pair(idx)
        return f"ROUT:{i}>{j}"

    def action_values(self, heads: np.ndarray, alpha: float) -> np.ndarray:
        """Expand per-qubit heads into the full alphabet's value vector."""
        base = 1 + len(self.channels)
        values = np.empty(self.size, dtype=heads.dtype)
        values[:base] = heads[:base]
        q = heads[base:]
        values[base:] = (1.0 - alpha) * q[self._src] + alpha * q[self._dst]
        return values


def build_action_space(graph: CouplingGraph, kind: str, path_rng: np.random.Generator | None = None):
    if kind == "baseline":
        return BaselineActionSpace(graph)
    if kind == "rout":
        if path_rng is None:
            path_rng = np.random.default_rng(0)
        return RoutActionSpace(graph, PathTable(graph, path_rng))
    raise ValueError(f"unknown action space kind {kind!r}")


def make_env(
    graph: CouplingGraph,
    kind: str,
    cfg: EnvConfig,
    max_gates: int,
    path_seed: int = 0,
) -> RoutingEnv:
    space = build_action_space(graph, kind, np.random.default_rng(path_seed))
    return RoutingEnv(graph, space, cfg, max_gates)
