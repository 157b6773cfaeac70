"""Discrete-event routing environment.

Time model: agent actions issue at the current timestep and occupy their
participating qubits for the operation's duration (per-qubit busy-until
clocks); only STOP advances the clock. Mapping changes take logical effect
at issue time, so the next observation reflects them, while the clocks
enforce the physical duration. Gate-completing operations (local CNOT on
adjacent holders, and the remote two-qubit primitive consuming an
entangled pair) fire automatically whenever feasible and are not agent
actions.

A qubit is idle at time t iff busy_until <= t; an operation of duration d
issued at t sets busy_until = t + d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EnvConfig
from .dag import CircuitDag, Gate
from .hardware import CouplingGraph, frontier_distance

EMPTY = -1  # non-initialized physical qubit
EPR_HALF = -2  # holds one half of a live entangled pair


class InfeasibleActionError(Exception):
    """An operation's preconditions do not hold in the current state."""


def encode_state(mapping, gates: list[Gate], max_gates: int) -> np.ndarray:
    """Flatten mapping + gate tuples into the fixed-size network input.

    First len(mapping) entries are the qubit mapping with entangled-pair
    halves encoded as -1; then one (control, target, layer) triple per
    remaining gate in descending gate-id order, zero-padded to max_gates.
    """
    if len(gates) > max_gates:
        raise ValueError(f"{len(gates)} gates exceed state capacity {max_gates}")
    vec = [int(m) if m >= 0 else -1 for m in mapping]
    for g in sorted(gates, key=lambda g: -g.id):
        vec += [g.control, g.target, g.layer]
    vec += [0] * (3 * (max_gates - len(gates)))
    return np.asarray(vec, dtype=np.int64)


@dataclass
class StepResult:
    reward: float
    done: bool
    success: bool
    kind: str  # stop | swap | gen | tq | rout
    args: tuple
    dt: int  # timesteps skipped (0 for non-stop actions)
    deletes: int
    d_metric: float
    gates_remaining: int


class RoutingEnv:
    """One episode's mutable state plus the transition rules.

    The action space object (see actions.py) decodes agent action indices,
    builds admissibility masks, and calls back into the primitive
    operations here. One instance per episode/rollout; clone() supports
    search.
    """

    def __init__(self, graph: CouplingGraph, space, cfg: EnvConfig, max_gates: int):
        self.graph = graph
        self.space = space
        self.cfg = cfg
        self.max_gates = int(max_gates)
        self.t_max = int(cfg.t_max)
        self.dag: CircuitDag | None = None
        self._mask_cache: np.ndarray | None = None

    # -- episode lifecycle -------------------------------------------------

    def reset(self, dag: CircuitDag, rng: np.random.Generator) -> dict:
        """Place virtual qubits uniformly at random and run automatic deletes."""
        nv = dag.num_virtual_qubits
        if nv > self.graph.num_qubits:
            raise ValueError(f"{nv} virtual qubits exceed {self.graph.num_qubits} physical")
        if len(dag) > self.max_gates:
            raise ValueError(f"circuit has {len(dag)} gates, capacity is {self.max_gates}")
        self.dag = dag.copy()
        self.now = 0
        self.finish_time = 0
        self.mapping = np.full(self.graph.num_qubits, EMPTY, dtype=np.int64)
        self.position_of = np.full(max(nv, 1), -1, dtype=np.int64)
        spots = rng.choice(self.graph.num_qubits, size=nv, replace=False)
        for virt, phys in enumerate(spots):
            self.mapping[phys] = virt
            self.position_of[virt] = phys
        self.busy_until = np.zeros(self.graph.num_qubits, dtype=np.int64)
        self.epr_pairs: list[tuple[int, int]] = []
        self.chains: list[list[tuple]] = []
        self.done = False
        self.success = False
        self.steps = 0
        self.deletes_total = 0
        self.score_reward = 0.0
        self.move_reward = 0.0
        self.stop_reward = 0.0
        self.terminal_reward = 0.0
        self.reward_total = 0.0
        self._mask_cache = None

        deleted, reward = self.auto_execute_deletes()
        if self.dag.is_empty:
            self.done = True
            self.success = True
            self.terminal_reward = self.cfg.rewards.r_success
            self.reward_total += self.terminal_reward
        return {"reset_deletes": len(deleted), "reset_reward": reward, "done": self.done}

    def observe(self) -> tuple[np.ndarray, np.ndarray]:
        state = encode_state(self.mapping, self.dag.gates(), self.max_gates)
        if self._mask_cache is None:
            self._mask_cache = self.space.mask(self)
        return state, self._mask_cache

    def step(self, action_index: int) -> StepResult:
        if self.done:
            raise RuntimeError("episode is finished; reset the environment")
        if self._mask_cache is None:
            self._mask_cache = self.space.mask(self)
        if not self._mask_cache[action_index]:
            raise InfeasibleActionError(f"action {action_index} is not admissible")

        rw = self.cfg.rewards
        d_before = self.distance_metric()
        deletes_before = self.deletes_total

        kind, args, dt = self.space.apply(self, action_index)
        if kind != "stop":
            self.auto_execute_deletes()

        deletes = self.deletes_total - deletes_before
        score_r = rw.r_score * deletes
        d_after = self.distance_metric()
        diff = rw.xi * (d_before - d_after)
        if self.space.kind == "rout":
            # mask already filters regressive moves; chain progress during a
            # skip is movement too, so every action gets the clamped term
            move_r = max(diff, 0.0)
            stop_r = rw.r_stop * dt if kind == "stop" else 0.0
        else:
            move_r = diff if kind in ("swap", "gen", "tq") else 0.0
            stop_r = rw.r_stop if kind == "stop" else 0.0

        terminal = 0.0
        if self.dag.is_empty:
            self.done = True
            self.success = True
            terminal = rw.r_success
        elif self.now >= self.t_max:
            self.done = True
            terminal = rw.r_fail

        self.move_reward += move_r
        self.stop_reward += stop_r
        self.terminal_reward += terminal
        reward = score_r + move_r + stop_r + terminal
        self.reward_total += reward
        self.steps += 1
        self._mask_cache = None
        return StepResult(
            reward=reward,
            done=self.done,
            success=self.success,
            kind=kind,
            args=args,
            dt=dt,
            deletes=deletes,
            d_metric=d_after,
            gates_remaining=len(self.dag),
        )

    @property
    def elapsed_time(self) -> int:
        """Modeled execution time: completion of the final gate, or the deadline."""
        if self.done:
            return self.finish_time if self.success else self.t_max
        return self.now

    # -- primitive state queries --------------------------------------------

    def idle(self, q: int) -> bool:
        return self.busy_until[q] <= self.now

    def holder(self, virtual: int) -> int:
        return int(self.position_of[virtual])

    def pair_on(self, a: int, b: int) -> int | None:
        """Registry index of the live pair held exactly at {a, b}, if any."""
        key = {a, b}
        for idx, (pa, pb) in enumerate(self.epr_pairs):
            if {pa, pb} == key:
                return idx
        return None

    def frontier_holder_pairs(self) -> list[tuple[int, int]]:
        pairs = []
        for g in self.dag.frontier():
            hx, hy = self.position_of[g.control], self.position_of[g.target]
            if hx < 0 or hy < 0:
                raise ValueError(f"frontier virtual qubit of gate {g.id} is unmapped")
            pairs.append((int(hx), int(hy)))
        return pairs

    def distance_metric(self) -> float:
        return frontier_distance(
            self.graph, self.frontier_holder_pairs(), self.cfg.rewards.w, self.epr_pairs
        )

    def frontier_partner(self) -> dict[int, int]:
        """virtual qubit -> its frontier-gate partner (frontier gates are disjoint)."""
        out = {}
        for g in self.dag.frontier():
            out[g.control] = g.target
            out[g.target] = g.control
        return out

    # -- primitive operations ------------------------------------------------

    def _occupy(self, qubits, duration: int) -> None:
        until = self.now + duration
        for q in qubits:
            self.busy_until[q] = until

    def _execute_swap(self, a: int, b: int) -> None:
        ma, mb = int(self.mapping[a]), int(self.mapping[b])
        self.mapping[a], self.mapping[b] = mb, ma
        if ma >= 0:
            self.position_of[ma] = b
        if mb >= 0:
            self.position_of[mb] = a
        if ma == EPR_HALF or mb == EPR_HALF:
            moved = []
            for pa, pb in self.epr_pairs:
                if pa == a:
                    pa = b
                elif pa == b:
                    pa = a
                if pb == a:
                    pb = b
                elif pb == b:
                    pb = a
                moved.append((pa, pb))
            self.epr_pairs = moved
        self._occupy((a, b), self.cfg.timing.t_swap)

    def _execute_generate(self, a: int, b: int) -> None:
        self.mapping[a] = EPR_HALF
        self.mapping[b] = EPR_HALF
        self.epr_pairs.append((min(a, b), max(a, b)))
        self._occupy((a, b), self.cfg.timing.t_gen)

    def _execute_telequbit(self, source: int, near: int, far: int, pair_idx: int) -> None:
        q = int(self.mapping[source])
        self.mapping[source] = EMPTY
        self.mapping[near] = EMPTY
        self.mapping[far] = q
        self.position_of[q] = far
        self.epr_pairs.pop(pair_idx)
        self._occupy((source, near, far), self.cfg.timing.t_remote)

    def apply_swap(self, edge: tuple[int, int]) -> None:
        a, b = edge
        if not self.graph.is_local_edge(a, b):
            raise ValueError(f"({a}, {b}) is not a local edge")
        if not (self.idle(a) and self.idle(b)):
            raise InfeasibleActionError(f"swap endpoints ({a}, {b}) are occupied")
        self._execute_swap(a, b)

    def apply_generate(self, channel: tuple[int, int]) -> None:
        a, b = channel
        if not self.graph.is_channel(a, b):
            raise ValueError(f"({a}, {b}) is not a quantum channel")
        if not (self.idle(a) and self.idle(b)):
            raise InfeasibleActionError(f"channel endpoints ({a}, {b}) are occupied")
        if self.mapping[a] != EMPTY or self.mapping[b] != EMPTY:
            raise InfeasibleActionError("channel endpoints must be non-initialized")
        if self.pair_on(a, b) is not None:
            raise InfeasibleActionError("a live pair already sits on this channel")
        self._execute_generate(a, b)

    def choose_telequbit_source(self, channel: tuple[int, int]) -> tuple[int, int, int, int] | None:
        """Resolve the edge-level teleport action to (source, near, far, pair_idx).

        Requires the pair to sit on the channel endpoints. Among idle
        sources holding a virtual qubit adjacent to either endpoint,
        prefers one whose frontier partner lives in the far module, then
        the lowest physical index.
        """
        a, b = channel
        pair_idx = self.pair_on(a, b)
        if pair_idx is None or not (self.idle(a) and self.idle(b)):
            return None
        partner = self.frontier_partner()
        best = None
        for near, far in ((a, b), (b, a)):
            far_module = self.graph.module_of[far]
            for s in self.graph.local_neighbors[near]:
                virt = int(self.mapping[s])
                if virt < 0 or not self.idle(s):
                    continue
                mate = partner.get(virt)
                useful = mate is not None and self.graph.module_of[self.position_of[mate]] == far_module
                cand = (0 if useful else 1, s, near)
                if best is None or cand < best[:3]:
                    best = (*cand, far)
        if best is None:
            return None
        _, source, near, far = best
        return source, near, far, pair_idx

    def apply_telequbit(self, channel: tuple[int, int], source: int | None = None) -> None:
        a, b = channel
        if not self.graph.is_channel(a, b):
            raise ValueError(f"({a}, {b}) is not a quantum channel")
        if source is None:
            pick = self.choose_telequbit_source(channel)
            if pick is None:
                raise InfeasibleActionError(f"no teleport possible on channel ({a}, {b})")
            src, near, far, pair_idx = pick
        else:
            pair_idx = self.pair_on(a, b)
            if pair_idx is None:
                raise InfeasibleActionError("no live pair on this channel")
            src = source
            near = a if self.graph.module_of[a] == self.graph.module_of[src] else b
            far = b if near == a else a
            if self.mapping[src] < 0:
                raise InfeasibleActionError(f"source {src} holds no virtual qubit")
            if src not in self.graph.local_neighbors[near]:
                raise InfeasibleActionError(f"source {src} is not adjacent to the near half")
            if not (self.idle(src) and self.idle(a) and self.idle(b)):
                raise InfeasibleActionError("teleport participants are occupied")
        self._execute_telequbit(src, near, far, pair_idx)

    # -- automatic gate completion --------------------------------------------

    def _find_telegate(self, hx: int, hy: int) -> tuple[int, int, int] | None:
        mx, my = self.graph.module_of[hx], self.graph.module_of[hy]
        for idx, (pa, pb) in enumerate(self.epr_pairs):
            ma, mb = self.graph.module_of[pa], self.graph.module_of[pb]
            if {ma, mb} != {mx, my}:
                continue
            half_x, half_y = (pa, pb) if ma == mx else (pb, pa)
            if (
                hx in self.graph.local_neighbors[half_x]
                and hy in self.graph.local_neighbors[half_y]
                and self.idle(pa)
                and self.idle(pb)
            ):
                return idx, half_x, half_y
        return None

    def auto_execute_deletes(self) -> tuple[list[int], float]:
        """Complete every currently feasible frontier gate; cascades included.

        A gate completes locally when its holders share a local edge and are
        idle, or remotely when a live pair has one half adjacent to each
        holder (all four participants idle), consuming the pair.
        """
        deleted: list[int] = []
        timing = self.cfg.timing
        progress = True
        while progress:
            progress = False
            for g in self.dag.frontier():
                hx = int(self.position_of[g.control])
                hy = int(self.position_of[g.target])
                if not (self.idle(hx) and self.idle(hy)):
                    continue
                if self.graph.is_local_edge(hx, hy):
                    self._occupy((hx, hy), timing.t_local)
                    self.finish_time = max(self.finish_time, self.now + timing.t_local)
                elif self.graph.module_of[hx] != self.graph.module_of[hy]:
                    found = self._find_telegate(hx, hy)
                    if found is None:
                        continue
                    pair_idx, half_x, half_y = found
                    self.mapping[half_x] = EMPTY
                    self.mapping[half_y] = EMPTY
                    self.epr_pairs.pop(pair_idx)
                    self._occupy((hx, hy, half_x, half_y), timing.t_remote)
                    self.finish_time = max(self.finish_time, self.now + timing.t_remote)
                else:
                    continue
                self.dag.delete(g.id)
                deleted.append(g.id)
                self.deletes_total += 1
                progress = True
                break
        reward = self.cfg.rewards.r_score * len(deleted)
        self.score_reward += reward
        self.reward_total += reward
        self._mask_cache = None
        return deleted, reward

    # -- pending routing chains ------------------------------------------------

    def enqueue_chain(self, ops: list[tuple]) -> None:
        self.chains.append(list(ops))

    def _try_chain_op(self, op: tuple) -> str:
        if op[0] == "swap":
            _, a, b = op
            if not (self.idle(a) and self.idle(b)):
                return "blocked"
            self._execute_swap(a, b)
            return "issued"
        _, src, near, far = op
        if not (self.idle(src) and self.idle(near) and self.idle(far)):
            return "blocked"
        if self.mapping[src] < 0:
            return "truncate"  # the moving qubit was displaced
        pair_idx = self.pair_on(near, far)
        if pair_idx is None:
            return "truncate"  # no pair available at execution time
        self._execute_telequbit(src, near, far, pair_idx)
        return "issued"

    def _pump_chains(self) -> bool:
        progressed = False
        remaining = []
        for chain in self.chains:
            while chain:
                status = self._try_chain_op(chain[0])
                if status == "blocked":
                    break
                if status == "truncate":
                    chain.clear()
                    break
                chain.pop(0)
                progressed = True
            if chain:
                remaining.append(chain)
        self.chains = remaining
        if progressed:
            self._mask_cache = None
        return progressed

    # -- waiting ------------------------------------------------------------

    def apply_stop(self, multi_step: bool) -> int:
        """Advance time; with multi_step, skip until something can happen.

        Each skipped instant first fires automatic deletes, then pending
        chain operations. Skipping ends when a delete fired, a non-STOP
        action became admissible, the circuit completed, or the deadline
        was reached.
        """
        dt = 0
        while True:
            self.now += 1
            dt += 1
            self._mask_cache = None
            deleted, _ = self.auto_execute_deletes()
            self._pump_chains()
            if not multi_step:
                break
            if deleted or self.dag.is_empty or self.now >= self.t_max:
                break
            if self.space.has_nonstop_admissible(self):
                break
        return dt

    # -- support ---------------------------------------------------------------

    def clone(self) -> RoutingEnv:
        c = object.__new__(RoutingEnv)
        c.graph, c.space, c.cfg = self.graph, self.space, self.cfg
        c.max_gates, c.t_max = self.max_gates, self.t_max
        c.dag = self.dag.copy()
        c.now, c.finish_time = self.now, self.finish_time
        c.mapping = self.mapping.copy()
        c.position_of = self.position_of.copy()
        c.busy_until = self.busy_until.copy()
        c.epr_pairs = list(self.epr_pairs)
        c.chains = [list(ch) for ch in self.chains]
        c.done, c.success, c.steps = self.done, self.success, self.steps
        c.deletes_total = self.deletes_total
        c.score_reward, c.move_reward = self.score_reward, self.move_reward
        c.stop_reward, c.terminal_reward = self.stop_reward, self.terminal_reward
        c.reward_total = self.reward_total
        c._mask_cache = None
        return c

    def state_key(self) -> tuple:
        """Hashable snapshot up to a time shift (for search deduplication)."""
        rel = tuple(int(max(0, b - self.now)) for b in self.busy_until)
        return (
            tuple(int(m) for m in self.mapping),
            tuple(sorted(self.epr_pairs)),
            rel,
            tuple(sorted(g.id for g in self.dag.gates())),
            tuple(tuple(ch) for ch in self.chains),
        )

    def validate(self) -> None:
        """Internal consistency; raises AssertionError on violation."""
        seen = {}
        for phys, m in enumerate(self.mapping):
            if m >= 0:
                assert m not in seen, f"virtual {m} mapped twice"
                seen[int(m)] = phys
                assert self.position_of[m] == phys
        half_positions = sorted(int(q) for q, m in enumerate(self.mapping) if m == EPR_HALF)
        registry_positions = sorted(q for pair in self.epr_pairs for q in pair)
        assert half_positions == registry_positions, "pair registry out of sync with mapping"
        for pa, pb in self.epr_pairs:
            assert self.graph.module_of[pa] != self.graph.module_of[pb]
