"""Exhaustive minimum-time search on tiny instances.

Independent reference for the environment semantics: uniform-cost search
over admissible edge-level action sequences (the per-edge alphabet spans
every reachable schedule) to find the minimum modeled execution time.
States are deduplicated up to a time shift, which is sound because
transitions are deterministic.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EnvConfig
from .dag import CircuitDag
from .env import RoutingEnv
from .hardware import CouplingGraph
from .learner import run_episode

EXCEEDS_LIMIT = "exceeds_limit"


def optimal_time(
    graph: CouplingGraph,
    dag: CircuitDag,
    cfg: EnvConfig,
    depth_limit: int = 60,
    mapping: list[int] | None = None,
    seed: int = 0,
) -> int | str:
    """Minimum elapsed time to empty the DAG, or EXCEEDS_LIMIT.

    mapping fixes the initial placement (virtual -> physical); otherwise a
    seeded random placement is drawn. depth_limit caps the explored clock.
    """
    from .actions import make_env  # local import to avoid a cycle

    cfg_limited = EnvConfig(timing=cfg.timing, rewards=cfg.rewards, t_max=depth_limit)
    env = make_env(graph, "baseline", cfg_limited, max_gates=max(len(dag), 1))
    if mapping is not None:
        _reset_fixed(env, dag, mapping)
    else:
        env.reset(dag, np.random.default_rng(seed))
    if env.dag.is_empty:
        return env.finish_time

    best: int | None = None
    counter = 0
    heap: list[tuple[int, int, RoutingEnv]] = [(env.now, counter, env)]
    seen: dict[tuple, int] = {env.state_key(): env.now}
    while heap:
        now, _, state = heapq.heappop(heap)
        if best is not None and now >= best:
            break
        if seen.get(state.state_key(), now) < now:
            continue
        _, mask = state.observe()
        for action in np.flatnonzero(mask):
            child = state.clone()
            result = child.step(int(action))
            if result.done:
                if child.success and (best is None or child.finish_time < best):
                    best = child.finish_time
                continue
            if best is not None and child.now >= best:
                continue
            key = child.state_key()
            prev = seen.get(key)
            if prev is not None and prev <= child.now:
                continue
            seen[key] = child.now
            counter += 1
            heapq.heappush(heap, (child.now, counter, child))
    return best if best is not None else EXCEEDS_LIMIT


def _reset_fixed(env: RoutingEnv, dag: CircuitDag, mapping: list[int]) -> None:
    """Reset with a caller-chosen placement instead of a random one."""
    nv = dag.num_virtual_qubits
    if len(mapping) != nv:
        raise ValueError("mapping must list one physical qubit per virtual qubit")
    env.reset(dag, np.random.default_rng(0))
    # undo the random placement and its automatic deletes, then replace
    env.dag = dag.copy()
    env.now = 0
    env.finish_time = 0
    env.mapping[:] = -1
    env.busy_until[:] = 0
    env.epr_pairs = []
    env.chains = []
    env.deletes_total = 0
    env.score_reward = 0.0
    env.reward_total = 0.0
    env.done = env.success = False
    env.terminal_reward = 0.0
    env._mask_cache = None
    for virt, phys in enumerate(mapping):
        env.mapping[phys] = virt
        env.position_of[virt] = phys
    env.auto_execute_deletes()
    if env.dag.is_empty:
        env.done = env.success = True
        env.terminal_reward = env.cfg.rewards.r_success
        env.reward_total += env.terminal_reward


@dataclass
class PolicySample:
    times: list[int]
    failures: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.times)) if self.times else 0.0

    @property
    def std(self) -> float:
        return float(np.std(self.times)) if self.times else 0.0


def random_policy_baseline(
    graph: CouplingGraph,
    dag: CircuitDag,
    seeds: list[int],
    cfg: EnvConfig,
    kind: str = "baseline",
) -> PolicySample:
    """Elapsed-time distribution of the uniform-over-mask policy."""
    from .actions import make_env

    env = make_env(graph, kind, cfg, max_gates=max(len(dag), 1))
    times = []
    failures = 0
    for seed in seeds:
        rec = run_episode(env, dag, agent=None, eps=1.0, rng=np.random.default_rng(seed))
        times.append(rec.time_elapsed)
        failures += 0 if rec.success else 1
    return PolicySample(times=times, failures=failures)


# -- result cache ------------------------------------------------------------


def instance_hash(graph: CouplingGraph, dag_gates: list[tuple[int, int]],
                  num_virtual: int, mapping: list[int] | None, cfg: EnvConfig) -> str:
    payload = json.dumps(
        {
            "graph": graph.to_dict(),
            "gates": [list(g) for g in dag_gates],
            "num_virtual": num_virtual,
            "mapping": mapping,
            "timing": [cfg.timing.t_local, cfg.timing.t_swap, cfg.timing.t_gen, cfg.timing.t_remote],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def cached_optimal_time(cache_path: str | Path | None, key: str, compute) -> int | str:
    cache = {}
    if cache_path is not None and Path(cache_path).exists():
        cache = json.loads(Path(cache_path).read_text(encoding="utf-8"))
    if key in cache:
        return cache[key]
    value = compute()
    if cache_path is not None:
        cache[key] = value
        Path(cache_path).write_text(json.dumps(cache, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return value
