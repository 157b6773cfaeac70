"""Command-line surface: generate circuit sets, train, evaluate, run the oracle.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime error.
The global seed falls back to the DQCR_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .actions import build_action_space, make_env
from .circuits import CircuitSetSpec, load_set, write_set
from .config import EnvConfig, load_config
from .dag import load_circuit
from .env import RoutingEnv
from .hardware import CouplingGraph, build_topology, load_graph
from .learner import (
    evaluate_agent,
    load_checkpoint,
    restore_agent,
    run_episode,
    save_checkpoint,
    train_agent,
)
from .oracle import EXCEEDS_LIMIT, cached_optimal_time, instance_hash, optimal_time
from .reporting import (
    write_eval_csv,
    write_moving_average_csv,
    write_summary_csv,
    write_trace_csv,
    write_training_csv,
)


class ValidationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("DQCR_SEED")
    return int(env) if env else 0


def _load_graph_arg(args) -> tuple[CouplingGraph, str | None]:
    if args.graph_file:
        return load_graph(args.graph_file), None
    if args.topology:
        return build_topology(args.topology), args.topology
    raise ValidationFailure("provide --topology or --graph-file")


def _apply_overrides(obj, args, names: dict[str, str]):
    for attr, flag in names.items():
        value = getattr(args, flag)
        if value is not None:
            setattr(obj, attr, value)
    return obj


def cmd_generate(args) -> int:
    spec = CircuitSetSpec(
        num_circuits=args.count,
        num_virtual_qubits=args.qubits,
        num_gates=args.gates,
        seed=_resolve_seed(args.seed),
    )
    try:
        manifest = write_set(args.out, spec, force=args.force)
    except FileExistsError as exc:
        raise ValidationFailure(str(exc)) from exc
    print(f"wrote {spec.num_circuits} circuits to {manifest.parent}")
    return 0


def cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        env_cfg, schedule = load_config(args.config)
    except (ValueError, FileNotFoundError) as exc:
        raise ValidationFailure(f"bad config: {exc}") from exc
    if args.t_max is not None:
        env_cfg.t_max = args.t_max
    _apply_overrides(
        schedule,
        args,
        {
            "learning_rate": "learning_rate",
            "batch_size": "batch_size",
            "buffer_capacity": "buffer_capacity",
            "gamma": "gamma",
            "tau": "tau",
            "alpha": "alpha",
            "epsilon_decay_denominator": "epsilon_decay",
            "learn_every": "learn_every",
            "learn_iterations": "learn_iterations",
            "hidden1": "hidden1",
            "hidden2": "hidden2",
        },
    )
    graph, topology = _load_graph_arg(args)
    set_dir = Path(args.set)
    if not (set_dir / "manifest.json").exists():
        raise ValidationFailure(f"no circuit set at {set_dir}")
    manifest, circuits = load_set(set_dir)
    max_gates = args.max_gates or manifest["num_gates"]

    env = make_env(graph, args.agent, env_cfg, max_gates, path_seed=seed)
    started = time.perf_counter()
    agent, records = train_agent(env, circuits, schedule, args.episodes, seed)
    wall = time.perf_counter() - started

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_training_csv(out / "episodes.csv", records)
    write_moving_average_csv(out / "moving_average_time.csv", [r.time_elapsed for r in records])
    write_moving_average_csv(out / "moving_average_reward.csv", [r.reward for r in records])
    save_checkpoint(
        out / "checkpoint.bin",
        agent,
        {
            "topology": topology,
            "graph": graph.to_dict(),
            "max_gates": max_gates,
            "path_seed": seed,
            "t_max": env_cfg.t_max,
        },
    )
    successes = sum(1 for r in records if r.success)
    print(f"trained {len(records)} episodes ({successes} successful) in {wall:.1f}s wall clock")
    print(f"artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        header, main_params, target_params = load_checkpoint(args.checkpoint)
    except (ValueError, FileNotFoundError) as exc:
        raise ValidationFailure(str(exc)) from exc
    graph = CouplingGraph.from_dict(header["graph"])
    space = build_action_space(graph, header["space"], np.random.default_rng(header["path_seed"]))
    try:
        agent = restore_agent(header, main_params, target_params, space)
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from exc

    env_cfg, _ = load_config(args.config)
    env_cfg.t_max = args.t_max if args.t_max is not None else header.get("t_max", env_cfg.t_max)
    set_dir = Path(args.set)
    if not (set_dir / "manifest.json").exists():
        raise ValidationFailure(f"no circuit set at {set_dir}")
    manifest, circuits = load_set(set_dir)
    if manifest["num_gates"] > header["max_gates"]:
        raise ValidationFailure(
            f"test circuits have {manifest['num_gates']} gates; "
            f"checkpoint capacity is {header['max_gates']}"
        )

    env = RoutingEnv(graph, space, env_cfg, header["max_gates"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.trace:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        records = []
        root = np.random.SeedSequence(seed)
        for k, seq in enumerate(root.spawn(len(circuits))):
            trace: list = []
            rec = run_episode(env, circuits[k], agent, args.epsilon,
                              np.random.default_rng(seq), trace=trace)
            rec.episode = k
            records.append(rec)
            write_trace_csv(trace_dir / f"trace_{k:04d}.csv", trace)
    else:
        records = evaluate_agent(env, circuits, agent, args.epsilon, seed)
    write_eval_csv(out / "results.csv", records)
    write_summary_csv(out / "summary.csv", records)
    mean_t = float(np.mean([r.time_elapsed for r in records])) if records else 0.0
    print(f"evaluated {len(records)} circuits; mean time {mean_t:.1f}")
    return 0


def cmd_oracle(args) -> int:
    graph, _ = _load_graph_arg(args)
    try:
        dag = load_circuit(args.circuit)
    except FileNotFoundError as exc:
        raise ValidationFailure(str(exc)) from exc
    mapping = None
    if args.mapping:
        mapping = [int(x) for x in args.mapping.split(",")]
    cfg = EnvConfig(t_max=args.depth_limit)
    gates = [(g.control, g.target) for g in dag.gates()]
    key = instance_hash(graph, gates, dag.num_virtual_qubits, mapping, cfg)
    value = cached_optimal_time(
        args.cache,
        key,
        lambda: optimal_time(graph, dag, cfg, depth_limit=args.depth_limit,
                             mapping=mapping, seed=_resolve_seed(args.seed)),
    )
    if value == EXCEEDS_LIMIT:
        print(f"no solution within {args.depth_limit} timesteps")
    else:
        print(f"optimal time: {value}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="dqcr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random circuit set")
    p.add_argument("--out", required=True)
    p.add_argument("--gates", type=int, default=30)
    p.add_argument("--count", type=int, default=250)
    p.add_argument("--qubits", type=int, default=18)
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train an agent on a circuit set")
    p.add_argument("--agent", choices=("baseline", "rout"), required=True)
    p.add_argument("--topology")
    p.add_argument("--graph-file")
    p.add_argument("--set", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=250)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--t-max", type=int, dest="t_max")
    p.add_argument("--max-gates", type=int, dest="max_gates")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--buffer-capacity", type=int, dest="buffer_capacity")
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon-decay", type=float, dest="epsilon_decay")
    p.add_argument("--learn-every", type=int, dest="learn_every")
    p.add_argument("--learn-iterations", type=int, dest="learn_iterations")
    p.add_argument("--hidden1", type=int)
    p.add_argument("--hidden2", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test set")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--t-max", type=int, dest="t_max")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exhaustive minimum-time search on a tiny instance")
    p.add_argument("--topology")
    p.add_argument("--graph-file")
    p.add_argument("--circuit", required=True)
    p.add_argument("--depth-limit", type=int, default=60, dest="depth_limit")
    p.add_argument("--mapping", help="comma-separated physical qubit per virtual qubit")
    p.add_argument("--cache")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"dqcr: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface as runtime failure
        print(f"dqcr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
