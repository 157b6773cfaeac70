"""Double-DQN agent over the flat state vector.

Two ReLU hidden layers, main and target parameter sets, uniform replay,
epsilon-greedy over masked actions. With the qubit-pair action space the
network emits one head per physical qubit plus STOP/generate heads; a
directed routing action (i, j) is valued as (1-alpha)*Q_i + alpha*Q_j, so
one gradient step spreads into both heads with those weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EnvConfig, TrainSchedule
from .dag import CircuitDag
from .env import RoutingEnv

_PARAM_ORDER = ("W1", "b1", "W2", "b2", "W3", "b3")
CHECKPOINT_MAGIC = b"DQCR-CKPT-1\n"


def epsilon_schedule(k: int, eps0: float = 1.0, decay_denominator: float = 80.0) -> float:
    """Exploration rate for episode k: eps0 / (1 + k / decay_denominator)."""
    if k < 0:
        raise ValueError("episode index must be non-negative")
    return eps0 / (1.0 + k / decay_denominator)


def induced_q(heads: np.ndarray, i: int, j: int, alpha: float) -> float:
    """Directed routing value (1-alpha)*Q_i + alpha*Q_j from per-qubit heads."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    return (1.0 - alpha) * float(heads[i]) + alpha * float(heads[j])


def select_action(values: np.ndarray, mask: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over admissible actions; greedy ties go to the lowest index."""
    admissible = np.flatnonzero(mask)
    if admissible.size == 0:
        raise ValueError("mask admits no action")
    if rng.random() < eps:
        return int(admissible[rng.integers(admissible.size)])
    masked = np.where(mask, values, -np.inf)
    return int(np.argmax(masked))


class QNetwork:
    """Two-hidden-layer ReLU MLP with linear heads, float64 throughout."""

    def __init__(self, input_dim: int, hidden1: int, hidden2: int, output_dim: int,
                 rng: np.random.Generator | None = None):
        self.input_dim = input_dim
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.output_dim = output_dim
        self.params: dict[str, np.ndarray] = {}
        dims = [(input_dim, hidden1), (hidden1, hidden2), (hidden2, output_dim)]
        for layer, (fan_in, fan_out) in enumerate(dims, start=1):
            bound = 1.0 / np.sqrt(fan_in)
            if rng is None:
                w = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.params[f"W{layer}"] = w
            self.params[f"b{layer}"] = b

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_batch(np.asarray(x, dtype=np.float64)[None, :])[0]

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        out, _ = self._forward_cached(np.asarray(x, dtype=np.float64))
        return out

    def _forward_cached(self, x: np.ndarray):
        if x.shape[1] != self.input_dim:
            raise ValueError(f"input dim {x.shape[1]} != {self.input_dim}")
        p = self.params
        z1 = x @ p["W1"] + p["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p["W2"] + p["b2"]
        a2 = np.maximum(z2, 0.0)
        out = a2 @ p["W3"] + p["b3"]
        return out, (x, z1, a1, z2, a2)

    def loss_and_grads(self, x: np.ndarray, selector: np.ndarray, y: np.ndarray):
        """MSE between selected head combinations and targets, plus gradients.

        selector has one row per sample with the weight of each head in the
        predicted value (one-hot for plain actions; (1-alpha, alpha) split
        for induced pair values).
        """
        out, (x, z1, a1, z2, a2) = self._forward_cached(np.asarray(x, dtype=np.float64))
        pred = (out * selector).sum(axis=1)
        err = pred - y
        loss = float(np.mean(err**2))
        b = x.shape[0]
        dout = selector * (2.0 * err / b)[:, None]
        p = self.params
        grads = {
            "W3": a2.T @ dout,
            "b3": dout.sum(axis=0),
        }
        da2 = dout @ p["W3"].T
        dz2 = da2 * (z2 > 0.0)
        grads["W2"] = a1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        da1 = dz2 @ p["W2"].T
        dz1 = da1 * (z1 > 0.0)
        grads["W1"] = x.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def copy(self) -> QNetwork:
        clone = QNetwork(self.input_dim, self.hidden1, self.hidden2, self.output_dim)
        for k, v in self.params.items():
            clone.params[k] = v.copy()
        return clone

    def soft_update_from(self, other: QNetwork, tau: float) -> None:
        for k in self.params:
            self.params[k] = tau * other.params[k] + (1.0 - tau) * self.params[k]


class AdamState:
    """Adaptive-moment optimizer state for one parameter set."""

    def __init__(self, net: QNetwork, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}

    def update(self, net: QNetwork, grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g**2
            net.params[k] -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, mask_dim: int):
        self.capacity = capacity
        self.state_dim = state_dim
        self.mask_dim = mask_dim
        self.size = 0
        self._head = 0
        self._allocated = False

    def _allocate(self) -> None:
        self.states = np.zeros((self.capacity, self.state_dim), dtype=np.int64)
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity, dtype=np.float64)
        self.next_states = np.zeros((self.capacity, self.state_dim), dtype=np.int64)
        self.dones = np.zeros(self.capacity, dtype=bool)
        self.next_masks = np.zeros((self.capacity, self.mask_dim), dtype=bool)
        self._allocated = True

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state, done, next_mask) -> None:
        if not self._allocated:
            self._allocate()
        i = self._head
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self.next_masks[i] = next_mask
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} < batch {batch_size}")
        return rng.choice(self.size, size=batch_size, replace=False)


class DdqnAgent:
    """Main/target networks, replay, and the double-DQN update rule."""

    def __init__(self, space, input_dim: int, schedule: TrainSchedule, rng: np.random.Generator):
        self.space = space
        self.schedule = schedule
        self.input_dim = input_dim
        self.main = QNetwork(input_dim, schedule.hidden1, schedule.hidden2, space.num_heads, rng)
        self.target = self.main.copy()
        self.buffer = ReplayBuffer(schedule.buffer_capacity, input_dim, space.size)
        self.adam = AdamState(self.main)
        self.actions_taken = 0

    def act(self, state: np.ndarray, mask: np.ndarray, eps: float, rng: np.random.Generator) -> int:
        values = self.space.action_values(self.main.forward(state), self.schedule.alpha)
        return select_action(values, mask, eps, rng)

    def _action_values_batch(self, net: QNetwork, states: np.ndarray) -> np.ndarray:
        heads = net.forward_batch(states)
        if self.space.kind == "baseline":
            return heads
        base = 1 + len(self.space.channels)
        q = heads[:, base:]
        vals = np.empty((heads.shape[0], self.space.size))
        vals[:, :base] = heads[:, :base]
        a = self.schedule.alpha
        vals[:, base:] = (1.0 - a) * q[:, self.space._src] + a * q[:, self.space._dst]
        return vals

    def ddqn_targets(self, rewards, next_states, dones, next_masks) -> np.ndarray:
        """y = r for terminals, else r + gamma * Q_target(s', argmax_main Q(s', .))."""
        y = rewards.copy()
        live = ~dones
        if live.any():
            ns = next_states[live]
            masks = next_masks[live]
            vals_main = self._action_values_batch(self.main, ns)
            vals_main[~masks] = -np.inf
            picked = np.argmax(vals_main, axis=1)
            vals_target = self._action_values_batch(self.target, ns)
            y[live] += self.schedule.gamma * vals_target[np.arange(len(picked)), picked]
        return y

    def _selector(self, actions: np.ndarray) -> np.ndarray:
        sel = np.zeros((len(actions), self.space.num_heads))
        if self.space.kind == "baseline":
            sel[np.arange(len(actions)), actions] = 1.0
            return sel
        base = 1 + len(self.space.channels)
        a = self.schedule.alpha
        for row, act in enumerate(actions):
            if act < base:
                sel[row, act] = 1.0
            else:
                i, j = self.space.decode_pair(int(act))
                sel[row, base + i] = 1.0 - a
                sel[row, base + j] = a
        return sel

    def learn_step(self, rng: np.random.Generator) -> float:
        """One sampled gradient step plus a soft target update; returns the loss."""
        sched = self.schedule
        idx = self.buffer.sample(sched.batch_size, rng)
        states = self.buffer.states[idx].astype(np.float64)
        actions = self.buffer.actions[idx]
        y = self.ddqn_targets(
            self.buffer.rewards[idx],
            self.buffer.next_states[idx].astype(np.float64),
            self.buffer.dones[idx],
            self.buffer.next_masks[idx],
        )
        loss, grads = self.main.loss_and_grads(states, self._selector(actions), y)
        self.adam.update(self.main, grads, sched.learning_rate)
        self.target.soft_update_from(self.main, sched.tau)
        return loss


@dataclass
class EpisodeRecord:
    episode: int
    reward: float
    time_elapsed: int
    success: bool
    epsilon: float
    mean_loss: float
    steps: int


def run_episode(
    env: RoutingEnv,
    dag: CircuitDag,
    agent: DdqnAgent | None,
    eps: float,
    rng: np.random.Generator,
    sample_rng: np.random.Generator | None = None,
    learn: bool = False,
    trace: list | None = None,
) -> EpisodeRecord:
    """One full compile attempt; agent=None plays uniformly over the mask.

    With learn=True the agent stores every transition and runs its batch of
    learning iterations each time its global action counter hits the
    schedule's learning frequency.
    """
    env.reset(dag, rng)
    losses: list[float] = []
    while not env.done:
        state, mask = env.observe()
        if agent is None:
            action = select_action(np.zeros(mask.shape), mask, 1.0, rng)
        else:
            action = agent.act(state, mask, eps, rng)
        result = env.step(action)
        if trace is not None:
            trace.append((env.now, result))
        if agent is not None and learn:
            if result.done:
                next_state, next_mask = env.observe()[0], np.ones(env.space.size, dtype=bool)
            else:
                next_state, next_mask = env.observe()
            agent.buffer.push(state, action, result.reward, next_state, result.done, next_mask)
            agent.actions_taken += 1
            sched = agent.schedule
            if (
                agent.actions_taken % sched.learn_every == 0
                and len(agent.buffer) >= sched.batch_size
            ):
                for _ in range(sched.learn_iterations):
                    losses.append(agent.learn_step(sample_rng))
    return EpisodeRecord(
        episode=0,
        reward=env.reward_total,
        time_elapsed=env.elapsed_time,
        success=env.success,
        epsilon=eps,
        mean_loss=float(np.mean(losses)) if losses else 0.0,
        steps=env.steps,
    )


def train_agent(
    env: RoutingEnv,
    circuits: list[CircuitDag],
    schedule: TrainSchedule,
    episodes: int,
    seed: int,
) -> tuple[DdqnAgent, list[EpisodeRecord]]:
    """Train over the circuit set, one circuit per episode in list order."""
    if not circuits:
        raise ValueError("empty circuit set")
    root = np.random.SeedSequence(seed)
    net_seq, sample_seq, episodes_seq = root.spawn(3)
    input_dim = env.graph.num_qubits + 3 * env.max_gates
    agent = DdqnAgent(env.space, input_dim, schedule, np.random.default_rng(net_seq))
    sample_rng = np.random.default_rng(sample_seq)
    records = []
    for k, ep_seq in enumerate(episodes_seq.spawn(episodes)):
        eps = epsilon_schedule(k, schedule.epsilon_start, schedule.epsilon_decay_denominator)
        rec = run_episode(
            env, circuits[k % len(circuits)], agent, eps,
            np.random.default_rng(ep_seq), sample_rng, learn=True,
        )
        rec.episode = k
        records.append(rec)
    return agent, records


def evaluate_agent(
    env: RoutingEnv,
    circuits: list[CircuitDag],
    agent: DdqnAgent | None,
    eps: float,
    seed: int,
) -> list[EpisodeRecord]:
    """Frozen-policy rollout over a test set; one record per circuit."""
    root = np.random.SeedSequence(seed)
    records = []
    for k, ep_seq in enumerate(root.spawn(len(circuits))):
        rec = run_episode(env, circuits[k], agent, eps, np.random.default_rng(ep_seq))
        rec.episode = k
        records.append(rec)
    return records


# -- checkpoints -------------------------------------------------------------
# Single file: magic line, one JSON metadata line, then the raw little-endian
# float64 bytes of every array in a fixed order. Byte-identical for identical
# parameters.


def save_checkpoint(path: str | Path, agent: DdqnAgent, meta: dict) -> None:
    header = {
        "format_version": 1,
        "space": agent.space.kind,
        "alpha": agent.schedule.alpha,
        "input_dim": agent.input_dim,
        "hidden1": agent.main.hidden1,
        "hidden2": agent.main.hidden2,
        "num_heads": agent.space.num_heads,
        "shapes": {k: list(agent.main.params[k].shape) for k in _PARAM_ORDER},
        **meta,
    }
    blob = bytearray()
    for net in (agent.main, agent.target):
        for k in _PARAM_ORDER:
            blob += np.ascontiguousarray(net.params[k], dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(bytes(blob))


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Returns (metadata, main params, target params)."""
    raw = Path(path).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path} is not a checkpoint file")
    rest = raw[len(CHECKPOINT_MAGIC):]
    nl = rest.index(b"\n")
    header = json.loads(rest[:nl])
    blob = rest[nl + 1:]
    nets = []
    offset = 0
    for _ in range(2):
        params = {}
        for k in _PARAM_ORDER:
            shape = tuple(header["shapes"][k])
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
            params[k] = arr.copy()
            offset += count * 8
        nets.append(params)
    return header, nets[0], nets[1]


def restore_agent(header: dict, main_params: dict, target_params: dict, space,
                  schedule: TrainSchedule | None = None) -> DdqnAgent:
    if space.kind != header["space"] or space.num_heads != header["num_heads"]:
        raise ValueError("checkpoint layout does not match the action space")
    schedule = schedule or TrainSchedule(
        hidden1=header["hidden1"], hidden2=header["hidden2"], alpha=header["alpha"]
    )
    agent = DdqnAgent(space, header["input_dim"], schedule, rng=np.random.default_rng(0))
    for k in _PARAM_ORDER:
        agent.main.params[k] = main_params[k].copy()
        agent.target.params[k] = target_params[k].copy()
    return agent
