"""Gate-precedence DAG of two-qubit gates with layer tracking and a frontier.

A circuit is an ordered list of CNOTs. Precedence edges are per-qubit
last-writer edges: gate v depends on the latest earlier gate that touches
one of its qubits. Layers are longest-path depth (layer 1 = frontier).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Gate:
    """One CNOT acting on virtual qubits ``control`` and ``target``."""

    id: int
    control: int
    target: int
    layer: int

    @property
    def support(self) -> tuple[int, int]:
        return (self.control, self.target)


class CircuitDag:
    """Mutable precedence DAG; gates are deleted from the frontier as they execute.

    Gate ids are assigned in input order and never reused, so the encoding
    order of the remaining gates is stable across an episode.
    """

    def __init__(self, gate_list: list[tuple[int, int]], num_virtual_qubits: int):
        if num_virtual_qubits < 0:
            raise ValueError("num_virtual_qubits must be non-negative")
        for control, target in gate_list:
            if control == target:
                raise ValueError(f"gate with control == target ({control})")
            for q in (control, target):
                if not 0 <= q < num_virtual_qubits:
                    raise ValueError(f"qubit index {q} out of range [0, {num_virtual_qubits})")

        self.num_virtual_qubits = num_virtual_qubits
        self.initial_num_gates = len(gate_list)
        self._support = {i: (c, t) for i, (c, t) in enumerate(gate_list)}
        self._preds: dict[int, set[int]] = {i: set() for i in self._support}
        self._succs: dict[int, set[int]] = {i: set() for i in self._support}

        # last-writer edges: one incoming edge per qubit line
        last_on_qubit: dict[int, int] = {}
        for gid, (control, target) in enumerate(gate_list):
            for q in (control, target):
                if q in last_on_qubit:
                    u = last_on_qubit[q]
                    self._preds[gid].add(u)
                    self._succs[u].add(gid)
                last_on_qubit[q] = gid

        self._layers: dict[int, int] = {}
        self._recompute_layers()

    def _recompute_layers(self) -> None:
        # edges always point from lower to higher gate id, so ascending id
        # order is a topological order
        self._layers = {}
        for gid in sorted(self._support):
            preds = self._preds[gid]
            self._layers[gid] = 1 + max((self._layers[p] for p in preds), default=0)

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._support)

    @property
    def is_empty(self) -> bool:
        return not self._support

    def gate(self, gid: int) -> Gate:
        c, t = self._support[gid]
        return Gate(gid, c, t, self._layers[gid])

    def gates(self) -> list[Gate]:
        """All remaining gates, ascending id."""
        return [self.gate(g) for g in sorted(self._support)]

    def frontier(self) -> list[Gate]:
        """Gates with no unexecuted predecessor, ascending id."""
        return [self.gate(g) for g in sorted(self._support) if not self._preds[g]]

    def predecessors(self, gid: int) -> set[int]:
        return set(self._preds[gid])

    def successors(self, gid: int) -> set[int]:
        return set(self._succs[gid])

    # -- mutation --------------------------------------------------------

    def delete(self, gid: int) -> None:
        """Remove a frontier gate and its incident edges; relayer the rest."""
        if gid not in self._support:
            raise ValueError(f"gate {gid} not in DAG")
        if self._preds[gid]:
            raise ValueError(f"gate {gid} is not in the frontier")
        for succ in self._succs[gid]:
            self._preds[succ].discard(gid)
        del self._support[gid], self._preds[gid], self._succs[gid]
        self._recompute_layers()

    def copy(self) -> CircuitDag:
        clone = object.__new__(CircuitDag)
        clone.num_virtual_qubits = self.num_virtual_qubits
        clone.initial_num_gates = self.initial_num_gates
        clone._support = dict(self._support)
        clone._preds = {g: set(p) for g, p in self._preds.items()}
        clone._succs = {g: set(s) for g, s in self._succs.items()}
        clone._layers = dict(self._layers)
        return clone


def build_dag(gate_list: list[tuple[int, int]], num_virtual_qubits: int) -> CircuitDag:
    gate_list = [(int(c), int(t)) for c, t in gate_list]
    return CircuitDag(gate_list, num_virtual_qubits)


# -- circuit files ---------------------------------------------------------
# {"num_virtual_qubits": N, "gates": [[control, target], ...]}; list order
# defines precedence.


def save_circuit(path: str | Path, gate_list: list[tuple[int, int]], num_virtual_qubits: int) -> None:
    payload = {
        "num_virtual_qubits": int(num_virtual_qubits),
        "gates": [[int(c), int(t)] for c, t in gate_list],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_circuit(path: str | Path) -> CircuitDag:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    gates = [(int(c), int(t)) for c, t in payload["gates"]]
    return build_dag(gates, int(payload["num_virtual_qubits"]))
