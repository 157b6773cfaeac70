"""Random circuit sets: uniform CNOTs over ordered distinct qubit pairs.

A set is reproducible from (seed, index): each circuit draws from its own
generator seeded by the pair, so sets can be regenerated or extended
without disturbing earlier members.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dag import CircuitDag, build_dag, load_circuit, save_circuit


@dataclass
class CircuitSetSpec:
    num_circuits: int = 250
    num_virtual_qubits: int = 18
    num_gates: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.num_gates < 0 or self.num_circuits < 0:
            raise ValueError("counts must be non-negative")
        if self.num_virtual_qubits < 2 and self.num_gates > 0:
            raise ValueError("need at least 2 virtual qubits to place gates")


def generate_gates(num_gates: int, num_virtual_qubits: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    gates = []
    for _ in range(num_gates):
        c = int(rng.integers(num_virtual_qubits))
        t = int(rng.integers(num_virtual_qubits - 1))
        if t >= c:
            t += 1
        gates.append((c, t))
    return gates


def generate_set(spec: CircuitSetSpec) -> list[CircuitDag]:
    out = []
    for idx in range(spec.num_circuits):
        rng = np.random.default_rng([spec.seed, idx])
        gates = generate_gates(spec.num_gates, spec.num_virtual_qubits, rng)
        out.append(build_dag(gates, spec.num_virtual_qubits))
    return out


def write_set(directory: str | Path, spec: CircuitSetSpec, force: bool = False) -> Path:
    """Emit circuit files plus a manifest listing per-circuit seeds."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if manifest_path.exists() and not force:
        raise FileExistsError(f"{manifest_path} exists; pass force to overwrite")
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for idx in range(spec.num_circuits):
        rng = np.random.default_rng([spec.seed, idx])
        gates = generate_gates(spec.num_gates, spec.num_virtual_qubits, rng)
        name = f"circuit_{idx:04d}.json"
        save_circuit(directory / name, gates, spec.num_virtual_qubits)
        entries.append({"file": name, "seed": [spec.seed, idx]})
    manifest = {
        "num_circuits": spec.num_circuits,
        "num_virtual_qubits": spec.num_virtual_qubits,
        "num_gates": spec.num_gates,
        "seed": spec.seed,
        "circuits": entries,
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path


def load_set(directory: str | Path) -> tuple[dict, list[CircuitDag]]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    dags = [load_circuit(directory / entry["file"]) for entry in manifest["circuits"]]
    return manifest, dags
