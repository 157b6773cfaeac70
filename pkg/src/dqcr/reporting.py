"""CSV outputs: training logs, moving averages, evaluation results, traces.

All writers use fixed number formatting and newline conventions so that
repeated runs with the same seed produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .learner import EpisodeRecord


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.10g}"


def write_csv(path: str | Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_training_csv(path: str | Path, records: list[EpisodeRecord]) -> None:
    write_csv(
        path,
        ["episode", "reward", "time_elapsed", "success", "epsilon", "mean_loss"],
        [(r.episode, r.reward, r.time_elapsed, r.success, r.epsilon, r.mean_loss) for r in records],
    )


def moving_average(values: list[float], window: int = 10) -> list[tuple[int, float, float]]:
    """(last_episode_index, mean, population std) per full trailing window."""
    out = []
    arr = np.asarray(values, dtype=np.float64)
    for end in range(window, len(arr) + 1):
        chunk = arr[end - window : end]
        out.append((end - 1, float(chunk.mean()), float(chunk.std())))
    return out


def write_moving_average_csv(path: str | Path, values: list[float], window: int = 10) -> None:
    write_csv(path, ["episode", "mean", "std"], moving_average(values, window))


def write_eval_csv(path: str | Path, records: list[EpisodeRecord]) -> None:
    write_csv(
        path,
        ["circuit_id", "time", "success"],
        [(r.episode, r.time_elapsed, r.success) for r in records],
    )


def summarize_times(times: list[int]) -> dict[str, float]:
    arr = np.asarray(times, dtype=np.float64)
    if arr.size == 0:
        return {"count": 0, "mean": 0.0, "median": 0.0, "q1": 0.0, "q3": 0.0, "min": 0.0, "max": 0.0}
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "q1": float(np.percentile(arr, 25)),
        "q3": float(np.percentile(arr, 75)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def write_summary_csv(path: str | Path, records: list[EpisodeRecord]) -> None:
    s = summarize_times([r.time_elapsed for r in records])
    successes = sum(1 for r in records if r.success)
    write_csv(
        path,
        ["count", "successes", "mean", "median", "q1", "q3", "min", "max"],
        [(s["count"], successes, s["mean"], s["median"], s["q1"], s["q3"], s["min"], s["max"])],
    )


def _format_args(kind: str, args: tuple) -> str:
    if kind == "stop":
        return ""
    if kind == "rout":
        return f"{args[0]}>{args[1]}"
    return f"{args[0]}-{args[1]}"


def write_trace_csv(path: str | Path, trace: list[tuple]) -> None:
    """Per-step trace: (t, StepResult) tuples from run_episode."""
    rows = [
        (t, res.kind, _format_args(res.kind, res.args), res.reward, res.gates_remaining, res.d_metric)
        for (t, res) in trace
    ]
    write_csv(path, ["t", "action_kind", "action_args", "reward", "gates_remaining", "d_G"], rows)
