"""
Experiment files (JSON) and trace CSVs.

An experiment file is a JSON object. Recognised keys::

    topology   "grid" | "cycle"                       (required)
    n          grid side or cycle length              (required)
    algorithm  "a" | "b" | "c" | "custom"             (required)
    config     configuration text, e.g. "diag:0"      (required)
    steps      number of steps T                      (required for run)
    coins      custom only: {"unmarked": .., "marked": ..} or
               {"odd": {...}, "even": {...}} for a two-coin grid walk
    shift      custom single-coin walks only
    snapshots  "none" | "all" | "every:k"
    seed       reserved; evolution is deterministic
    output     CSV path

Unknown keys are rejected.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, TextIO, Union

import numpy as np

from .coins import ConditionalCoin, parse_coin
from .configurations import ConfigSpec, generate, parse_config
from .engine import (
    SingleCoin,
    SnapshotPolicy,
    Trace,
    TwoCoin,
    WalkSpec,
    algorithm_a,
    algorithm_b,
    algorithm_c,
)
from .state import CYCLE, GRID, SpaceDescriptor
from .topology import parse_shift

__all__ = [
    "ExperimentError",
    "Experiment",
    "KEYS",
    "load_experiment",
    "parse_experiment",
    "trace_to_csv",
    "write_trace_csv",
    "read_trace_csv",
    "CSV_HEADER",
]

KEYS = (
    "topology",
    "n",
    "algorithm",
    "coins",
    "shift",
    "config",
    "steps",
    "snapshots",
    "seed",
    "output",
)
CSV_HEADER = ("step", "prob_marked", "l1_coherence", "norm_drift")


class ExperimentError(ValueError):
    """Invalid experiment file; ``key`` names the offending entry."""

    def __init__(self, key: Optional[str], message: str):
        self.key = key
        super().__init__(f"key {key!r}: {message}" if key else message)


@dataclass(frozen=True)
class Experiment:
    raw: dict
    spec: WalkSpec
    config: ConfigSpec
    steps: Optional[int]
    snapshots: Optional[SnapshotPolicy]
    output: Optional[str]


def _int(raw: dict, key: str, minimum: int) -> int:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ExperimentError(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ExperimentError(key, f"must be >= {minimum}")
    return value


def _conditional(key: str, entry: Any, marked) -> ConditionalCoin:
    if not isinstance(entry, dict) or set(entry) != {"unmarked", "marked"}:
        raise ExperimentError(key, "expected an object with 'unmarked' and 'marked'")
    try:
        return ConditionalCoin(parse_coin(entry["unmarked"]), parse_coin(entry["marked"]), marked)
    except (ValueError, AttributeError) as exc:
        raise ExperimentError(key, str(exc)) from None


def parse_experiment(raw: Any) -> Experiment:
    if not isinstance(raw, dict):
        raise ExperimentError(None, "experiment file must hold a JSON object")
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ExperimentError(unknown[0], "unknown key")
    for key in ("topology", "n", "algorithm", "config"):
        if key not in raw:
            raise ExperimentError(key, "missing required key")

    topology = raw["topology"]
    if topology not in (GRID, CYCLE):
        raise ExperimentError("topology", f"expected 'grid' or 'cycle', got {topology!r}")
    n = _int(raw, "n", 2)
    algorithm = str(raw["algorithm"]).lower()
    if algorithm not in ("a", "b", "c", "custom"):
        raise ExperimentError("algorithm", f"expected a, b, c or custom, got {algorithm!r}")
    steps = _int(raw, "steps", 0) if "steps" in raw else None
    if "seed" in raw and raw["seed"] is not None and not isinstance(raw["seed"], int):
        raise ExperimentError("seed", "expected an integer or null")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ExperimentError("output", "expected a path string")
    snapshots = None
    if "snapshots" in raw:
        try:
            snapshots = SnapshotPolicy.parse(raw["snapshots"])
        except ValueError as exc:
            raise ExperimentError("snapshots", str(exc)) from None

    try:
        config = parse_config(str(raw["config"]), n, topology)
        marked = generate(config)
    except ValueError as exc:
        raise ExperimentError("config", str(exc)) from None

    if algorithm != "custom":
        for key in ("coins", "shift"):
            if key in raw:
                raise ExperimentError(key, f"not allowed with preset algorithm {algorithm!r}")
        if topology != GRID:
            raise ExperimentError("algorithm", "presets a, b, c run on the grid; use custom")
        build = {"a": algorithm_a, "b": algorithm_b, "c": algorithm_c}[algorithm]
        spec = build(n, marked)
    else:
        spec = _custom_spec(raw, topology, n, marked)
    return Experiment(raw, spec, config, steps, snapshots, output)


def _custom_spec(raw: dict, topology: str, n: int, marked) -> WalkSpec:
    coins = raw.get("coins")
    if not isinstance(coins, dict):
        raise ExperimentError("coins", "custom algorithm needs a coins object")
    if set(coins) == {"odd", "even"}:
        if topology != GRID:
            raise ExperimentError("coins", "two-coin walks run on the grid")
        if "shift" in raw:
            raise ExperimentError("shift", "two-coin walks use the implied register shifts")
        odd = _conditional("coins", coins["odd"], marked)
        even = _conditional("coins", coins["even"], marked)
        space = SpaceDescriptor.grid(n, coins=2)
        schedule = TwoCoin(odd, even)
        shift = None
    else:
        schedule = SingleCoin(_conditional("coins", coins, marked))
        space = SpaceDescriptor.grid(n) if topology == GRID else SpaceDescriptor.cycle(n)
        shift = None
        if "shift" in raw:
            try:
                shift = parse_shift(str(raw["shift"]))
            except ValueError as exc:
                raise ExperimentError("shift", str(exc)) from None
    try:
        return WalkSpec(space, schedule, marked, shift)
    except ValueError as exc:
        key = "shift" if "shift" in str(exc) else "coins"
        raise ExperimentError(key, str(exc)) from None


def load_experiment(path: Union[str, Path]) -> Experiment:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ExperimentError(None, f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExperimentError(None, f"invalid JSON: {exc}") from None
    return parse_experiment(raw)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def trace_to_csv(trace: Trace, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t in range(trace.steps + 1):
        writer.writerow(
            (t, _fmt(trace.prob[t]), _fmt(trace.coherence[t]), _fmt(trace.norm_drift[t]))
        )


def write_trace_csv(trace: Trace, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    trace_to_csv(trace, buf)
    path.write_bytes(buf.getvalue().encode("utf-8"))
    return path


def read_trace_csv(path: Union[str, Path]) -> Trace:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    body = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    steps = [int(row[0]) for row in rows[1:]]
    if steps != list(range(len(steps))):
        raise ValueError(f"{path}: steps are not 0..T")
    return Trace(len(steps) - 1, body[:, 0], body[:, 1], body[:, 2], dim=0)
