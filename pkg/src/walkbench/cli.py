"""
``walkbench`` command line.

    walkbench run <file> [--output PATH]
    walkbench classify <file> [--tol TOL]
    walkbench coherence --n N --rho R --theta T --phi P --steps S [--output PATH]
    walkbench sweep <file> --vary key=a,b,c [--vary ...] [--out-dir DIR] [--classify] [--jobs J]
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .coherence import PQParams, compare_coherence
from .configurations import classify
from .engine import SnapshotPolicy, run
from .io import ExperimentError, KEYS, load_experiment, parse_experiment, write_trace_csv

EXIT_OK = 0
EXIT_HEALTH = 1
EXIT_USAGE = 2

NORM_TOLERANCE = 1e-8
SNAPSHOT_LIMIT = 10**6
DEFAULT_SWEEP_CAP = 256


class CommandError(Exception):
    pass


def _healthy(trace) -> bool:
    return trace.max_norm_drift < NORM_TOLERANCE


def _summary(trace) -> str:
    k = int(np.argmax(trace.prob))
    return (
        f"max_prob={trace.prob[k]:.12g} at step {k} "
        f"(steps={trace.steps}, initial_prob={trace.prob[0]:.12g}, "
        f"max_norm_drift={trace.max_norm_drift:.3g})"
    )


def _check_snapshot_budget(exp, policy: SnapshotPolicy) -> None:
    if policy.every is not None and exp.spec.space.dim > SNAPSHOT_LIMIT:
        raise CommandError(
            f"snapshots refused: D = {exp.spec.space.dim} exceeds {SNAPSHOT_LIMIT}"
        )


def _default_output(file: str) -> Path:
    return Path(file).with_suffix(".csv")


def cmd_run(args) -> int:
    exp = load_experiment(args.file)
    if exp.steps is None:
        raise ExperimentError("steps", "missing required key")
    policy = exp.snapshots or SnapshotPolicy(None)
    _check_snapshot_budget(exp, policy)
    trace = run(exp.spec, exp.steps, policy)
    out = Path(args.output or exp.output or _default_output(args.file))
    write_trace_csv(trace, out)
    print(_summary(trace))
    if not _healthy(trace):
        print(f"health check failed: norm drift {trace.max_norm_drift:.3g}", file=sys.stderr)
        return EXIT_HEALTH
    return EXIT_OK


def _classify_experiment(exp, tol: float):
    steps = exp.steps if exp.steps is not None else 3 * exp.spec.space.n
    policy = SnapshotPolicy(1)
    _check_snapshot_budget(exp, policy)
    trace = run(exp.spec, steps, policy)
    return trace, classify(trace, tol)


def cmd_classify(args) -> int:
    exp = load_experiment(args.file)
    trace, result = _classify_experiment(exp, args.tol)
    print(f"label: {result.label}")
    print(f"horizon: {result.horizon}")
    print(f"max_prob_deviation: {result.max_prob_deviation:.3g}")
    print(f"sign_flip_holds_through: {result.sign_flip_holds_through}")
    if result.label == "Exceptional":
        period = result.period if result.period is not None else "not within horizon"
        anti = result.antiperiod if result.antiperiod is not None else "not within horizon"
        print(f"period: {period}")
        print(f"antiperiod: {anti}")
    return EXIT_OK if _healthy(trace) else EXIT_HEALTH


def cmd_coherence(args) -> int:
    if args.steps >= args.n:
        raise CommandError("formula valid only for t < N (need --steps < --n)")
    try:
        params = PQParams(args.rho, args.theta, args.phi)
        rows = compare_coherence(args.n, params, args.steps)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    lines = ["step,simulated,closed_form,abs_error"]
    lines += [
        f"{r.step},{r.simulated:.12g},{r.closed_form:.12g},{r.abs_error:.12g}" for r in rows
    ]
    text = "\n".join(lines) + "\n"
    worst = max(r.abs_error for r in rows)
    if args.output:
        Path(args.output).write_bytes(text.encode("utf-8"))
        print(f"max_abs_error={worst:.3g}")
    else:
        sys.stdout.write(text)
        print(f"max_abs_error={worst:.3g}", file=sys.stderr)
    return EXIT_OK


_RANGE_RE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")
_INT_KEYS = {"n", "steps", "seed"}


def parse_vary(text: str) -> tuple[str, list[str]]:
    """``key=a,b,c`` or ``key=lo..hi`` (inclusive integer range)."""
    key, sep, values = text.partition("=")
    key = key.strip()
    if not sep or not key or not values:
        raise CommandError(f"bad --vary {text!r}; expected key=a,b,c")
    m = _RANGE_RE.match(values.strip())
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise CommandError(f"empty range in --vary {text!r}")
        return key, [str(v) for v in range(lo, hi + 1)]
    return key, [v.strip() for v in values.split(",") if v.strip()]


def _substitute(obj, key: str, value: str):
    if isinstance(obj, str):
        return obj.replace("{" + key + "}", value)
    if isinstance(obj, dict):
        return {k: _substitute(v, key, value) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_substitute(v, key, value) for v in obj]
    return obj


def sweep_points(template: dict, varies: Sequence[tuple[str, list[str]]]) -> list[tuple[dict, dict]]:
    """Cartesian product of the varied values applied to ``template``.

    A varied key that is an experiment key replaces that entry; any other
    name fills ``{name}`` placeholders inside string values.
    """
    keys = [k for k, _ in varies]
    points = []
    for combo in itertools.product(*(vals for _, vals in varies)):
        raw = copy.deepcopy(template)
        for key, value in zip(keys, combo):
            if key in KEYS:
                raw[key] = int(value) if key in _INT_KEYS else value
            else:
                raw = _substitute(raw, key, value)
        points.append((dict(zip(keys, combo)), raw))
    return points


def _point_name(params: dict) -> str:
    parts = [f"{k}-{re.sub(r'[^A-Za-z0-9.-]+', '_', v)}" for k, v in params.items()]
    return "__".join(parts) or "point"


def _run_point(job):
    params, raw, path, do_classify, tol = job
    exp = parse_experiment(raw)
    if exp.steps is None:
        raise ExperimentError("steps", "missing required key")
    policy = SnapshotPolicy(1) if do_classify else (exp.snapshots or SnapshotPolicy(None))
    if policy.every is not None and exp.spec.space.dim > SNAPSHOT_LIMIT:
        raise CommandError(f"snapshots refused: D = {exp.spec.space.dim} exceeds {SNAPSHOT_LIMIT}")
    trace = run(exp.spec, exp.steps, policy)
    write_trace_csv(trace, path)
    k = int(np.argmax(trace.prob))
    entry = {
        "params": params,
        "path": path.name,
        "max_prob": float(trace.prob[k]),
        "argmax_step": k,
        "max_norm_drift": trace.max_norm_drift,
    }
    if do_classify:
        result = classify(trace, tol)
        entry["label"] = str(result.label)
        entry["period"] = result.period
    return entry


def cmd_sweep(args) -> int:
    try:
        template = json.loads(Path(args.file).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ExperimentError(None, f"cannot load template {args.file}: {exc}") from None
    if not isinstance(template, dict):
        raise ExperimentError(None, "experiment file must hold a JSON object")
    template.pop("output", None)
    varies = [parse_vary(v) for v in args.vary]
    points = sweep_points(template, varies)
    cap = int(os.environ.get("WALKBENCH_MAX_SWEEP", DEFAULT_SWEEP_CAP))
    if len(points) > cap:
        raise CommandError(f"sweep refused: {len(points)} runs exceed the cap of {cap}")
    # validate everything before running anything
    for _, raw in points:
        parse_experiment(raw)
    out_dir = Path(args.out_dir or Path(args.file).with_suffix(""))
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (params, raw, out_dir / f"{_point_name(params)}.csv", args.classify, args.tol)
        for params, raw in points
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(_run_point, jobs))
    else:
        entries = [_run_point(job) for job in jobs]
    index = out_dir / "index.json"
    index.write_bytes((json.dumps(entries, indent=2) + "\n").encode("utf-8"))
    for e in entries:
        label = f" label={e['label']}" if "label" in e else ""
        print(f"{e['path']}: max_prob={e['max_prob']:.12g} at step {e['argmax_step']}{label}")
    print(f"{len(entries)} runs, index written to {index}")
    healthy = all(e["max_norm_drift"] < NORM_TOLERANCE for e in entries)
    return EXIT_OK if healthy else EXIT_HEALTH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walkbench", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment file and write a trace CSV")
    p.add_argument("file")
    p.add_argument("--output", help="CSV path (overrides the file's output key)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("classify", help="classify the marked configuration of an experiment")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("coherence", help="simulated vs closed-form coherence on the cycle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("sweep", help="run a template over a grid of parameter values")
    p.add_argument("file")
    p.add_argument("--vary", action="append", required=True, metavar="KEY=A,B,C")
    p.add_argument("--out-dir")
    p.add_argument("--classify", action="store_true", help="also classify every point")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExperimentError as exc:
        print(f"walkbench: invalid experiment: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CommandError as exc:
        print(f"walkbench: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
