"""
Marked-vertex arrangements on the torus and empirical classification of runs.

Text forms: ``diag:a``, ``antidiag:a``, ``ddiag:a,b``, ``dantidiag:a,b`` and
``explicit:(i,j);(i,j);...`` (grid) or ``explicit:(x);(y)`` / ``explicit:x;y``
(cycle).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import Trace
from .state import CYCLE, GRID, MarkedSet, is_sign_flip_of

__all__ = [
    "ConfigSpec",
    "Label",
    "Classification",
    "generate",
    "parse_config",
    "format_config",
    "classify",
    "detect_period",
]

_KINDS = ("diag", "antidiag", "ddiag", "dantidiag", "explicit")


@dataclass(frozen=True)
class ConfigSpec:
    kind: str
    n: int
    offsets: tuple[int, ...] = ()
    vertices: tuple = ()
    topology: str = GRID

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown configuration kind {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"N must be >= 2 (got {self.n})")
        if self.kind != "explicit" and self.topology != GRID:
            raise ValueError(f"{self.kind} configurations live on the grid")
        expected = {"diag": 1, "antidiag": 1, "ddiag": 2, "dantidiag": 2, "explicit": 0}
        if len(self.offsets) != expected[self.kind]:
            raise ValueError(f"{self.kind} takes {expected[self.kind]} offset(s)")

    @classmethod
    def diagonal(cls, n: int, alpha: int) -> "ConfigSpec":
        return cls("diag", n, (alpha,))

    @classmethod
    def anti_diagonal(cls, n: int, alpha: int) -> "ConfigSpec":
        return cls("antidiag", n, (alpha,))

    @classmethod
    def double_diagonal(cls, n: int, alpha: int, beta: int) -> "ConfigSpec":
        return cls("ddiag", n, (alpha, beta))

    @classmethod
    def double_anti_diagonal(cls, n: int, alpha: int, beta: int) -> "ConfigSpec":
        return cls("dantidiag", n, (alpha, beta))

    @classmethod
    def explicit(cls, n: int, vertices, topology: str = GRID) -> "ConfigSpec":
        return cls("explicit", n, (), tuple(vertices), topology)


def _line(n: int, offset: int, anti: bool) -> list[tuple[int, int]]:
    if anti:
        return [(i, (offset - i) % n) for i in range(n)]
    return [(i, (i + offset) % n) for i in range(n)]


def generate(config: ConfigSpec) -> MarkedSet:
    n = config.n
    if config.kind == "explicit":
        if config.topology == CYCLE:
            vs = [int(v) for v in config.vertices]
            bad = [v for v in vs if not 0 <= v < n]
        else:
            vs = [(int(i), int(j)) for i, j in config.vertices]
            bad = [v for v in vs if not (0 <= v[0] < n and 0 <= v[1] < n)]
        if bad:
            raise ValueError(f"explicit vertices out of range: {bad[:5]}")
        if not vs:
            raise ValueError("explicit configuration is empty")
        return MarkedSet.of(vs) if config.topology == CYCLE else MarkedSet.grid(n, vs)
    anti = config.kind in ("antidiag", "dantidiag")
    if len(config.offsets) == 2:
        a, b = config.offsets
        if (a - b) % n == 0:
            raise ValueError("degenerate double diagonal")
        cells = _line(n, a, anti) + _line(n, b, anti)
    else:
        cells = _line(n, config.offsets[0], anti)
    return MarkedSet.grid(n, cells)


_PAIR_RE = re.compile(r"\(([^()]*)\)")


def parse_config(text: str, n: int, topology: str = GRID) -> ConfigSpec:
    s = text.strip().lower()
    kind, sep, body = s.partition(":")
    if not sep:
        raise ValueError(f"configuration {text!r} needs the form kind:args")
    if kind == "explicit":
        groups = _PAIR_RE.findall(body)
        items = groups if groups else [g for g in body.split(";") if g.strip()]
        try:
            vertices = [tuple(int(x) for x in g.split(",")) for g in items]
        except ValueError:
            raise ValueError(f"bad explicit vertex list {body!r}") from None
        if topology == CYCLE:
            if any(len(v) != 1 for v in vertices):
                raise ValueError("cycle vertices are single integers")
            return ConfigSpec.explicit(n, [v[0] for v in vertices], CYCLE)
        if any(len(v) != 2 for v in vertices):
            raise ValueError("grid vertices are (i,j) pairs")
        return ConfigSpec.explicit(n, vertices, GRID)
    if kind not in _KINDS:
        raise ValueError(f"unknown configuration kind {kind!r}")
    try:
        offsets = tuple(int(x) for x in body.split(","))
    except ValueError:
        raise ValueError(f"bad offsets in {text!r}") from None
    return ConfigSpec(kind, n, offsets, (), topology)


def format_config(config: ConfigSpec) -> str:
    if config.kind == "explicit":
        if config.topology == CYCLE:
            return "explicit:" + ";".join(f"({v})" for v in config.vertices)
        return "explicit:" + ";".join(f"({i},{j})" for i, j in config.vertices)
    return f"{config.kind}:" + ",".join(str(o) for o in config.offsets)


class Label(str, enum.Enum):
    EXCEPTIONAL = "Exceptional"
    GENERALIZED_EXCEPTIONAL = "GeneralizedExceptional"
    NEITHER = "Neither"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Classification:
    """Outcome of a finite-horizon check; never a proof for all t."""

    label: Label
    horizon: int
    max_prob_deviation: float
    sign_flip_holds_through: int
    period: Optional[int] = None
    antiperiod: Optional[int] = None


def detect_period(trace: Trace, tol: float = 1e-9) -> tuple[Optional[int], Optional[int]]:
    """Smallest ``tau > 0`` with ``state(tau) = state(0)`` and with ``= -state(0)``.

    Either entry is ``None`` when no return happens within the horizon.
    """
    if not trace.has_all_snapshots:
        raise ValueError("period detection needs snapshots at every step")
    first = trace.snapshots[0].amps
    period = antiperiod = None
    for t in range(1, trace.steps + 1):
        amps = trace.snapshots[t].amps
        if period is None and np.max(np.abs(amps - first)) <= tol:
            period = t
        if antiperiod is None and np.max(np.abs(amps + first)) <= tol:
            antiperiod = t
        if period is not None and antiperiod is not None:
            break
    return period, antiperiod


def classify(trace: Trace, tol: float = 1e-9) -> Classification:
    if not trace.has_all_snapshots:
        raise ValueError("classification needs snapshots at every step (snapshots=all)")
    first = trace.snapshots[0]
    holds_through = 0
    for t in range(1, trace.steps + 1):
        if not is_sign_flip_of(trace.snapshots[t], first, tol):
            break
        holds_through = t
    deviation = float(np.max(np.abs(trace.prob - trace.prob[0])))
    if holds_through == trace.steps:
        label = Label.EXCEPTIONAL
    elif deviation <= tol:
        label = Label.GENERALIZED_EXCEPTIONAL
    else:
        label = Label.NEITHER
    period = antiperiod = None
    if label is Label.EXCEPTIONAL:
        period, antiperiod = detect_period(trace, tol)
    return Classification(label, trace.steps, deviation, holds_through, period, antiperiod)
