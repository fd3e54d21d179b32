"""
Closed-form l1 coherence for the (X, Q) cycle walk and checks against simulation.

The closed form below shares no code with the simulator; the comparison
helpers evolve the walk separately and line the two up.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .coins import CoinSpec
from .engine import Trace, cycle_walk, run
from .state import MarkedSet

__all__ = [
    "PQParams",
    "coherence_closed_form",
    "constant_coherence_check",
    "CoherenceRow",
    "compare_coherence",
]


@dataclass(frozen=True)
class PQParams:
    rho: float
    theta: float
    phi: float

    @property
    def p(self) -> complex:
        return math.sqrt(1 - self.rho) * cmath.exp(1j * self.phi) - math.sqrt(
            self.rho
        ) * cmath.exp(1j * (self.theta + self.phi))

    @property
    def q(self) -> complex:
        return math.sqrt(self.rho) + math.sqrt(1 - self.rho) * cmath.exp(1j * self.theta)

    @classmethod
    def hadamard(cls) -> "PQParams":
        return cls(0.5, 0.0, 0.0)


def coherence_closed_form(n: int, t: int, params: PQParams) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    if t >= n:
        raise ValueError("formula valid only for t < N")
    l1 = (2 * n - 2 * t) + t * (abs(params.p) + abs(params.q))
    return l1 * l1 / (2 * n) - 1


def constant_coherence_check(trace: Trace, dim: int, tol: float = 1e-8) -> bool:
    """True iff the trace sits at the maximal coherence ``D - 1`` at every step."""
    return bool(np.all(np.abs(trace.coherence - (dim - 1)) <= tol))


@dataclass(frozen=True)
class CoherenceRow:
    step: int
    simulated: float
    closed_form: float

    @property
    def abs_error(self) -> float:
        return abs(self.simulated - self.closed_form)


def compare_coherence(
    n: int, params: PQParams, steps: int, tol: float = 1e-9
) -> list[CoherenceRow]:
    """Simulated vs closed-form coherence for t = 0..steps (steps < N).

    Also asserts the intermediate facts behind the closed form: the scaled
    amplitudes at ``|0,0>`` and ``|1,0>`` stay 1 and the scaled l1 norm is
    ``(2N - 2t) + t(|p| + |q|)``.
    """
    if steps >= n:
        raise ValueError("formula valid only for t < N")
    coin = CoinSpec.general_q(params.rho, params.theta, params.phi)
    spec = cycle_walk(n, MarkedSet.of([0]), coin)
    trace = run(spec, steps, "all")
    scale = math.sqrt(2 * n)
    pq = abs(params.p) + abs(params.q)
    rows = []
    for t in range(steps + 1):
        scaled = trace.snapshots[t].tensor() * scale
        assert abs(scaled[0, 0] - 1) <= tol and abs(scaled[1, 0] - 1) <= tol, (
            f"row sums at |0,0>, |1,0> drifted from 1 at t={t}"
        )
        l1 = float(np.sum(np.abs(scaled)))
        assert abs(l1 - ((2 * n - 2 * t) + t * pq)) <= tol * n, f"l1 norm mismatch at t={t}"
        rows.append(CoherenceRow(t, float(trace.coherence[t]), coherence_closed_form(n, t, params)))
    return rows
