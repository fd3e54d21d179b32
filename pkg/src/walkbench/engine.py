"""
Per-step unitaries, multi-step runs and traces.

A single-coin walk applies ``U = S · C`` every step. A two-coin walk counts
coin flips: odd flips apply the ``odd`` conditional coin to register 1 and
shift along register 1, even flips do the same with ``even`` on register 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray

from .coins import CoinSpec, ConditionalCoin, _apply_coin, _coin_matrix
from .state import (
    CYCLE,
    GRID,
    MarkedSet,
    SpaceDescriptor,
    WalkState,
    l1_coherence,
    make_uniform_state,
    marked_probability,
    norm,
    tensor_shape,
)
from .topology import (
    CYCLE_FLIPFLOP,
    GRID_FLIPFLOP,
    ShiftKind,
    _shift_tensor,
    shift_matrix,
)

__all__ = [
    "SingleCoin",
    "TwoCoin",
    "WalkSpec",
    "Trace",
    "SnapshotPolicy",
    "step",
    "run",
    "evolve",
    "materialize_unitary",
    "row_sum_pairs",
    "algorithm_a",
    "algorithm_b",
    "algorithm_c",
    "cycle_walk",
    "UNITARY_LIMIT",
]

UNITARY_LIMIT = 4096


@dataclass(frozen=True)
class SingleCoin:
    coin: ConditionalCoin


@dataclass(frozen=True)
class TwoCoin:
    odd: ConditionalCoin
    even: ConditionalCoin


Schedule = Union[SingleCoin, TwoCoin]


@dataclass(frozen=True)
class WalkSpec:
    """A complete experiment: space, coin schedule, shift and marked set."""

    space: SpaceDescriptor
    schedule: Schedule
    marked: MarkedSet
    shift: Optional[ShiftKind] = None

    def __post_init__(self) -> None:
        ncoins = len(self.space.coin_dims)
        self.marked.validate(self.space)
        if isinstance(self.schedule, SingleCoin):
            if ncoins != 1:
                raise ValueError("single-coin schedule needs a single coin register")
            if self.shift is None:
                default = GRID_FLIPFLOP if self.space.topology == GRID else CYCLE_FLIPFLOP
                object.__setattr__(self, "shift", default)
            self.shift.check(self.space)
            coins = [self.schedule.coin]
        elif isinstance(self.schedule, TwoCoin):
            if ncoins != 2 or self.space.topology != GRID:
                raise ValueError("two-coin schedule needs a grid with two coin registers")
            if self.shift is not None:
                raise ValueError("two-coin walks use the implied per-register shifts")
            coins = [self.schedule.odd, self.schedule.even]
        else:
            raise TypeError(f"unknown schedule {self.schedule!r}")
        for slot, cc in enumerate(coins):
            if cc.unmarked.dim != self.space.coin_dims[slot]:
                raise ValueError(
                    f"coin dimension {cc.unmarked.dim} does not match {self.space}"
                )
            cc.marked_set.validate(self.space)

    def operator_for(self, t: int) -> tuple[ConditionalCoin, int, ShiftKind]:
        """(conditional coin, coin register, shift) used at step ordinal ``t``."""
        if isinstance(self.schedule, SingleCoin):
            return self.schedule.coin, 0, self.shift
        if t % 2 == 1:
            return self.schedule.odd, 0, ShiftKind.two_coin(0)
        return self.schedule.even, 1, ShiftKind.two_coin(1)


class _Stepper:
    """Precomputed matrices and masks for fast repeated steps."""

    def __init__(self, spec: WalkSpec):
        self.spec = spec
        self.space = spec.space
        self._flat_shape = (*spec.space.coin_dims, spec.space.positions)
        self._tensor_shape = tensor_shape(spec.space)
        self._ops = {}
        for parity in ((1,) if isinstance(spec.schedule, SingleCoin) else (1, 2)):
            cc, slot, shift = spec.operator_for(parity)
            self._ops[parity] = (
                _coin_matrix(cc.unmarked),
                _coin_matrix(cc.marked),
                cc.marked_set.mask(spec.space),
                slot,
                shift,
            )

    def __call__(self, amps: NDArray[np.complex128], t: int) -> NDArray[np.complex128]:
        key = 1 if len(self._ops) == 1 or t % 2 == 1 else 2
        c0, c1, mask, slot, shift = self._ops[key]
        out = _apply_coin(amps.reshape(self._flat_shape), c0, c1, mask, slot)
        return _shift_tensor(out.reshape(self._tensor_shape), shift).reshape(-1)


def step(state: WalkState, spec: WalkSpec, t: int) -> WalkState:
    """Apply the operator of step ordinal ``t`` (starting at 1)."""
    if state.space != spec.space:
        raise ValueError(f"state lives in {state.space}, spec in {spec.space}")
    if t < 1:
        raise ValueError("step ordinals start at 1")
    return WalkState._wrap(spec.space, _Stepper(spec)(state.amps, t))


def evolve(state: WalkState, spec: WalkSpec, steps: int, start: int = 1) -> WalkState:
    """Apply ``steps`` consecutive steps with ordinals ``start, start+1, ...``."""
    stepper = _Stepper(spec)
    amps = state.amps
    for t in range(start, start + steps):
        amps = stepper(amps, t)
    return WalkState._wrap(spec.space, amps)


class SnapshotPolicy:
    """Which states a run keeps: ``none``, ``all`` or ``every:k``."""

    def __init__(self, every: Optional[int]):
        if every is not None and every < 1:
            raise ValueError("snapshot interval must be >= 1")
        self.every = every

    @classmethod
    def parse(cls, value) -> "SnapshotPolicy":
        if isinstance(value, SnapshotPolicy):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)
        s = str(value).strip().lower()
        if s == "none":
            return cls(None)
        if s == "all":
            return cls(1)
        if s.startswith("every:"):
            try:
                return cls(int(s.split(":", 1)[1]))
            except ValueError:
                pass
        raise ValueError(f"bad snapshot policy {value!r}")

    @classmethod
    def default_for(cls, space: SpaceDescriptor) -> "SnapshotPolicy":
        return cls(1) if space.n <= 16 else cls(None)

    def keeps(self, t: int) -> bool:
        return self.every is not None and t % self.every == 0

    def __str__(self) -> str:
        if self.every is None:
            return "none"
        return "all" if self.every == 1 else f"every:{self.every}"


@dataclass
class Trace:
    steps: int
    prob: NDArray[np.float64]
    coherence: NDArray[np.float64]
    norm_drift: NDArray[np.float64]
    dim: int
    snapshots: Optional[list[WalkState]] = None
    snapshot_steps: list[int] = field(default_factory=list)

    @property
    def has_all_snapshots(self) -> bool:
        return self.snapshots is not None and self.snapshot_steps == list(range(self.steps + 1))

    def snapshot_at(self, t: int) -> WalkState:
        try:
            return self.snapshots[self.snapshot_steps.index(t)]
        except (TypeError, ValueError):
            raise KeyError(f"no snapshot recorded for step {t}") from None

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(self.norm_drift))


def run(spec: WalkSpec, T: int, snapshot_policy=None, initial: Optional[WalkState] = None) -> Trace:
    """Evolve the uniform state for ``T`` steps, recording t = 0..T."""
    if T < 0:
        raise ValueError("T must be >= 0")
    policy = (
        SnapshotPolicy.default_for(spec.space)
        if snapshot_policy is None
        else SnapshotPolicy.parse(snapshot_policy)
    )
    state = make_uniform_state(spec.space) if initial is None else initial
    if state.space != spec.space:
        raise ValueError("initial state does not live in the spec's space")
    stepper = _Stepper(spec)
    prob = np.empty(T + 1)
    coh = np.empty(T + 1)
    drift = np.empty(T + 1)
    snaps: Optional[list[WalkState]] = [] if policy.every is not None else None
    snap_steps: list[int] = []
    amps = state.amps
    for t in range(T + 1):
        if t > 0:
            amps = stepper(amps, t)
            state = WalkState._wrap(spec.space, amps)
        prob[t] = marked_probability(state, spec.marked)
        coh[t] = l1_coherence(state)
        drift[t] = abs(norm(state) - 1.0)
        if policy.keeps(t):
            snaps.append(state)
            snap_steps.append(t)
    return Trace(T, prob, coh, drift, spec.space.dim, snaps, snap_steps)


def _dense_coin(space: SpaceDescriptor, cc: ConditionalCoin, slot: int) -> NDArray[np.complex128]:
    proj = np.diag(cc.marked_set.mask(space).astype(float))
    rest = np.eye(space.positions) - proj
    c0, c1 = _coin_matrix(cc.unmarked), _coin_matrix(cc.marked)
    if len(space.coin_dims) == 2:
        eye = np.eye(space.coin_dims[1 - slot])
        c0, c1 = (np.kron(c0, eye), np.kron(c1, eye)) if slot == 0 else (np.kron(eye, c0), np.kron(eye, c1))
    return np.kron(c0, rest) + np.kron(c1, proj)


def materialize_unitary(spec: WalkSpec, parity: str = "single") -> NDArray[np.complex128]:
    """Dense step operator built from Kronecker products and the shift matrix.

    ``parity`` is ``"single"`` for one-coin walks and ``"odd"``/``"even"``
    for two-coin walks.
    """
    d = spec.space.dim
    if d > UNITARY_LIMIT:
        raise ValueError(f"dense materialization refused (D = {d} > {UNITARY_LIMIT})")
    single = isinstance(spec.schedule, SingleCoin)
    if single != (parity == "single") or parity not in ("single", "odd", "even"):
        raise ValueError(f"parity {parity!r} does not fit this schedule")
    cc, slot, shift = spec.operator_for(2 if parity == "even" else 1)
    return shift_matrix(spec.space, shift) @ _dense_coin(spec.space, cc, slot)


def row_sum_pairs(spec: WalkSpec, t: int) -> NDArray[np.float64]:
    """Pair sums ``|U^t(0,x)|^2 + |U^t(1,(N-x) mod N)|^2`` for x = 0..N-1.

    ``U^t(c, x)`` is the row sum of ``U^t`` at basis state ``|c, x>``, which
    is ``sqrt(2N)`` times the amplitude of the evolved uniform state.
    """
    space = spec.space
    if space.topology != CYCLE or not isinstance(spec.schedule, SingleCoin):
        raise ValueError("row_sum_pairs needs a single-coin cycle walk")
    if spec.marked.vertices != frozenset({0}):
        raise ValueError("row_sum_pairs expects the marked set {0}")
    n = space.n
    state = evolve(make_uniform_state(space), spec, t)
    rows = state.tensor() * np.sqrt(2 * n)
    x = np.arange(n)
    return np.abs(rows[0, x]) ** 2 + np.abs(rows[1, (n - x) % n]) ** 2


def _grid_single(n: int, marked: MarkedSet, marked_coin: CoinSpec) -> WalkSpec:
    space = SpaceDescriptor.grid(n)
    cc = ConditionalCoin(CoinSpec.grover(4), marked_coin, marked)
    return WalkSpec(space, SingleCoin(cc), marked, GRID_FLIPFLOP)


def algorithm_a(n: int, marked: MarkedSet) -> WalkSpec:
    """(G, -I) walk on the N×N torus."""
    return _grid_single(n, marked, CoinSpec.neg_identity(4))


def algorithm_b(n: int, marked: MarkedSet) -> WalkSpec:
    """(G, F) walk on the N×N torus."""
    return _grid_single(n, marked, CoinSpec.fourier4())


def algorithm_c(
    n: int,
    marked: MarkedSet,
    odd_marked: Optional[CoinSpec] = None,
    even_marked: Optional[CoinSpec] = None,
) -> WalkSpec:
    """Two-coin walk: (G, -I) on register 1 at odd flips, (G, F) on register 2 at even flips."""
    space = SpaceDescriptor.grid(n, coins=2)
    g = CoinSpec.grover(4)
    odd = ConditionalCoin(g, odd_marked or CoinSpec.neg_identity(4), marked)
    even = ConditionalCoin(g, even_marked or CoinSpec.fourier4(), marked)
    return WalkSpec(space, TwoCoin(odd, even), marked)


def cycle_walk(
    n: int,
    marked: MarkedSet,
    marked_coin: CoinSpec,
    unmarked_coin: Optional[CoinSpec] = None,
    shift: ShiftKind = CYCLE_FLIPFLOP,
) -> WalkSpec:
    """(C0, C1) walk on the N-cycle; C0 defaults to Pauli X."""
    space = SpaceDescriptor.cycle(n)
    cc = ConditionalCoin(unmarked_coin or CoinSpec.pauli_x(), marked_coin, marked)
    return WalkSpec(space, SingleCoin(cc), marked, shift)
