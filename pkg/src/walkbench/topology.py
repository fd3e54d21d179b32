"""
Shift operators on the N×N torus and the N-cycle.

Grid flip-flop shift (all coordinates mod N)::

    |up, i, j>    -> |down, i, j-1>
    |down, i, j>  -> |up, i, j+1>
    |left, i, j>  -> |right, i-1, j>
    |right, i, j> -> |left, i+1, j>

Cycle moving shift keeps the coin (|0,x> -> |0,x-1>, |1,x> -> |1,x+1>);
cycle flip-flop flips it (|0,x> -> |1,x-1>, |1,x> -> |0,x+1>).
The two-coin grid shifts apply the grid rule to one coin register and leave
the other untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .state import (
    CYCLE,
    DOWN,
    GRID,
    LEFT,
    RIGHT,
    UP,
    SpaceDescriptor,
    WalkState,
    flat_index,
    grid_position,
    tensor_shape,
)

__all__ = [
    "ShiftKind",
    "GRID_FLIPFLOP",
    "CYCLE_MOVING",
    "CYCLE_FLIPFLOP",
    "apply_shift",
    "shift_matrix",
    "parse_shift",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 8192


@dataclass(frozen=True)
class ShiftKind:
    kind: str
    slot: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("grid-flipflop", "cycle-moving", "cycle-flipflop", "two-coin-grid"):
            raise ValueError(f"unknown shift {self.kind!r}")
        if self.kind == "two-coin-grid" and self.slot not in (0, 1):
            raise ValueError("two-coin shift slot must be 0 or 1")

    @classmethod
    def two_coin(cls, slot: int) -> "ShiftKind":
        return cls("two-coin-grid", slot)

    def check(self, space: SpaceDescriptor) -> None:
        ncoins = len(space.coin_dims)
        ok = {
            "grid-flipflop": space.topology == GRID and ncoins == 1,
            "cycle-moving": space.topology == CYCLE and ncoins == 1,
            "cycle-flipflop": space.topology == CYCLE and ncoins == 1,
            "two-coin-grid": space.topology == GRID and ncoins == 2,
        }[self.kind]
        if not ok:
            raise ValueError(f"shift {self} is incompatible with {space}")

    def __str__(self) -> str:
        if self.kind == "two-coin-grid":
            return f"two-coin-grid:{self.slot + 1}"
        return self.kind


GRID_FLIPFLOP = ShiftKind("grid-flipflop")
CYCLE_MOVING = ShiftKind("cycle-moving")
CYCLE_FLIPFLOP = ShiftKind("cycle-flipflop")


def parse_shift(text: str) -> ShiftKind:
    s = text.strip().lower()
    if s.startswith("two-coin-grid:"):
        tail = s.split(":", 1)[1]
        if tail not in ("1", "2"):
            raise ValueError(f"two-coin shift register must be 1 or 2 (got {tail!r})")
        return ShiftKind.two_coin(int(tail) - 1)
    return ShiftKind(s)


# (source coin, destination coin, position axis, roll amount) on a [c, i, j] array
_GRID_MOVES = (
    (UP, DOWN, -1, -1),
    (DOWN, UP, -1, +1),
    (LEFT, RIGHT, -2, -1),
    (RIGHT, LEFT, -2, +1),
)


def _shift_grid(t: NDArray[np.complex128], slot: int) -> NDArray[np.complex128]:
    # t has the active coin register on axis 0 and the two position axes last
    src = np.moveaxis(t, slot, 0)
    out = np.empty_like(src)
    for c_from, c_to, axis, amount in _GRID_MOVES:
        out[c_to] = np.roll(src[c_from], amount, axis=axis)
    return np.moveaxis(out, 0, slot)


def _shift_cycle(t: NDArray[np.complex128], flip: bool) -> NDArray[np.complex128]:
    out = np.empty_like(t)
    if flip:
        out[1] = np.roll(t[0], -1, axis=-1)
        out[0] = np.roll(t[1], 1, axis=-1)
    else:
        out[0] = np.roll(t[0], -1, axis=-1)
        out[1] = np.roll(t[1], 1, axis=-1)
    return out


def _shift_tensor(t: NDArray[np.complex128], kind: ShiftKind) -> NDArray[np.complex128]:
    if kind.kind == "grid-flipflop":
        return _shift_grid(t, 0)
    if kind.kind == "two-coin-grid":
        return _shift_grid(t, kind.slot)
    return _shift_cycle(t, kind.kind == "cycle-flipflop")


def apply_shift(state: WalkState, kind: ShiftKind) -> WalkState:
    kind.check(state.space)
    out = _shift_tensor(state.amps.reshape(tensor_shape(state.space)), kind)
    return WalkState._wrap(state.space, out)


def _destination(space: SpaceDescriptor, kind: ShiftKind, coins: tuple[int, ...], pos: int):
    """Image of one basis state, written out case by case."""
    n = space.n
    if space.topology == CYCLE:
        (c,) = coins
        step = -1 if c == 0 else 1
        new_c = 1 - c if kind.kind == "cycle-flipflop" else c
        return (new_c,), (pos + step) % n
    slot = kind.slot if kind.kind == "two-coin-grid" else 0
    i, j = divmod(pos, n)
    c = coins[slot]
    if c == UP:
        new_c, i, j = DOWN, i, j - 1
    elif c == DOWN:
        new_c, i, j = UP, i, j + 1
    elif c == LEFT:
        new_c, i, j = RIGHT, i - 1, j
    else:
        new_c, i, j = LEFT, i + 1, j
    new_coins = list(coins)
    new_coins[slot] = new_c
    return tuple(new_coins), grid_position(n, i, j)


def shift_matrix(space: SpaceDescriptor, kind: ShiftKind) -> NDArray[np.float64]:
    """Dense 0/1 permutation matrix of the shift, for small oracle checks."""
    kind.check(space)
    d = space.dim
    if d > DENSE_LIMIT:
        raise ValueError(f"dense materialization refused (D = {d} > {DENSE_LIMIT})")
    m = np.zeros((d, d))
    for coins in np.ndindex(*space.coin_dims):
        for pos in range(space.positions):
            new_coins, new_pos = _destination(space, kind, coins, pos)
            m[flat_index(space, new_coins, new_pos), flat_index(space, coins, pos)] = 1.0
    return m
