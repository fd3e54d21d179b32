"""
State vectors over coin ⊗ position spaces.

Basis layout is coin-major: for a single coin the flat index of
``|c, p>`` is ``c * P + p``; for two coins it is ``(c1 * d2 + c2) * P + p``.
Grid vertex ``(i, j)`` has position ``p = i * N + j``. Grid coin directions
are ordered ``[up, down, left, right] = [0, 1, 2, 3]``.

The helpers :func:`flat_index` and :func:`tensor_shape` are the only two
places that encode this layout; everything else goes through them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "GRID",
    "CYCLE",
    "UP",
    "DOWN",
    "LEFT",
    "RIGHT",
    "SpaceDescriptor",
    "WalkState",
    "MarkedSet",
    "flat_index",
    "tensor_shape",
    "grid_position",
    "make_uniform_state",
    "marked_probability",
    "l1_coherence",
    "is_sign_flip_of",
    "norm",
]

GRID = "grid"
CYCLE = "cycle"

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3


@dataclass(frozen=True)
class SpaceDescriptor:
    """Topology plus the ordered list of coin register dimensions."""

    topology: str
    n: int
    coin_dims: tuple[int, ...] = (4,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coin_dims", tuple(int(d) for d in self.coin_dims))
        if self.topology not in (GRID, CYCLE):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n < 2:
            raise ValueError(f"N must be >= 2 (got {self.n})")
        if len(self.coin_dims) not in (1, 2):
            raise ValueError("one or two coin registers are supported")
        required = 4 if self.topology == GRID else 2
        if any(d != required for d in self.coin_dims):
            raise ValueError(
                f"{self.topology} requires coin dimension {required}, got {self.coin_dims}"
            )

    @classmethod
    def grid(cls, n: int, coins: int = 1) -> "SpaceDescriptor":
        return cls(GRID, n, (4,) * coins)

    @classmethod
    def cycle(cls, n: int) -> "SpaceDescriptor":
        return cls(CYCLE, n, (2,))

    @property
    def positions(self) -> int:
        return self.n * self.n if self.topology == GRID else self.n

    @property
    def coin_volume(self) -> int:
        return int(np.prod(self.coin_dims))

    @property
    def dim(self) -> int:
        return self.coin_volume * self.positions

    def __str__(self) -> str:
        name = "Grid" if self.topology == GRID else "Cycle"
        suffix = "" if len(self.coin_dims) == 1 else f", coins={len(self.coin_dims)}"
        return f"{name}({self.n}{suffix})"


def grid_position(n: int, i: int, j: int) -> int:
    """Position index of grid vertex (i, j), wrapped onto the torus."""
    return (i % n) * n + (j % n)


def flat_index(space: SpaceDescriptor, coins: Sequence[int], pos: int) -> int:
    """Flat basis index of ``|coins..., pos>`` in the coin-major layout."""
    if len(coins) != len(space.coin_dims):
        raise IndexError("index out of bounds")
    idx = 0
    for c, d in zip(coins, space.coin_dims):
        if not 0 <= c < d:
            raise IndexError("index out of bounds")
        idx = idx * d + c
    if not 0 <= pos < space.positions:
        raise IndexError("index out of bounds")
    return idx * space.positions + pos


def tensor_shape(space: SpaceDescriptor) -> tuple[int, ...]:
    """C-order reshape of the flat vector that agrees with :func:`flat_index`.

    Axes are the coin registers followed by the position axes: ``(d, N, N)``
    for a grid ``[c, i, j]``, ``(d1, d2, N, N)`` for a two-coin grid and
    ``(2, N)`` for a cycle.
    """
    if space.topology == GRID:
        return (*space.coin_dims, space.n, space.n)
    return (*space.coin_dims, space.n)


@dataclass(frozen=True, eq=False)
class WalkState:
    """Amplitude vector over ``space``; the array is read-only once built."""

    space: SpaceDescriptor
    amps: NDArray[np.complex128]

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=np.complex128, copy=True).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, expected {self.space.dim}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def _wrap(cls, space: SpaceDescriptor, amps: NDArray[np.complex128]) -> "WalkState":
        # Skips the defensive copy; callers hand over a freshly computed array.
        obj = cls.__new__(cls)
        amps = amps.reshape(-1)
        amps.flags.writeable = False
        object.__setattr__(obj, "space", space)
        object.__setattr__(obj, "amps", amps)
        return obj

    def tensor(self) -> NDArray[np.complex128]:
        return self.amps.reshape(tensor_shape(self.space))

    def amplitude(self, coins: Sequence[int], pos: int) -> complex:
        return complex(self.amps[flat_index(self.space, coins, pos)])

    def __neg__(self) -> "WalkState":
        return WalkState._wrap(self.space, -self.amps)

    def __repr__(self) -> str:
        return f"WalkState({self.space}, norm={norm(self):.12g})"


@dataclass(frozen=True)
class MarkedSet:
    """Distinct marked position indices."""

    vertices: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", frozenset(int(v) for v in self.vertices))

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "MarkedSet":
        vs = list(vertices)
        if len(set(vs)) != len(vs):
            raise ValueError("marked vertices must be distinct")
        return cls(frozenset(vs))

    @classmethod
    def grid(cls, n: int, cells: Iterable[tuple[int, int]]) -> "MarkedSet":
        return cls.of(grid_position(n, i, j) for i, j in cells)

    def validate(self, space: SpaceDescriptor) -> None:
        bad = [v for v in self.vertices if not 0 <= v < space.positions]
        if bad:
            raise ValueError(f"marked vertices out of range for {space}: {sorted(bad)[:5]}")

    def mask(self, space: SpaceDescriptor) -> NDArray[np.bool_]:
        """Boolean mask over the flat position axis."""
        self.validate(space)
        m = np.zeros(space.positions, dtype=bool)
        if self.vertices:
            m[sorted(self.vertices)] = True
        return m

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(sorted(self.vertices))


def make_uniform_state(space: SpaceDescriptor) -> WalkState:
    d = space.dim
    return WalkState._wrap(space, np.full(d, 1.0 / np.sqrt(d), dtype=np.complex128))


def _by_position(state: WalkState) -> NDArray[np.complex128]:
    return state.amps.reshape(state.space.coin_volume, state.space.positions)


def marked_probability(state: WalkState, marked: MarkedSet) -> float:
    """Probability of observing the walker on a marked vertex (any coin value)."""
    mask = marked.mask(state.space)
    sub = _by_position(state)[:, mask]
    return float(np.sum(sub.real**2 + sub.imag**2))


def l1_coherence(state: WalkState) -> float:
    """l1-norm coherence of the pure state, ``(sum |a|)^2 - sum |a|^2``.

    Never forms the density matrix.
    """
    mags = np.abs(state.amps)
    s1 = float(np.sum(mags))
    return s1 * s1 - float(np.sum(mags * mags))


def norm(state: WalkState) -> float:
    return float(np.linalg.norm(state.amps))


def is_sign_flip_of(a: WalkState, b: WalkState, tol: float = 1e-9) -> bool:
    """True when every amplitude of ``a`` equals ``+b_i`` or ``-b_i`` within ``tol``.

    The sign may differ per component. Complex phases other than ±1 do not
    count as a sign flip.
    """
    if a.space != b.space:
        raise ValueError(f"space mismatch: {a.space} vs {b.space}")
    same = np.abs(a.amps - b.amps) <= tol
    flipped = np.abs(a.amps + b.amps) <= tol
    return bool(np.all(same | flipped))
