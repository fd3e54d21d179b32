"""
Coin operators and their marked/unmarked conditional application.

A coin is described symbolically by :class:`CoinSpec` and turned into a
matrix on demand. Conditional coins act position-by-position on the coin
register, never as a dense D×D operator.

Canonical text forms: ``grover4``, ``grover2``, ``fourier4``, ``paulix``,
``hadamard``, ``negid4``, ``negid2``, ``id4``, ``id2``, ``q(rho,theta,phi)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .state import MarkedSet, WalkState, tensor_shape

__all__ = [
    "CoinSpec",
    "ConditionalCoin",
    "build_coin_matrix",
    "apply_conditional_coin",
    "parse_coin",
    "format_coin",
]

_KINDS = ("grover", "fourier", "paulix", "hadamard", "q", "negid", "id")


@dataclass(frozen=True)
class CoinSpec:
    kind: str
    dim: int
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown coin kind {self.kind!r}")
        if self.dim not in (2, 4):
            raise ValueError(f"coin dimension must be 2 or 4 (got {self.dim})")
        if self.kind in ("paulix", "hadamard", "q") and self.dim != 2:
            raise ValueError(f"{self.kind} is a 2x2 coin")
        if self.kind == "q":
            rho, theta, phi = self.params
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"rho must lie in [0, 1] (got {rho})")
            if not 0.0 <= theta <= np.pi:
                raise ValueError(f"theta must lie in [0, pi] (got {theta})")
            if not 0.0 <= phi <= 2 * np.pi:
                raise ValueError(f"phi must lie in [0, 2pi] (got {phi})")

    @classmethod
    def grover(cls, d: int = 4) -> "CoinSpec":
        return cls("grover", d)

    @classmethod
    def fourier4(cls) -> "CoinSpec":
        return cls("fourier", 4)

    @classmethod
    def pauli_x(cls) -> "CoinSpec":
        return cls("paulix", 2)

    @classmethod
    def hadamard(cls) -> "CoinSpec":
        return cls("hadamard", 2)

    @classmethod
    def general_q(cls, rho: float, theta: float, phi: float) -> "CoinSpec":
        return cls("q", 2, (float(rho), float(theta), float(phi)))

    @classmethod
    def neg_identity(cls, d: int) -> "CoinSpec":
        return cls("negid", d)

    @classmethod
    def identity(cls, d: int) -> "CoinSpec":
        return cls("id", d)

    def matrix(self) -> NDArray[np.complex128]:
        return build_coin_matrix(self)

    def __str__(self) -> str:
        return format_coin(self)


def build_coin_matrix(spec: CoinSpec) -> NDArray[np.complex128]:
    """Return the d×d matrix of ``spec`` (a fresh, writable copy)."""
    return _coin_matrix(spec).copy()


@lru_cache(maxsize=64)
def _coin_matrix(spec: CoinSpec) -> NDArray[np.complex128]:
    d = spec.dim
    kind = spec.kind
    if kind == "grover":
        gamma = np.full(d, 1.0 / np.sqrt(d))
        m = 2.0 * np.outer(gamma, gamma) - np.eye(d)
    elif kind == "fourier":
        if d != 4:
            raise ValueError("fourier coin is only defined for d = 4")
        # entries omega^(jk)/2 with omega = i
        jk = np.outer(np.arange(4), np.arange(4)) % 4
        m = np.array([1, 1j, -1, -1j])[jk] / 2.0
    elif kind == "paulix":
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
    elif kind == "hadamard":
        m = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    elif kind == "q":
        rho, theta, phi = spec.params
        a, b = np.sqrt(rho), np.sqrt(1.0 - rho)
        m = np.array(
            [
                [a, b * np.exp(1j * theta)],
                [b * np.exp(1j * phi), -a * np.exp(1j * (theta + phi))],
            ]
        )
    elif kind == "negid":
        m = -np.eye(d)
    else:
        m = np.eye(d)
    m = np.asarray(m, dtype=np.complex128)
    m.flags.writeable = False
    return m


_Q_RE = re.compile(r"^q\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")
_SIMPLE_RE = re.compile(r"^(grover|fourier|negid|id|identity)(\d+)$")


def parse_coin(text: str) -> CoinSpec:
    """Parse the canonical text form of a coin."""
    s = text.strip().lower()
    if s == "paulix":
        return CoinSpec.pauli_x()
    if s == "hadamard":
        return CoinSpec.hadamard()
    m = _Q_RE.match(s)
    if m:
        try:
            rho, theta, phi = (float(g) for g in m.groups())
        except ValueError:
            raise ValueError(f"bad coin parameters in {text!r}") from None
        return CoinSpec.general_q(rho, theta, phi)
    m = _SIMPLE_RE.match(s)
    if m:
        kind = "id" if m.group(1) == "identity" else m.group(1)
        d = int(m.group(2))
        if kind == "fourier" and d != 4:
            raise ValueError("fourier coin is only defined for d = 4")
        return CoinSpec(kind, d)
    raise ValueError(f"unrecognised coin {text!r}")


def format_coin(spec: CoinSpec) -> str:
    if spec.kind in ("paulix", "hadamard"):
        return spec.kind
    if spec.kind == "q":
        return "q({:.17g},{:.17g},{:.17g})".format(*spec.params)
    return f"{spec.kind}{spec.dim}"


@dataclass(frozen=True)
class ConditionalCoin:
    """``unmarked`` on every position except ``marked_set``, where ``marked`` acts."""

    unmarked: CoinSpec
    marked: CoinSpec
    marked_set: MarkedSet

    def __post_init__(self) -> None:
        if self.unmarked.dim != self.marked.dim:
            raise ValueError(
                f"coin dimensions differ: {self.unmarked.dim} vs {self.marked.dim}"
            )


def _apply_coin(
    tensor: NDArray[np.complex128],
    unmarked: NDArray[np.complex128],
    marked: NDArray[np.complex128],
    mask: NDArray[np.bool_],
    slot: int,
) -> NDArray[np.complex128]:
    """Apply the conditional coin to a ``(*coin_dims, P)`` array along ``slot``."""
    out = np.moveaxis(np.tensordot(unmarked, tensor, axes=([1], [slot])), 0, slot)
    if mask.any() and not np.array_equal(unmarked, marked):
        sub = tensor[..., mask]
        out[..., mask] = np.moveaxis(np.tensordot(marked, sub, axes=([1], [slot])), 0, slot)
    return out


def apply_conditional_coin(
    state: WalkState, cc: ConditionalCoin, coin_slot: int = 0
) -> WalkState:
    space = state.space
    if not 0 <= coin_slot < len(space.coin_dims):
        raise ValueError(f"coin slot {coin_slot} out of range for {space}")
    if cc.unmarked.dim != space.coin_dims[coin_slot]:
        raise ValueError(
            f"coin dimension {cc.unmarked.dim} does not match register "
            f"dimension {space.coin_dims[coin_slot]}"
        )
    mask = cc.marked_set.mask(space)
    flat = state.amps.reshape(*space.coin_dims, space.positions)
    out = _apply_coin(flat, _coin_matrix(cc.unmarked), _coin_matrix(cc.marked), mask, coin_slot)
    return WalkState._wrap(space, out.reshape(tensor_shape(space)))
