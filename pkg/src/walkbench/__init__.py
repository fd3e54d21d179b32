"""Coined quantum-walk search on the N×N torus and the N-cycle."""

from .coherence import PQParams, coherence_closed_form, compare_coherence, constant_coherence_check
from .coins import CoinSpec, ConditionalCoin, apply_conditional_coin, build_coin_matrix, parse_coin
from .configurations import ConfigSpec, Label, classify, detect_period, generate, parse_config
from .engine import (
    SingleCoin,
    Trace,
    TwoCoin,
    WalkSpec,
    algorithm_a,
    algorithm_b,
    algorithm_c,
    cycle_walk,
    evolve,
    materialize_unitary,
    row_sum_pairs,
    run,
    step,
)
from .state import (
    MarkedSet,
    SpaceDescriptor,
    WalkState,
    flat_index,
    is_sign_flip_of,
    l1_coherence,
    make_uniform_state,
    marked_probability,
    norm,
)
from .topology import ShiftKind, apply_shift, parse_shift, shift_matrix

__version__ = "0.1.0"
