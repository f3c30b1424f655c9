"""Reversible programmable cellular automata toolkit.

A CA engine (first-order, second-order reversible, control-signal
programmable), an experimental 128-bit block cipher built on a reversible
second-order automaton, a bit-exact container format, and statistical
analysis helpers. The cipher is a research construction and is not suitable
for protecting real data.
"""
from .ca import (
    Boundary,
    CycleReport,
    Rule,
    apply_rule,
    complement_rule,
    cycle_structure,
    enumerate_reversible_elementary,
    is_reversible_global,
    iterate,
    make_rule,
    step,
)
from .cipher import (
    CipherParams,
    CipherRecord,
    SecretKey,
    decrypt_block,
    decrypt_stream,
    encrypt_block,
    encrypt_stream,
    parse_key,
)
from .second_order import SecondOrderState, so_iterate_backward, so_iterate_forward, so_step

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "CipherParams",
    "CipherRecord",
    "CycleReport",
    "Rule",
    "SecondOrderState",
    "SecretKey",
    "apply_rule",
    "complement_rule",
    "cycle_structure",
    "decrypt_block",
    "decrypt_stream",
    "encrypt_block",
    "encrypt_stream",
    "enumerate_reversible_elementary",
    "is_reversible_global",
    "iterate",
    "make_rule",
    "parse_key",
    "so_iterate_backward",
    "so_iterate_forward",
    "so_step",
    "step",
    "__version__",
]
