"""Second-order cellular automata: reversible by construction.

The update of a cell reads its current neighborhood plus its own state one
step further back. A cell whose previous state was 1 applies the given rule;
a cell whose previous state was 0 applies the complement rule. Expanded, the
new value is rule(neighborhood) XNOR previous, which makes every rule (not
just the six reversible elementary ones) invertible: running the same rule on
the swapped configuration pair walks the trajectory backwards.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .ca import Boundary, Rule, neighborhood_index


class SecondOrderState(NamedTuple):
    """Ordered pair of configurations (q_{t-1}, q_t); shapes (..., n)."""

    prev: np.ndarray
    curr: np.ndarray


def _checked(state: SecondOrderState) -> SecondOrderState:
    prev = np.asarray(state.prev, dtype=np.uint8)
    curr = np.asarray(state.curr, dtype=np.uint8)
    if prev.shape != curr.shape:
        raise ValueError(f"prev/curr shapes differ: {prev.shape} vs {curr.shape}")
    return SecondOrderState(prev, curr)


def _step_pair(prev: np.ndarray, curr: np.ndarray, rule: Rule, boundary: Boundary):
    idx = neighborhood_index(curr, rule.radius, boundary)
    new = rule.table[idx]  # fresh array, safe to update in place
    np.bitwise_xor(new, prev, out=new)
    np.bitwise_xor(new, 1, out=new)  # rule output XNOR previous state
    return curr, new


def so_step(state: SecondOrderState, rule: Rule, boundary: Boundary) -> SecondOrderState:
    """One second-order update; supports batches along leading axes."""
    prev, curr = _checked(state)
    return SecondOrderState(*_step_pair(prev, curr, rule, boundary))


def so_iterate_forward(
    state: SecondOrderState, rule: Rule, boundary: Boundary, steps: int
) -> SecondOrderState:
    """Apply so_step `steps` times (steps >= 1)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    prev, curr = _checked(state)
    for _ in range(steps):
        prev, curr = _step_pair(prev, curr, rule, boundary)
    return SecondOrderState(prev, curr)


def so_iterate_backward(
    state: SecondOrderState, rule: Rule, boundary: Boundary, steps: int
) -> SecondOrderState:
    """Undo `steps` forward updates: forward-iterate the swapped pair, swap back."""
    prev, curr = _checked(state)
    back = so_iterate_forward(SecondOrderState(curr, prev), rule, boundary, steps)
    return SecondOrderState(back.curr, back.prev)
