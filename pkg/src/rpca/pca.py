"""Programmable cellular automata: control signals select each cell's rule.

Two canonical selection tables are provided as data, one over rules
{51, 195, 153} and one over the reversible trio {204, 240, 170}. The module
also carries the legacy cycle cipher: states on an even-length orbit of the
global map are enciphered by walking half the orbit and deciphered by
completing it. That scheme is a reference construction for testing, not a
serious cipher.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import ca
from .ca import Boundary, Rule


class UnsupportedOrbitError(ValueError):
    """The state's orbit is not an even-length cycle of the global map."""


@dataclass(frozen=True)
class SelectionTable:
    """Mapping from a control-bit pair (C1, C2) to a rule number."""

    radius: int
    rules: Mapping[tuple[int, int], int]

    def __post_init__(self) -> None:
        missing = {(a, b) for a in (0, 1) for b in (0, 1)} - set(self.rules)
        if missing:
            raise ValueError(f"selection table is missing control pairs: {sorted(missing)}")

    def rule(self, c1: int, c2: int) -> Rule:
        return ca.make_rule(self.radius, self.rules[(c1, c2)])


# Printed rows of the two selection tables used throughout.
TABLE_51_195_153 = SelectionTable(
    radius=1, rules={(0, 0): 51, (0, 1): 51, (1, 0): 195, (1, 1): 153}
)
TABLE_204_240_170 = SelectionTable(
    radius=1, rules={(0, 0): 204, (0, 1): 204, (1, 0): 240, (1, 1): 170}
)


def select_rule(table: SelectionTable, c1: int, c2: int) -> int:
    """Rule number the table assigns to the control pair (c1, c2)."""
    return table.rules[(int(c1), int(c2))]


@dataclass(frozen=True)
class ControlProgram:
    """Per-cell control pairs, constant or varying per step.

    `signals` has shape (cells, 2) for a constant program or (steps, cells, 2)
    for one that changes every step.
    """

    signals: np.ndarray

    def __post_init__(self) -> None:
        sig = np.asarray(self.signals, dtype=np.uint8)
        if sig.ndim not in (2, 3) or sig.shape[-1] != 2:
            raise ValueError(f"signals must be (cells, 2) or (steps, cells, 2), got {sig.shape}")
        object.__setattr__(self, "signals", sig)

    @property
    def cells(self) -> int:
        return self.signals.shape[-2]

    def at(self, step_index: int) -> np.ndarray:
        if self.signals.ndim == 2:
            return self.signals
        return self.signals[step_index % self.signals.shape[0]]


def induced_rule_vector(
    controls: np.ndarray | ControlProgram, table: SelectionTable
) -> list[Rule]:
    """Rule vector obtained by looking up each cell's control pair."""
    sig = controls.at(0) if isinstance(controls, ControlProgram) else np.asarray(controls)
    if sig.ndim != 2 or sig.shape[1] != 2:
        raise ValueError(f"controls must have shape (cells, 2), got {sig.shape}")
    return [table.rule(int(c1), int(c2)) for c1, c2 in sig]


def pca_step(
    config: np.ndarray,
    controls: np.ndarray | ControlProgram,
    table: SelectionTable,
    boundary: Boundary,
) -> np.ndarray:
    """One step under the rule vector induced by the control signals."""
    config = np.asarray(config, dtype=np.uint8)
    sig = controls.at(0) if isinstance(controls, ControlProgram) else np.asarray(controls)
    if sig.shape[:1] != config.shape[:1]:
        raise ValueError(f"controls width {sig.shape[0]} != cell count {config.shape[0]}")
    return ca.step(config, induced_rule_vector(sig, table), boundary)


def pca_run(
    config: np.ndarray,
    program: ControlProgram,
    table: SelectionTable,
    boundary: Boundary,
    steps: int,
) -> np.ndarray:
    """Iterate a control program; step t uses the program's row t."""
    out = np.asarray(config, dtype=np.uint8)
    for t in range(steps):
        out = pca_step(out, program.at(t), table, boundary)
    return out


# --- legacy cycle cipher ---------------------------------------------------

def _orbit_length(state: np.ndarray, rules: Rule | Sequence[Rule], boundary: Boundary) -> int:
    """Length of the cycle through `state`; raises if the state is transient."""
    cells = int(np.asarray(state).shape[0])
    if cells > ca.EXHAUSTIVE_CELL_LIMIT:
        raise ValueError(
            f"orbit walks are limited to {ca.EXHAUSTIVE_CELL_LIMIT} cells "
            f"(exhaustive-scale check), got {cells}"
        )
    start = ca.state_to_int(state)
    seen = {start}
    current = np.asarray(state, dtype=np.uint8)
    for length in range(1, (1 << cells) + 1):
        current = ca.step(current, rules, boundary)
        code = ca.state_to_int(current)
        if code == start:
            return length
        if code in seen:
            break
        seen.add(code)
    raise UnsupportedOrbitError(
        f"state {ca.format_bits(state)} is not on a cycle of the global map"
    )


def cycle_encipher(
    plaintext_state: np.ndarray, rules: Rule | Sequence[Rule], boundary: Boundary
) -> np.ndarray:
    """Advance the state halfway around its orbit (orbit length must be even)."""
    p = _orbit_length(plaintext_state, rules, boundary)
    if p % 2 != 0:
        raise UnsupportedOrbitError(
            f"orbit length {p} is odd; the half-cycle cipher needs an even cycle"
        )
    return ca.iterate(plaintext_state, rules, boundary, p // 2)


def cycle_decipher(
    cipher_state: np.ndarray, rules: Rule | Sequence[Rule], boundary: Boundary
) -> np.ndarray:
    """Complete the orbit begun by cycle_encipher, restoring the original state."""
    p = _orbit_length(cipher_state, rules, boundary)
    if p % 2 != 0:
        raise UnsupportedOrbitError(
            f"orbit length {p} is odd; the half-cycle cipher needs an even cycle"
        )
    return ca.iterate(cipher_state, rules, boundary, p - p // 2)
