"""Experimental 128-bit block cipher driven by reversible cellular automata.

NOT FOR PRODUCTION. This is a research construction: no cryptanalysis backs
it, and the implementation makes no attempt at constant-time operation.

A 256-bit key splits into three rule segments. The two 64-bit segments seed
small second-order automata (one per round, re-seeded with a round constant)
whose four most recent configurations become the material for four invertible
round transforms: per-byte rotate+XOR substitution, material-controlled row
rotations, an XOR network plus rotation on columns, and key whitening. After
the rounds, a 128-cell second-order automaton keyed by the remaining 128 bits
runs a fixed number of steps from (random-initial-data, state); the
next-to-last configuration is the ciphertext and the last one, XOR-masked
with the 128-bit key segment, travels alongside it. Decryption runs the same
automaton backwards from the transmitted pair, discards the recovered random
row, and undoes the rounds. Each block therefore costs twice its size on the
wire, and encryption is randomized through the injected rid values.

All operations here are pure given an explicit rid; batch variants process
a whole stream of blocks as one numpy matrix.
"""
from __future__ import annotations

import hashlib
import secrets
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import ca
from .ca import Boundary, Rule
from .second_order import SecondOrderState, so_iterate_backward, so_iterate_forward

BLOCK_BYTES = 16
BLOCK_BITS = 128
KEY_BYTES = 32
CA_RADIUS = 3
MATERIAL_HISTORY = 4  # configurations kept per round: q_n .. q_{n-3}

MIN_ROUNDS, MAX_ROUNDS = 1, 64
MIN_CAF_STEPS, MAX_CAF_STEPS = 2, 1024

DEFAULT_ROUNDS = 10
DEFAULT_CAF_STEPS = 32


class CipherError(Exception):
    """Base class for block-cipher errors."""


class KeyFormatError(CipherError):
    pass


class ParameterMismatchError(CipherError):
    pass


class PaddingError(CipherError):
    pass


class RecordFormatError(CipherError):
    pass


# --- key handling ----------------------------------------------------------

@dataclass(frozen=True)
class SecretKey:
    """256-bit key: 64-bit CAL and CAR rule segments, 128-bit CAF segment."""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != KEY_BYTES:
            raise KeyFormatError(f"key must be {KEY_BYTES} bytes, got {len(self.raw)}")

    @property
    def cal_segment(self) -> bytes:
        return self.raw[0:8]

    @property
    def car_segment(self) -> bytes:
        return self.raw[8:16]

    @property
    def caf_segment(self) -> bytes:
        return self.raw[16:32]


def parse_key(raw: bytes) -> SecretKey:
    """Validate and split 32 raw key bytes into the three rule segments."""
    return SecretKey(bytes(raw))


@dataclass(frozen=True)
class CipherParams:
    """Round count and CA step count; echoed into every record."""

    rounds: int = DEFAULT_ROUNDS
    caf_steps: int = DEFAULT_CAF_STEPS

    def __post_init__(self) -> None:
        if not MIN_ROUNDS <= self.rounds <= MAX_ROUNDS:
            raise ValueError(f"rounds must be in {MIN_ROUNDS}..{MAX_ROUNDS}, got {self.rounds}")
        if not MIN_CAF_STEPS <= self.caf_steps <= MAX_CAF_STEPS:
            raise ValueError(
                f"caf_steps must be in {MIN_CAF_STEPS}..{MAX_CAF_STEPS}, got {self.caf_steps}"
            )


@dataclass(frozen=True)
class RoundMaterial:
    """Four 128-bit values, each a CAL configuration joined to a CAR one."""

    m_sub: bytes
    m_row: bytes
    m_mix: bytes
    m_key: bytes


@dataclass(frozen=True)
class FinalData:
    """The automaton's last configuration, transmitted beside the ciphertext."""

    value: bytes
    masked: bool = False


@dataclass(frozen=True)
class CipherRecord:
    """Per-block output: ciphertext, masked final data, parameter echo."""

    ciphertext: bytes
    encrypted_final_data: bytes
    rounds: int
    caf_steps: int

    def payload(self) -> bytes:
        """Wire layout: 16 ciphertext bytes then 16 masked final-data bytes."""
        return self.ciphertext + self.encrypted_final_data


def _check_block(value: bytes, what: str) -> bytes:
    if len(value) != BLOCK_BYTES:
        raise ValueError(f"{what} must be {BLOCK_BYTES} bytes, got {len(value)}")
    return value


def bits_from_bytes(data: bytes) -> np.ndarray:
    """Bytes to a cell row; bit 0 of the row is the MSB of byte 0."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bytes_from_bits(bits: np.ndarray) -> bytes:
    return np.packbits(bits).tobytes()


# --- rule expansion and round material --------------------------------------

def expand_rule_segment(segment: bytes) -> Rule:
    """64 key bits written into table entries 0-63 and repeated into 64-127."""
    if len(segment) != 8:
        raise ValueError(f"rule segment must be 8 bytes, got {len(segment)}")
    bits = bits_from_bytes(segment)
    return ca.rule_from_table(CA_RADIUS, np.concatenate([bits, bits]))


@lru_cache(maxsize=256)
def _caf_rule(caf_segment: bytes) -> Rule:
    # the CAF segment is already 128 bits: one table entry per bit
    return ca.rule_from_table(CA_RADIUS, bits_from_bytes(caf_segment))


def round_constant(round_index: int) -> bytes:
    """64-bit seed for a round's material automata: bytes all (i+1) mod 256."""
    if round_index < 0:
        raise ValueError("round_index must be >= 0")
    return bytes([(round_index + 1) % 256]) * 8


def _segment_history(segment: bytes, rounds: int) -> np.ndarray:
    """Last four configurations of the segment's automaton, per round.

    Returns shape (rounds, 4, 64); axis 1 is ordered newest first. Each round
    runs the same 64-cell second-order automaton from (round constant,
    segment bits) for four steps, so material depends on the key and round
    index only, never on the data being encrypted.
    """
    rule = expand_rule_segment(segment)
    seg_bits = bits_from_bytes(segment)
    prev = np.stack([bits_from_bytes(round_constant(i)) for i in range(rounds)])
    curr = np.repeat(seg_bits[None, :], rounds, axis=0)
    state = SecondOrderState(prev, curr)
    history = np.empty((rounds, MATERIAL_HISTORY, 64), dtype=np.uint8)
    for t in range(MATERIAL_HISTORY):
        state = so_iterate_forward(state, rule, Boundary.CYCLIC, 1)
        history[:, MATERIAL_HISTORY - 1 - t, :] = state.curr
    return history


@lru_cache(maxsize=256)
def _round_materials(raw_key: bytes, rounds: int) -> tuple[RoundMaterial, ...]:
    key = SecretKey(raw_key)
    left = _segment_history(key.cal_segment, rounds)
    right = _segment_history(key.car_segment, rounds)
    joined = np.concatenate([left, right], axis=2)  # (rounds, 4, 128)
    materials = []
    for i in range(rounds):
        m = [bytes_from_bits(joined[i, k]) for k in range(MATERIAL_HISTORY)]
        materials.append(RoundMaterial(m_sub=m[0], m_row=m[1], m_mix=m[2], m_key=m[3]))
    return tuple(materials)


def derive_round_material(key: SecretKey, round_index: int) -> RoundMaterial:
    """Material for one round; a pure function of (key, round_index)."""
    if round_index < 0:
        raise ValueError("round_index must be >= 0")
    return _round_materials(key.raw, round_index + 1)[round_index]


# --- the four round transforms ----------------------------------------------
#
# Internal versions operate on uint8 arrays shaped (..., 16) with material
# either a single 16-byte row or one row per batch entry.

def _parse_direction(direction: str) -> bool:
    if direction == "forward":
        return False
    if direction == "inverse":
        return True
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def _byte_sub(states: np.ndarray, material: np.ndarray, inverse: bool) -> np.ndarray:
    # rotation amount for byte j comes from the next material byte
    shifted = np.concatenate([material[..., 1:], material[..., :1]], axis=-1)
    rot = (shifted & 7).astype(np.uint16)
    if not inverse:
        s = states.astype(np.uint16)
        rolled = ((s << rot) | (s >> (8 - rot))) & 0xFF
        return (rolled ^ material).astype(np.uint8)
    t = (states ^ material).astype(np.uint16)
    return (((t >> rot) | (t << (8 - rot))) & 0xFF).astype(np.uint8)


def _shift_amounts(material_byte: np.ndarray) -> np.ndarray:
    """Four 2-bit amounts packed MSB-first into one material byte."""
    shifts = np.arange(6, -1, -2)
    return (material_byte[..., None] >> shifts) & 3


def _row_shift(states: np.ndarray, material: np.ndarray, inverse: bool) -> np.ndarray:
    amounts = _shift_amounts(material[..., 0].astype(np.int64))  # (..., 4)
    row = np.arange(16) // 4
    col = np.arange(16) % 4
    sign = -1 if inverse else 1
    src = row * 4 + (col + sign * amounts[..., row]) % 4
    if src.ndim == 1:
        return states[..., src]
    return np.take_along_axis(states, np.broadcast_to(src, states.shape), axis=-1)


_COLS = np.arange(4)


def _rotate_columns(grid: np.ndarray, src: np.ndarray) -> np.ndarray:
    # src holds, per (row, column), the row to read from
    if src.ndim == 2:
        return grid[..., src, _COLS]
    return np.take_along_axis(grid, np.broadcast_to(src, grid.shape), axis=-2)


def _column_mix(states: np.ndarray, material: np.ndarray, inverse: bool) -> np.ndarray:
    grid = states.reshape(states.shape[:-1] + (4, 4)).copy()
    amounts = _shift_amounts(material[..., 1].astype(np.int64))  # (..., 4) per column
    k = np.arange(4)[:, None]
    if not inverse:
        grid[..., 0, :] ^= grid[..., 1, :]
        grid[..., 2, :] ^= grid[..., 3, :]
        grid[..., 1, :] ^= grid[..., 0, :]
        grid[..., 3, :] ^= grid[..., 2, :]
        grid = _rotate_columns(grid, (k - amounts[..., None, :]) % 4)  # downward
    else:
        grid = _rotate_columns(grid, (k + amounts[..., None, :]) % 4)
        grid[..., 3, :] ^= grid[..., 2, :]
        grid[..., 1, :] ^= grid[..., 0, :]
        grid[..., 2, :] ^= grid[..., 3, :]
        grid[..., 0, :] ^= grid[..., 1, :]
    return grid.reshape(states.shape)


def byte_substitution(state: bytes, material: bytes, direction: str = "forward") -> bytes:
    """Per-byte rotation by a material-chosen amount, then XOR with material."""
    inverse = _parse_direction(direction)
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    m = np.frombuffer(_check_block(material, "material"), dtype=np.uint8)
    return _byte_sub(arr, m, inverse).tobytes()


def row_shift(state: bytes, material: bytes, direction: str = "forward") -> bytes:
    """Rotate each 4-byte row by a 2-bit amount taken from the material."""
    inverse = _parse_direction(direction)
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    m = np.frombuffer(_check_block(material, "material"), dtype=np.uint8)
    return _row_shift(arr, m, inverse).tobytes()


def column_mix(state: bytes, material: bytes, direction: str = "forward") -> bytes:
    """XOR network down each column followed by a material-chosen rotation."""
    inverse = _parse_direction(direction)
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    m = np.frombuffer(_check_block(material, "material"), dtype=np.uint8)
    return _column_mix(arr, m, inverse).tobytes()


def add_round_key(state: bytes, material: bytes) -> bytes:
    """Bitwise XOR whitening; its own inverse."""
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    m = np.frombuffer(_check_block(material, "material"), dtype=np.uint8)
    return (arr ^ m).tobytes()


def _material_rows(material: RoundMaterial) -> tuple[np.ndarray, ...]:
    return tuple(
        np.frombuffer(m, dtype=np.uint8)
        for m in (material.m_sub, material.m_row, material.m_mix, material.m_key)
    )


def _round_forward_arr(states: np.ndarray, material: RoundMaterial) -> np.ndarray:
    m_sub, m_row, m_mix, m_key = _material_rows(material)
    states = _byte_sub(states, m_sub, inverse=False)
    states = _row_shift(states, m_row, inverse=False)
    states = _column_mix(states, m_mix, inverse=False)
    return states ^ m_key


def _round_inverse_arr(states: np.ndarray, material: RoundMaterial) -> np.ndarray:
    m_sub, m_row, m_mix, m_key = _material_rows(material)
    states = states ^ m_key
    states = _column_mix(states, m_mix, inverse=True)
    states = _row_shift(states, m_row, inverse=True)
    return _byte_sub(states, m_sub, inverse=True)


def round_forward(state: bytes, key: SecretKey, round_index: int) -> bytes:
    """One full round: substitution, row shift, column mix, key addition."""
    material = derive_round_material(key, round_index)
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    return _round_forward_arr(arr, material).tobytes()


def round_inverse(state: bytes, key: SecretKey, round_index: int) -> bytes:
    """Inverse of round_forward: the four inverse transforms in reverse order."""
    material = derive_round_material(key, round_index)
    arr = np.frombuffer(_check_block(state, "state"), dtype=np.uint8)
    return _round_inverse_arr(arr, material).tobytes()


# --- the 128-cell core -------------------------------------------------------

def caf_core_encrypt(
    state: bytes, rid: bytes, key: SecretKey, caf_steps: int
) -> tuple[bytes, FinalData]:
    """Run the block-wide automaton forward from (rid, state).

    Returns (ciphertext, final data): the pair of configurations left at the
    end of the run, next-to-last first.
    """
    if caf_steps < MIN_CAF_STEPS:
        raise ValueError(f"caf_steps must be >= {MIN_CAF_STEPS}")
    _check_block(state, "state")
    _check_block(rid, "rid")
    pair = SecondOrderState(bits_from_bytes(rid), bits_from_bytes(state))
    out = so_iterate_forward(pair, _caf_rule(key.caf_segment), Boundary.CYCLIC, caf_steps)
    return bytes_from_bits(out.prev), FinalData(bytes_from_bits(out.curr), masked=False)


def caf_core_decrypt(ciphertext: bytes, final_data: bytes, key: SecretKey, caf_steps: int) -> bytes:
    """Run the automaton backward from (ciphertext, final data).

    Recovers the pre-automaton state; the other recovered configuration is
    the rid, which is discarded.
    """
    _check_block(ciphertext, "ciphertext")
    _check_block(final_data, "final_data")
    pair = SecondOrderState(bits_from_bytes(ciphertext), bits_from_bytes(final_data))
    back = so_iterate_backward(pair, _caf_rule(key.caf_segment), Boundary.CYCLIC, caf_steps)
    return bytes_from_bits(back.curr)


def mask_final_data(final_data: bytes, key: SecretKey) -> bytes:
    """Vernam-mask the final data with the 128-bit key segment; self-inverse."""
    value = np.frombuffer(_check_block(final_data, "final_data"), dtype=np.uint8)
    mask = np.frombuffer(key.caf_segment, dtype=np.uint8)
    return (value ^ mask).tobytes()


# --- single-block API --------------------------------------------------------

def encrypt_block(
    plaintext: bytes, key: SecretKey, params: CipherParams, rid: bytes
) -> CipherRecord:
    """Encrypt one 16-byte block with caller-supplied random initial data."""
    _check_block(plaintext, "plaintext")
    _check_block(rid, "rid")
    records = _encrypt_padded(plaintext, key, params, rid)
    return records[0]


def decrypt_block(record: CipherRecord, key: SecretKey, params: CipherParams) -> bytes:
    """Invert encrypt_block; the record's parameter echo must match."""
    return _decrypt_records_raw([record], key, params)


def _check_record(record: CipherRecord, params: CipherParams) -> None:
    if (record.rounds, record.caf_steps) != (params.rounds, params.caf_steps):
        raise ParameterMismatchError(
            f"record was made with rounds={record.rounds}, caf_steps={record.caf_steps}; "
            f"asked to decrypt with rounds={params.rounds}, caf_steps={params.caf_steps}"
        )
    if len(record.ciphertext) != BLOCK_BYTES or len(record.encrypted_final_data) != BLOCK_BYTES:
        raise RecordFormatError("truncated record: both payload halves must be 16 bytes")


# --- stream (multi-block) API -------------------------------------------------

def pad(data: bytes) -> bytes:
    """Append k bytes of value k (k = 1..16) up to a 16-byte multiple."""
    k = BLOCK_BYTES - (len(data) % BLOCK_BYTES)
    return data + bytes([k]) * k


def unpad(data: bytes) -> bytes:
    """Strip pad bytes written by pad(); raises PaddingError on bad trailers."""
    if not data or len(data) % BLOCK_BYTES:
        raise PaddingError("padded payload must be a non-empty multiple of 16 bytes")
    k = data[-1]
    if not 1 <= k <= BLOCK_BYTES or data[-k:] != bytes([k]) * k:
        raise PaddingError(f"invalid padding trailer (final byte {k})")
    return data[:-k]


def _encrypt_padded(
    padded: bytes, key: SecretKey, params: CipherParams, rids: bytes
) -> list[CipherRecord]:
    """Encrypt whole blocks: `padded` and `rids` are matching 16-byte multiples."""
    n_blocks, rem = divmod(len(padded), BLOCK_BYTES)
    if rem or n_blocks == 0:
        raise ValueError("padded payload must be a non-empty multiple of 16 bytes")
    if len(rids) != len(padded):
        raise ValueError("need one 16-byte rid per block")
    states = np.frombuffer(padded, dtype=np.uint8).reshape(n_blocks, BLOCK_BYTES)
    for material in _round_materials(key.raw, params.rounds):
        states = _round_forward_arr(states, material)
    state_bits = np.unpackbits(states, axis=1)
    rid_bits = np.unpackbits(
        np.frombuffer(rids, dtype=np.uint8).reshape(n_blocks, BLOCK_BYTES), axis=1
    )
    out = so_iterate_forward(
        SecondOrderState(rid_bits, state_bits),
        _caf_rule(key.caf_segment),
        Boundary.CYCLIC,
        params.caf_steps,
    )
    cipher_bytes = np.packbits(out.prev, axis=1)
    final_bytes = np.packbits(out.curr, axis=1)
    masked = final_bytes ^ np.frombuffer(key.caf_segment, dtype=np.uint8)
    return [
        CipherRecord(
            ciphertext=cipher_bytes[i].tobytes(),
            encrypted_final_data=masked[i].tobytes(),
            rounds=params.rounds,
            caf_steps=params.caf_steps,
        )
        for i in range(n_blocks)
    ]


def _decrypt_records_raw(
    records: Sequence[CipherRecord], key: SecretKey, params: CipherParams
) -> bytes:
    """Decrypt records to the padded byte stream (no padding removal)."""
    if not records:
        raise RecordFormatError("empty record sequence")
    for record in records:
        _check_record(record, params)
    cipher_bits = np.unpackbits(
        np.frombuffer(b"".join(r.ciphertext for r in records), dtype=np.uint8).reshape(
            len(records), BLOCK_BYTES
        ),
        axis=1,
    )
    masked = np.frombuffer(
        b"".join(r.encrypted_final_data for r in records), dtype=np.uint8
    ).reshape(len(records), BLOCK_BYTES)
    final_bytes = masked ^ np.frombuffer(key.caf_segment, dtype=np.uint8)
    final_bits = np.unpackbits(final_bytes, axis=1)
    back = so_iterate_backward(
        SecondOrderState(cipher_bits, final_bits),
        _caf_rule(key.caf_segment),
        Boundary.CYCLIC,
        params.caf_steps,
    )
    states = np.packbits(back.curr, axis=1)
    for material in reversed(_round_materials(key.raw, params.rounds)):
        states = _round_inverse_arr(states, material)
    return states.tobytes()


def encrypt_stream(
    plaintext: bytes,
    key: SecretKey,
    params: CipherParams,
    rid_source: Callable[[], bytes],
) -> list[CipherRecord]:
    """Pad and encrypt a byte string, one fresh rid per block."""
    padded = pad(plaintext)
    n_blocks = len(padded) // BLOCK_BYTES
    rids = []
    for _ in range(n_blocks):
        rid = rid_source()
        if len(rid) != BLOCK_BYTES:
            raise ValueError("rid_source must yield 16-byte values")
        rids.append(rid)
    return _encrypt_padded(padded, key, params, b"".join(rids))


def decrypt_stream(
    records: Sequence[CipherRecord], key: SecretKey, params: CipherParams
) -> bytes:
    """Decrypt a record sequence and strip the padding."""
    return unpad(_decrypt_records_raw(records, key, params))


# --- rid sources ---------------------------------------------------------------

def os_rid_source() -> bytes:
    """Fresh random initial data from the operating system's entropy pool."""
    return secrets.token_bytes(BLOCK_BYTES)


class SeededRidSource:
    """Deterministic rid stream for reproducible runs; thread-safe."""

    def __init__(self, seed: bytes):
        self._seed = bytes(seed)
        self._counter = 0
        self._lock = threading.Lock()

    def __call__(self) -> bytes:
        with self._lock:
            n = self._counter
            self._counter += 1
        digest = hashlib.sha256(self._seed + n.to_bytes(8, "big")).digest()
        return digest[:BLOCK_BYTES]
