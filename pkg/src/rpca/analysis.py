"""Statistical and performance harnesses for the block cipher.

The avalanche measurement flips one input bit at a time and tracks which
ciphertext bits change; a healthy configuration flips each output bit about
half the time. The throughput benchmark reports wall-clock MB/s for single-
and multi-process runs. Neither asserts pass/fail thresholds itself; they
produce reports for callers (and the test suite) to judge.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cipher
from .cipher import (
    BLOCK_BYTES,
    CipherParams,
    CipherRecord,
    SecretKey,
    SeededRidSource,
)

FLIP_TARGETS = ("plaintext", "key")


@dataclass(frozen=True)
class AvalancheReport:
    trials: int
    flip_target: str
    mean_flip_fraction: float
    per_bit_flip_frequency: np.ndarray  # 128 entries in [0, 1]


def _flip_bit(data: bytes, bit_index: int) -> bytes:
    out = bytearray(data)
    out[bit_index // 8] ^= 0x80 >> (bit_index % 8)
    return bytes(out)


def avalanche(
    key: SecretKey,
    params: CipherParams,
    trials: int,
    flip_target: str = "plaintext",
    rng: np.random.Generator | None = None,
) -> AvalancheReport:
    """Measure ciphertext bit-flip frequencies under single-bit input flips.

    Each trial draws a fresh plaintext and rid, encrypts, flips one uniformly
    chosen bit of the plaintext (or of the key), re-encrypts with the same
    rid, and records which of the 128 ciphertext bits differ.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if flip_target not in FLIP_TARGETS:
        raise ValueError(f"flip_target must be one of {FLIP_TARGETS}")
    rng = rng or np.random.default_rng()

    if flip_target == "plaintext":
        diff_bits = _avalanche_plaintext(key, params, trials, rng)
    else:
        diff_bits = _avalanche_key(key, params, trials, rng)
    per_bit = diff_bits.mean(axis=0)
    return AvalancheReport(
        trials=trials,
        flip_target=flip_target,
        mean_flip_fraction=float(per_bit.mean()),
        per_bit_flip_frequency=per_bit,
    )


def _avalanche_plaintext(
    key: SecretKey, params: CipherParams, trials: int, rng: np.random.Generator
) -> np.ndarray:
    plaintexts = rng.integers(0, 256, size=(trials, BLOCK_BYTES), dtype=np.uint8)
    flipped = plaintexts.copy()
    positions = rng.integers(0, 8 * BLOCK_BYTES, size=trials)
    flipped[np.arange(trials), positions // 8] ^= (0x80 >> (positions % 8)).astype(np.uint8)
    rids = rng.bytes(trials * BLOCK_BYTES)
    base = cipher._encrypt_padded(plaintexts.tobytes(), key, params, rids)
    var = cipher._encrypt_padded(flipped.tobytes(), key, params, rids)
    return _cipher_bit_diffs(base, var)


def _avalanche_key(
    key: SecretKey, params: CipherParams, trials: int, rng: np.random.Generator
) -> np.ndarray:
    diffs = np.empty((trials, 8 * BLOCK_BYTES), dtype=np.uint8)
    for t in range(trials):
        plaintext = rng.bytes(BLOCK_BYTES)
        rid = rng.bytes(BLOCK_BYTES)
        position = int(rng.integers(0, 8 * len(key.raw)))
        flipped_key = cipher.parse_key(_flip_bit(key.raw, position))
        base = cipher.encrypt_block(plaintext, key, params, rid)
        var = cipher.encrypt_block(plaintext, flipped_key, params, rid)
        diffs[t] = _cipher_bit_diffs([base], [var])[0]
    return diffs


def _cipher_bit_diffs(base: list[CipherRecord], var: list[CipherRecord]) -> np.ndarray:
    a = np.frombuffer(b"".join(r.ciphertext for r in base), dtype=np.uint8)
    b = np.frombuffer(b"".join(r.ciphertext for r in var), dtype=np.uint8)
    return np.unpackbits(a ^ b).reshape(len(base), 8 * BLOCK_BYTES)


# --- throughput ------------------------------------------------------------

@dataclass(frozen=True)
class ThroughputReport:
    megabytes: int
    workers: int
    encrypt_single_mbps: float
    decrypt_single_mbps: float
    encrypt_multi_mbps: float
    decrypt_multi_mbps: float
    round_trip_ok: bool
    parallel_matches_serial: bool

    @property
    def encrypt_speedup(self) -> float:
        return self.encrypt_multi_mbps / self.encrypt_single_mbps


def _encrypt_slab(args) -> bytes:
    raw_key, rounds, caf_steps, padded, rids = args
    records = cipher._encrypt_padded(
        padded, cipher.parse_key(raw_key), CipherParams(rounds, caf_steps), rids
    )
    return b"".join(r.payload() for r in records)


def _decrypt_slab(args) -> bytes:
    raw_key, rounds, caf_steps, payloads = args
    records = _records_from_payloads(payloads, rounds, caf_steps)
    return cipher._decrypt_records_raw(
        records, cipher.parse_key(raw_key), CipherParams(rounds, caf_steps)
    )


def _records_from_payloads(payloads: bytes, rounds: int, caf_steps: int) -> list[CipherRecord]:
    return [
        CipherRecord(
            ciphertext=payloads[at : at + BLOCK_BYTES],
            encrypted_final_data=payloads[at + BLOCK_BYTES : at + 2 * BLOCK_BYTES],
            rounds=rounds,
            caf_steps=caf_steps,
        )
        for at in range(0, len(payloads), 2 * BLOCK_BYTES)
    ]


def _slab_bounds(n_blocks: int, workers: int) -> list[tuple[int, int]]:
    per = -(-n_blocks // workers)  # ceil division
    return [(lo, min(lo + per, n_blocks)) for lo in range(0, n_blocks, per)]


def throughput_bench(
    key: SecretKey,
    params: CipherParams,
    megabytes: int = 1,
    workers: int | None = None,
    rng: np.random.Generator | None = None,
) -> ThroughputReport:
    """Wall-clock throughput of stream encryption, serial and multi-process.

    Uses a deterministic rid stream so the multi-worker output must be
    byte-identical to the serial one; that equality plus a full round trip
    back to the payload is checked on every run. Worker processes are started
    before timing begins, mirroring a long-lived tool's steady state.
    """
    if megabytes < 1:
        raise ValueError("megabytes must be >= 1")
    workers = workers or os.cpu_count() or 1
    rng = rng or np.random.default_rng()
    payload = rng.bytes(megabytes * 1_000_000)
    mb = len(payload) / 1e6

    padded = cipher.pad(payload)
    n_blocks = len(padded) // BLOCK_BYTES
    rid_source = SeededRidSource(b"bench-rid")
    rids = b"".join(rid_source() for _ in range(n_blocks))

    t0 = time.perf_counter()
    serial_records = cipher._encrypt_padded(padded, key, params, rids)
    t_enc = time.perf_counter() - t0

    t0 = time.perf_counter()
    serial_padded = cipher._decrypt_records_raw(serial_records, key, params)
    t_dec = time.perf_counter() - t0
    round_trip_ok = cipher.unpad(serial_padded) == payload

    serial_payloads = b"".join(r.payload() for r in serial_records)
    bounds = _slab_bounds(n_blocks, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        list(pool.map(int, range(workers)))  # spin the workers up

        enc_args = [
            (
                key.raw,
                params.rounds,
                params.caf_steps,
                padded[lo * BLOCK_BYTES : hi * BLOCK_BYTES],
                rids[lo * BLOCK_BYTES : hi * BLOCK_BYTES],
            )
            for lo, hi in bounds
        ]
        t0 = time.perf_counter()
        enc_parts = list(pool.map(_encrypt_slab, enc_args))
        t_enc_multi = time.perf_counter() - t0

        dec_args = [
            (
                key.raw,
                params.rounds,
                params.caf_steps,
                serial_payloads[lo * 2 * BLOCK_BYTES : hi * 2 * BLOCK_BYTES],
            )
            for lo, hi in bounds
        ]
        t0 = time.perf_counter()
        dec_parts = list(pool.map(_decrypt_slab, dec_args))
        t_dec_multi = time.perf_counter() - t0

    parallel_ok = b"".join(enc_parts) == serial_payloads and b"".join(dec_parts) == serial_padded

    return ThroughputReport(
        megabytes=megabytes,
        workers=workers,
        encrypt_single_mbps=mb / t_enc,
        decrypt_single_mbps=mb / t_dec,
        encrypt_multi_mbps=mb / t_enc_multi,
        decrypt_multi_mbps=mb / t_dec_multi,
        round_trip_ok=round_trip_ok,
        parallel_matches_serial=parallel_ok,
    )
