"""Command-line front end.

Subcommands: keygen, encrypt, decrypt, rules, cycles, avalanche, bench.
Exit codes: 0 on success, 1 for usage errors, 2 for data or format errors.
Keys are 32-byte files or 64-hex-character strings. A `--seed HEX` flag
switches every randomized subcommand to deterministic generators so runs can
be reproduced; without it, randomness comes from the OS entropy pool.
"""
from __future__ import annotations

import argparse
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import analysis, ca
from .ca import Boundary
from .cipher import (
    DEFAULT_CAF_STEPS,
    DEFAULT_ROUNDS,
    CipherError,
    CipherParams,
    KeyFormatError,
    SecretKey,
    SeededRidSource,
    decrypt_stream,
    encrypt_stream,
    os_rid_source,
    parse_key,
)
from .container import ContainerError, ContainerHeader, read_container, write_container

RESEARCH_WARNING = (
    "warning: experimental research cipher; do not use it to protect real data"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 with usage text instead of argparse's exit 2
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parse_seed(text: str) -> bytes:
    try:
        seed = bytes.fromhex(text)
    except ValueError:
        raise UsageError(f"--seed must be hex characters, got {text!r}")
    if not seed:
        raise UsageError("--seed must not be empty")
    return seed


def load_key(value: str) -> SecretKey:
    """Accept a path to a 32-byte key file or a 64-hex-character string."""
    path = Path(value)
    if path.exists():
        data = path.read_bytes()
        if len(data) != 32:
            raise KeyFormatError(f"key file {path} must hold exactly 32 bytes, found {len(data)}")
        return parse_key(data)
    stripped = value.strip()
    if len(stripped) == 64:
        try:
            return parse_key(bytes.fromhex(stripped))
        except ValueError:
            pass
    raise KeyFormatError(f"{value!r} is neither an existing key file nor 64 hex characters")


def _write_key_file(path: Path, key_bytes: bytes) -> None:
    flags = os.O_WRONLY | os.O_CREAT | os.O_TRUNC
    fd = os.open(path, flags, 0o600)
    try:
        os.write(fd, key_bytes)
    finally:
        os.close(fd)
    try:
        os.chmod(path, 0o600)
    except OSError:
        pass  # best effort; not every filesystem supports modes


def _cmd_keygen(args) -> int:
    if args.seed is not None:
        source = SeededRidSource(_parse_seed(args.seed) + b"/keygen")
        key_bytes = source() + source()
    else:
        key_bytes = secrets.token_bytes(32)
    _write_key_file(Path(args.out), key_bytes)
    print(f"wrote 32-byte key to {args.out}")
    return 0


def _cmd_encrypt(args) -> int:
    print(RESEARCH_WARNING, file=sys.stderr)
    key = load_key(args.key)
    params = CipherParams(rounds=args.rounds, caf_steps=args.steps)
    data = Path(args.infile).read_bytes()
    if args.seed is not None:
        rid_source = SeededRidSource(_parse_seed(args.seed))
    else:
        rid_source = os_rid_source
    records = encrypt_stream(data, key, params, rid_source)
    header = ContainerHeader(params.rounds, params.caf_steps, len(data))
    Path(args.out).write_bytes(write_container(header, records))
    print(f"encrypted {len(data)} bytes into {len(records)} blocks -> {args.out}")
    return 0


def _cmd_decrypt(args) -> int:
    key = load_key(args.key)
    header, records = read_container(Path(args.infile).read_bytes())
    params = CipherParams(rounds=header.rounds, caf_steps=header.caf_steps)
    data = decrypt_stream(records, key, params)
    if len(data) != header.plaintext_length:
        raise ContainerError(
            f"decrypted length {len(data)} disagrees with header {header.plaintext_length}"
        )
    Path(args.out).write_bytes(data)
    print(f"decrypted {len(records)} blocks -> {args.out} ({len(data)} bytes)")
    return 0


def _cmd_rules(args) -> int:
    if args.rules_cmd == "list-reversible":
        found = ca.enumerate_reversible_elementary(args.radius, [4, 5, 6, 7, 8])
        print(" ".join(str(n) for n in sorted(found)))
    elif args.rules_cmd == "complement":
        rule = ca.make_rule(args.radius, args.number)
        print(ca.complement_rule(rule).number)
    else:  # table
        rule = ca.make_rule(args.radius, args.number)
        width = rule.width
        for pattern in range(len(rule.table) - 1, -1, -1):
            print(f"{pattern:0{width}b} {rule.table[pattern]}")
    return 0


def _cmd_cycles(args) -> int:
    rules = ca.parse_rule_vector(args.rule_vector)
    if len(rules) not in (1, args.cells):
        raise ValueError(
            f"rule vector has {len(rules)} entries; need 1 or {args.cells} for {args.cells} cells"
        )
    report = ca.cycle_structure(rules, Boundary(args.boundary), args.cells)
    for cycle in report.cycles:
        print("->".join(ca.format_state_int(s, args.cells) for s in cycle))
    if report.transient_states:
        print(
            "transients: "
            + " ".join(ca.format_state_int(s, args.cells) for s in report.transient_states)
        )
    return 0


def _rng_and_key(args) -> tuple[np.random.Generator, SecretKey]:
    if args.seed is not None:
        seed = _parse_seed(args.seed)
        rng = np.random.default_rng(int.from_bytes(seed, "big"))
    else:
        rng = np.random.default_rng()
    if getattr(args, "key", None):
        key = load_key(args.key)
    else:
        key = parse_key(rng.bytes(32))
    return rng, key


def _cmd_avalanche(args) -> int:
    rng, key = _rng_and_key(args)
    params = CipherParams(rounds=args.rounds, caf_steps=args.steps)
    report = analysis.avalanche(key, params, args.trials, args.flip, rng=rng)
    freq = report.per_bit_flip_frequency
    print(f"flipped one {report.flip_target} bit per trial over {report.trials} trials")
    print(f"trials={report.trials}")
    print(f"flip_target={report.flip_target}")
    print(f"mean_flip_fraction={report.mean_flip_fraction:.4f}")
    print(f"min_bit_frequency={freq.min():.4f}")
    print(f"max_bit_frequency={freq.max():.4f}")
    return 0


def _cmd_bench(args) -> int:
    rng, key = _rng_and_key(args)
    params = CipherParams(rounds=args.rounds, caf_steps=args.steps)
    workers = args.workers or os.cpu_count() or 1
    report = analysis.throughput_bench(key, params, args.mb, workers, rng=rng)
    print(f"benchmarked {report.megabytes} MB with {report.workers} workers")
    print(f"megabytes={report.megabytes}")
    print(f"workers={report.workers}")
    print(f"encrypt_single_mbps={report.encrypt_single_mbps:.3f}")
    print(f"decrypt_single_mbps={report.decrypt_single_mbps:.3f}")
    print(f"encrypt_multi_mbps={report.encrypt_multi_mbps:.3f}")
    print(f"decrypt_multi_mbps={report.decrypt_multi_mbps:.3f}")
    print(f"round_trip_ok={report.round_trip_ok}")
    print(f"parallel_matches_serial={report.parallel_matches_serial}")
    if not (report.round_trip_ok and report.parallel_matches_serial):
        return 2
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rpca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a fresh 32-byte key file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None, help="hex seed for a deterministic key (testing)")
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("encrypt", help="encrypt a file into an .rpca container")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS)
    p.add_argument("--steps", type=int, default=DEFAULT_CAF_STEPS)
    p.add_argument("--seed", default=None, help="hex seed for deterministic rids (testing)")
    p.set_defaults(func=_cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt an .rpca container")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_decrypt)

    p = sub.add_parser("rules", help="explore local rules")
    rules_sub = p.add_subparsers(dest="rules_cmd", required=True)
    q = rules_sub.add_parser("list-reversible", help="rules with injective ring dynamics")
    q.add_argument("--radius", type=int, default=1)
    q.set_defaults(func=_cmd_rules)
    q = rules_sub.add_parser("complement", help="print the complement rule number")
    q.add_argument("number", type=int)
    q.add_argument("--radius", type=int, default=1)
    q.set_defaults(func=_cmd_rules)
    q = rules_sub.add_parser("table", help="print a rule's lookup table")
    q.add_argument("number", type=int)
    q.add_argument("--radius", type=int, required=True)
    q.set_defaults(func=_cmd_rules)

    p = sub.add_parser("cycles", help="state-transition cycles of a small automaton")
    p.add_argument("--rule-vector", required=True, help="comma-separated rule numbers")
    p.add_argument("--cells", type=int, required=True)
    p.add_argument("--boundary", choices=["null", "cyclic"], required=True)
    p.set_defaults(func=_cmd_cycles)

    p = sub.add_parser("avalanche", help="single-bit diffusion measurement")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--flip", choices=["plaintext", "key"], default="plaintext")
    p.add_argument("--key", default=None)
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS)
    p.add_argument("--steps", type=int, default=DEFAULT_CAF_STEPS)
    p.add_argument("--seed", default=None)
    p.set_defaults(func=_cmd_avalanche)

    p = sub.add_parser("bench", help="throughput benchmark")
    p.add_argument("--mb", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--key", default=None)
    p.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS)
    p.add_argument("--steps", type=int, default=DEFAULT_CAF_STEPS)
    p.add_argument("--seed", default=None)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (CipherError, ContainerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
