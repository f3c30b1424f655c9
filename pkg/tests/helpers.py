"""Independent straight-line oracles used to pin expected values.

Everything here is deliberately written as plain Python loops over cell
lists, with rule outputs taken straight from the rule number's bits. None of
it shares code with the package under test.
"""
from __future__ import annotations


def naive_step(cells, rule_numbers, radius, boundary):
    """One synchronous CA update, cell by cell, straight from rule bits."""
    n = len(cells)
    if len(rule_numbers) == 1:
        rule_numbers = list(rule_numbers) * n
    out = []
    for i in range(n):
        idx = 0
        for off in range(-radius, radius + 1):
            j = i + off
            if boundary == "cyclic":
                bit = cells[j % n]
            else:
                bit = cells[j] if 0 <= j < n else 0
            idx = (idx << 1) | bit
        out.append((rule_numbers[i] >> idx) & 1)
    return out


def naive_so_step(prev, curr, rule_number, radius, boundary):
    """Second-order update via explicit rule/complement selection per cell.

    A cell whose previous state was 1 uses the given rule, otherwise the
    complement rule (every table bit flipped).
    """
    entries = 1 << (2 * radius + 1)
    comp = (1 << entries) - rule_number - 1
    n = len(curr)
    new = []
    for i in range(n):
        idx = 0
        for off in range(-radius, radius + 1):
            j = i + off
            if boundary == "cyclic":
                bit = curr[j % n]
            else:
                bit = curr[j] if 0 <= j < n else 0
            idx = (idx << 1) | bit
        chosen = rule_number if prev[i] == 1 else comp
        new.append((chosen >> idx) & 1)
    return list(curr), new


def naive_so_run(prev, curr, rule_number, radius, boundary, steps):
    """Iterate naive_so_step, returning the list of curr rows (newest last)."""
    history = []
    for _ in range(steps):
        prev, curr = naive_so_step(prev, curr, rule_number, radius, boundary)
        history.append(list(curr))
    return prev, curr, history


def bits_of_bytes(data):
    """Bytes to bit list, MSB of byte 0 first."""
    out = []
    for byte in data:
        for k in range(7, -1, -1):
            out.append((byte >> k) & 1)
    return out


def bytes_of_bits(bits):
    assert len(bits) % 8 == 0
    out = bytearray()
    for i in range(0, len(bits), 8):
        byte = 0
        for b in bits[i : i + 8]:
            byte = (byte << 1) | b
        out.append(byte)
    return bytes(out)


def naive_expanded_rule_number(segment):
    """Radius-3 rule number from 8 key bytes: entry p = segment bit p mod 64."""
    bits = bits_of_bytes(segment)
    return sum(bits[p % 64] << p for p in range(128))


def naive_round_materials(key_raw, round_index):
    """The four material values of one round, by straight-line evaluation.

    Mirrors the contract: each 64-cell automaton starts from (round constant,
    key segment), runs four second-order steps, and the four newest rows of
    each side are joined left-to-right, newest pair first.
    """
    rc = bits_of_bytes(bytes([(round_index + 1) % 256]) * 8)
    histories = []
    for segment in (key_raw[0:8], key_raw[8:16]):
        number = naive_expanded_rule_number(segment)
        _, _, hist = naive_so_run(rc, bits_of_bytes(segment), number, 3, "cyclic", 4)
        histories.append(hist[::-1])  # newest first
    left, right = histories
    return [bytes_of_bits(left[k] + right[k]) for k in range(4)]
