"""Combinatorics on binary strings: subsequence weights and runs."""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

from .core_math import DomainError, SizeError

BRUTE_FORCE_CAP = 24
_U64_MAX = (1 << 64) - 1


def as_bits(s) -> tuple[int, ...]:
    """Normalise a bit string given as str, bytes-like or sequence of 0/1."""
    if isinstance(s, str):
        bits = tuple(int(c) for c in s)
    else:
        bits = tuple(int(b) for b in s)
    if any(b not in (0, 1) for b in bits):
        raise DomainError(f"not a binary string: {s!r}")
    return bits


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def subsequence_weight(y, x) -> int:
    """Number of index sets S with x_S = y (the y-subsequence weight of x)."""
    y, x = as_bits(y), as_bits(x)
    if len(y) > len(x):
        return 0
    # w[j] = number of embeddings of y[:j] into the prefix of x read so far
    w = [1] + [0] * len(y)
    for xi in x:
        for j in range(len(y), 0, -1):
            if y[j - 1] == xi:
                w[j] += w[j - 1]
                if w[j] > _U64_MAX:
                    raise OverflowError("subsequence weight exceeds 64 bits")
    return w[len(y)]


def subsequence_weight_brute(y, x) -> int:
    """Same count as subsequence_weight by enumerating every index subset."""
    y, x = as_bits(y), as_bits(x)
    if len(x) > BRUTE_FORCE_CAP:
        raise SizeError(f"|x| = {len(x)} exceeds brute-force cap {BRUTE_FORCE_CAP}")
    if len(y) > len(x):
        return 0
    return sum(1 for idx in combinations(range(len(x)), len(y))
               if all(x[i] == b for i, b in zip(idx, y)))


def first_run_length(x) -> int:
    x = as_bits(x)
    if not x:
        raise DomainError("the empty string has no first run")
    r = 1
    while r < len(x) and x[r] == x[0]:
        r += 1
    return r


def runs(x) -> list[tuple[int, int]]:
    """Run decomposition as (symbol, length) pairs."""
    x = as_bits(x)
    out: list[tuple[int, int]] = []
    for b in x:
        if out and out[-1][0] == b:
            out[-1] = (b, out[-1][1] + 1)
        else:
            out.append((b, 1))
    return out


def hamming_weight(x) -> int:
    return sum(as_bits(x))
