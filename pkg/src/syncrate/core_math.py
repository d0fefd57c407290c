"""Scalar numerical primitives: binary entropy, binomials, exponential integral."""

from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
LOG2E = 1.0 / math.log(2.0)

# relative stopping rule shared by every truncated series in the package
SERIES_RTOL = 1e-14


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """Problem size above an enumeration cap."""


class ValidityError(ValueError):
    """Closed form requested outside the parameter range where it holds."""


class UndefinedConditionalError(ValueError):
    """Conditioning event has probability zero."""


class ReducibleChainError(ValueError):
    """Markov chain without a unique stationary law."""


def binary_entropy(x):
    """h2(x) in bits with 0 log 0 = 0. Accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"binary entropy needs 0 <= x <= 1, got {x!r}")
    if arr.ndim == 0:
        v = float(arr)
        if v == 0.0 or v == 1.0:
            return 0.0
        return -v * math.log2(v) - (1.0 - v) * math.log2(1.0 - v)
    out = np.zeros_like(arr)
    inner = (arr > 0.0) & (arr < 1.0)
    a = arr[inner]
    out[inner] = -a * np.log2(a) - (1.0 - a) * np.log2(1.0 - a)
    return out


def binom(n: int, k: int) -> int | float:
    """C(n, k): an exact int for n <= 64, a float (via lgamma) above."""
    if k < 0 or n < 0 or k > n:
        return 0
    if n <= 64:
        return math.comb(n, k)
    k = min(k, n - k)
    # lgamma keeps relative error near 1e-15 for the sizes used here
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def exp_integral_ei(x: float) -> float:
    """Ei(x) for x < 0 via gamma + ln|x| + sum x^k / (k k!).

    The alternating series loses about log10(e^|x|) digits to cancellation,
    so below x = -12 the optimally truncated asymptotic expansion
    e^x / x * sum k! / x^k is used instead; both stay under 1e-10 there.
    """
    if not x < 0.0:
        raise DomainError(f"Ei is only provided for negative arguments, got {x!r}")
    if x < -12.0:
        total, term, k = 0.0, 1.0, 0
        while True:
            k += 1
            nxt = term * k / x
            if abs(nxt) >= abs(term):
                break
            term = nxt
            total += term
            if abs(term) < 1e-17:
                break
        return math.exp(x) / x * (1.0 + total)
    s = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= x / k
        add = term / k
        s += add
        if abs(add) < SERIES_RTOL * (abs(s) + 1.0) and k > abs(x):
            break
    return EULER_GAMMA + math.log(-x) + s
