"""Closed-form and series bounds on capacities and information rates.

Rates are in bits per input symbol. BDC means p_r = 0 and BRC means p_d = 0.
SDRC is the symmetric case p_d = p_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import optimize
from scipy.stats import binom as binom_dist

from . import _kernels
from .channel import ChannelParams
from .core_math import (LOG2E, SERIES_RTOL, DomainError, SizeError, ValidityError,
                        binary_entropy, binom, exp_integral_ei)

H_IM_CAP = 20
ALPHA_TOL = 1e-6

h2 = binary_entropy


@dataclass(frozen=True)
class BoundValue:
    value: float
    kind: str  # "lower", "upper" or "exact-rate"
    validity: str = ""
    truncation_report: dict | None = None
    argmax: float | None = None

    def __float__(self) -> float:
        return float(self.value)


def _check_p(p: float) -> float:
    p = float(p)
    if not (0.0 <= p < 1.0):
        raise DomainError(f"p must lie in [0, 1), got {p}")
    return p


# ------------------------------------------------------------ simple bounds

def drc_simple_bounds(params: ChannelParams) -> tuple[BoundValue, BoundValue]:
    p_d, p_r = params.p_d, params.p_r
    low = (1.0 - p_d) * (1.0 - h2(p_r) / (1.0 - p_r)) - h2(p_d)
    return (BoundValue(max(low, 0.0), "lower", "(p_d, p_r) in [0,1)^2"),
            BoundValue(1.0 - p_d, "upper", "(p_d, p_r) in [0,1)^2"))


# ---------------------------------------------------- BDC SIR coefficients

@lru_cache(maxsize=None)
def h_im(i: int, m: int) -> float:
    """H(Z_1 | Z_i = -m, X, Y) for the BDC with i.u.d. input.

    Given x and y, the position of the first surviving bit has law
    proportional to the number of deletion patterns producing y with that
    first kept bit; those counts come from a suffix embedding DP.
    """
    if i < 2 or m < 0:
        raise DomainError("h_im needs i >= 2 and m >= 0")
    length = m + i - 1
    if length > H_IM_CAP:
        raise SizeError(f"m + i - 1 = {length} exceeds enumeration cap {H_IM_CAP}")
    if m == 0:
        return 0.0
    total = _kernels.h_im_counts(i, length)
    return float(total / binom(length, m) / (1 << length))


def _h_im_enumerate(i: int, m: int) -> float:
    """H(Z_1 | Z_i = -m, X, Y) for the BDC with i.u.d. input, by enumeration.

    Every input of length m+i-1 and every choice of the m deleted positions is
    visited; for each (input, output) pair the conditional law of the position
    of the first surviving bit is accumulated, giving its entropy.
    """
    if i < 2 or m < 0:
        raise DomainError("h_im needs i >= 2 and m >= 0")
    length = m + i - 1
    if length > H_IM_CAP:
        raise SizeError(f"m + i - 1 = {length} exceeds enumeration cap {H_IM_CAP}")
    if m == 0:
        return 0.0
    xs = np.arange(1 << length, dtype=np.int64)
    # bit k of the integer is input position k+1 (read left to right)
    bits = (xs[:, None] >> (length - 1 - np.arange(length))) & 1
    keys, firsts = [], []
    for dele in combinations(range(length), m):
        keep = [k for k in range(length) if k not in dele]
        y = np.zeros(xs.size, dtype=np.int64)
        for k in keep:
            y = (y << 1) | bits[:, k]
        keys.append((xs << (i - 1)) | y)
        firsts.append(np.full(xs.size, keep[0], dtype=np.int64))
    key = np.concatenate(keys)
    first = np.concatenate(firsts)
    cell = key * (m + 1) + first
    cells, counts = np.unique(cell, return_counts=True)
    pair = cells // (m + 1)
    pairs, inv = np.unique(pair, return_inverse=True)
    w = np.bincount(inv, weights=counts)
    q = counts / w[inv]
    ent = np.bincount(inv, weights=-q * np.log2(q))
    total_per_pair = w * ent
    # average over inputs (2^-length each) of sum_y w_y(x)/C(length, m) * entropy
    return float(total_per_pair.sum() / binom(length, m) / (1 << length))


def h2m_closed(m: int) -> float:
    if m < 0:
        raise DomainError("m must be non-negative")
    j = np.arange(m + 2)
    weights = binom_dist.pmf(j, m + 1, 0.5)
    return float(math.log2(m + 1) - np.dot(weights, h2(j / (m + 1))))


def _h2m_table(m_max: int) -> np.ndarray:
    return np.array([h2m_closed(m) for m in range(m_max + 1)])


def d2_iud(p: float, m_max: int = 400) -> BoundValue:
    """Lower bound on the BDC SIR from the i = 2 term of the series."""
    p = _check_p(p)
    base = 1.0 - p - h2(p)
    if p == 0.0:
        return BoundValue(1.0, "lower", "0 <= p < 1", {"terms": 0, "tail_bound": 0.0})
    s = 0.0
    used = 0
    for m in range(1, m_max + 1):
        t = (m + 1) * p ** m * h2m_closed(m)
        s += t
        used = m
        if t < SERIES_RTOL * (abs(s) + 1.0):
            break
    # H2_m <= log2(m+1) bounds the dropped terms
    mm = np.arange(used + 1, used + 4001)
    tail = (1 - p) ** 3 * float(np.sum((mm + 1) * p ** mm * np.log2(mm + 1)))
    return BoundValue(base + (1 - p) ** 3 * s, "lower", "0 <= p < 1",
                      {"terms": used, "tail_bound": tail})


P_STAR = math.exp(-(1.0 + math.log(2.0)) / (2.0 * math.log(2.0)))


def d2_iud_closed(p: float) -> BoundValue:
    """Integral lower bound on d2_iud; holds for 0 < p < p*."""
    p = float(p)
    if not (0.0 < p < P_STAR):
        raise ValidityError(f"closed form needs 0 < p < p* = {P_STAR:.9f}, got {p}")
    lp = math.log(p)
    ln2 = math.log(2.0)
    val = (4 * (1 - p) ** 3 / (2 - p) ** 2 - h2(p)
           + (1 - p) ** 3 * (LOG2E / lp) * (p * (1 + ln2) / lp - 2 * p * ln2
                                            - exp_integral_ei(2 * lp) / p))
    return BoundValue(val, "lower", f"0 < p < {P_STAR:.9f}")


def psi_i1(i: int) -> float:
    """psi_{i,1}: i times the ambiguity entropy of a single deletion in i+1 bits."""
    if i < 1:
        raise DomainError("i must be positive")
    if i == 1:
        return 0.0
    j = np.arange(1, i - 1)
    return float(0.5 * np.sum(j / 2.0 ** j * np.log2(j)) + 2 * i / 2.0 ** i * math.log2(i))


PSI_I = 64


def psi_1() -> float:
    return psi_i1(PSI_I)


def constant_d() -> float:
    return math.log2(2 * math.e) - psi_1()


def constant_r() -> float:
    return 2.0 - constant_d()


def p_sub_star(xtol: float = 1e-13) -> float:
    """Root of (1 - p)(4^p + 1) = 1 on (0, 1): alpha* = 1 there."""
    return optimize.bisect(lambda p: (1 - p) * (4.0 ** p + 1) - 1, 0.5, 0.9, xtol=xtol)


def bdc_small_p_sir(p: float) -> BoundValue:
    p = _check_p(p)
    d = constant_d()
    v = 1.0 + (p * math.log2(p) if p > 0 else 0.0) - d * p
    return BoundValue(v, "exact-rate", "up to O(p^2) as p -> 0", {"psi_i": PSI_I, "d": d})


def bdc_sir_partial(i: int, j_max: int, p: float) -> BoundValue:
    p = _check_p(p)
    if i < 1 or j_max < 0:
        raise DomainError("need i >= 1 and j_max >= 0")
    base = 1.0 - p - h2(p)
    if i == 1 or j_max == 0:
        return BoundValue(base, "lower", "0 <= p < 1", {"i": i, "j_max": j_max})
    if i + j_max - 1 > H_IM_CAP:
        raise SizeError(f"i + j_max - 1 = {i + j_max - 1} exceeds cap {H_IM_CAP}")
    s = sum(binom(m + i - 1, m) * h_im(i, m) * p ** m for m in range(1, j_max + 1))
    return BoundValue(base + (1 - p) ** (i + 1) * s, "lower", "0 <= p < 1",
                      {"i": i, "j_max": j_max})


# -------------------------------------------------------- Markov-1 inputs

def markov_weight_law(alpha: float, length: int) -> np.ndarray:
    """eta(alpha, j, length): Hamming-weight law of a symmetric Markov string.

    The string starts uniformly and flips with probability alpha at each step.
    """
    e0 = np.zeros(length + 1)
    e1 = np.zeros(length + 1)
    e0[0] = 0.5
    e1[1] = 0.5
    for _ in range(length - 1):
        n0 = (1 - alpha) * e0 + alpha * e1
        n1 = np.zeros_like(e1)
        n1[1:] = (1 - alpha) * e1[:-1] + alpha * e0[:-1]
        e0, e1 = n0, n1
    return e0 + e1


def _maximize(fun, lo: float = 0.0, hi: float = 1.0, grid: int = 201) -> tuple[float, float]:
    """Maximise a scalar function on [lo, hi]: coarse scan then bounded Brent."""
    xs = np.linspace(lo, hi, grid)
    vals = np.array([fun(x) for x in xs])
    k = int(np.argmax(vals))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda t: -fun(t), bounds=(a, b), method="bounded",
                                   options={"xatol": ALPHA_TOL})
    if -res.fun >= vals[k]:
        return float(res.x), float(-res.fun)
    return float(xs[k]), float(vals[k])


def _m1_bracket_d2(alpha: float, p: float, m_max: int, logs, hs) -> float:
    # one pass of the weight-law recursion yields every string length 2..m_max+1
    s = 0.0
    e0 = np.zeros(m_max + 2)
    e1 = np.zeros(m_max + 2)
    e0[0] = e1[1] = 0.5
    for m in range(1, m_max + 1):
        n1 = np.zeros_like(e1)
        n1[1:] = (1 - alpha) * e1[:-1] + alpha * e0[:-1]
        e0 = (1 - alpha) * e0 + alpha * e1
        e1 = n1
        eta = (e0 + e1)[: m + 2]
        s += (m + 1) * p ** m * (logs[m] - float(np.dot(hs[m], eta)))
    return h2(alpha) + (1 - p) ** 2 * s


def bdc_markov1_d2(p: float, m_max: int = 64) -> BoundValue:
    p = _check_p(p)
    if m_max > 64:
        raise SizeError("m_max must not exceed 64")
    logs = [math.log2(m + 1) for m in range(m_max + 1)]
    hs = [h2(np.arange(m + 2) / (m + 1)) for m in range(m_max + 1)]
    a, best = _maximize(lambda al: _m1_bracket_d2(al, p, m_max, logs, hs))
    return BoundValue(best * (1 - p) - h2(p), "lower", "0 <= p < 1",
                      {"m_max": m_max}, argmax=a)


def _m1_inner_d1_all(alpha: float, i_max: int) -> np.ndarray:
    """Inner Markov-1 D1 term for i = 1..i_max."""
    j = np.arange(1, i_max + 1)
    hj = h2(1.0 / j)
    q = (1 - alpha) ** (j - 1)
    return alpha * np.cumsum(j * q * hj) + j * q * (1 - alpha) * hj


def _m1_inner_d1(alpha: float, i: int) -> float:
    return float(_m1_inner_d1_all(alpha, i)[-1])


def bdc_markov1_frak_d1(p: float, i_max: int = 64) -> BoundValue:
    p = _check_p(p)
    decay = (1 - p) ** np.arange(1, i_max + 1)

    def bracket(alpha):
        return h2(alpha) + p * float(np.max(decay * _m1_inner_d1_all(alpha, i_max)))

    a, best = _maximize(bracket)
    return BoundValue(-h2(p) + (1 - p) * best, "lower", "0 <= p < 1", {"i_max": i_max},
                      argmax=a)


# ------------------------------------------------------------------- BRC

@lru_cache(maxsize=256)
def _brc_inner_sums(p: float, k_max: int) -> np.ndarray:
    """S_l = sum_{k >= l} C(k, l) p^(k-l) h2(l/k) for l = 1..k_max (alpha-free)."""
    k = np.arange(1, k_max + 1, dtype=float)
    lg = np.array([math.lgamma(v + 1) for v in range(k_max + 1)])
    kk, ll = np.meshgrid(k, k, indexing="xy")  # rows l, columns k
    valid = kk >= ll
    ki, li = kk.astype(int), ll.astype(int)
    logc = np.where(valid, lg[ki] - lg[li] - lg[np.where(valid, ki - li, 0)], -np.inf)
    with np.errstate(invalid="ignore"):
        w = np.exp(logc + np.where(valid, (kk - ll) * math.log(p), 0.0))
        w = np.where(valid, w * h2(np.where(valid, ll / kk, 0.0)), 0.0)
    return w.sum(axis=1)


def brc_z1_given_xy(p: float, alpha: float, k_max: int = 400) -> tuple[float, int]:
    """H(Z_1 | X, Y) for the BRC with a symmetric Markov-1 input.

    Evaluated with p^(k-l) weights so nothing is singular at p = 0.
    Returns the value and the number of k-terms kept.
    """
    if p == 0.0:
        return 0.0, 0
    sums = _brc_inner_sums(float(p), int(k_max))
    l = np.arange(1, k_max + 1)
    terms = alpha * (1 - alpha) ** l * (1 - p) ** (l + 1) * sums
    return float(terms.sum()), k_max


def brc_z1_given_y(p: float, alpha: float) -> float:
    q = p + (1 - alpha) * (1 - p)
    return q * h2(p / q) if q > 0 else 0.0


def brc_markov1_rate(p: float, alpha: float, k_max: int = 400) -> BoundValue:
    """The Markov-1 bracket for the BRC at a fixed flip probability alpha."""
    p = _check_p(p)
    if not (0.0 <= alpha <= 1.0):
        raise DomainError("alpha must lie in [0, 1]")
    hxy, kept = brc_z1_given_xy(p, alpha, k_max)
    val = h2(alpha) + (hxy - brc_z1_given_y(p, alpha)) / (1 - p)
    return BoundValue(val, "lower", "0 <= p < 1; truncated in k",
                      {"k_max": kept}, argmax=alpha)


def brc_markov1_max(p: float, k_max: int = 400) -> BoundValue:
    a, best = _maximize(lambda al: brc_markov1_rate(p, al, k_max).value, grid=101)
    return BoundValue(best, "lower", "0 <= p < 1; truncated in k", {"k_max": k_max},
                      argmax=a)


def brc_r2_bracket(p: float, alpha: float) -> float:
    return h2(alpha) + 2 * p * (1 - alpha) - brc_z1_given_y(p, alpha) / (1 - p)


def brc_r2_closed(p: float) -> BoundValue:
    p = _check_p(p)
    ps = p_sub_star()
    if p > ps:
        raise ValidityError(f"closed form needs p <= p_* = {ps:.9f}, got {p}")
    f = 4.0 ** p
    a_star = 1.0 / ((1 - p) * (f + 1))
    val = (h2(min(a_star, 1.0)) + (2 * p / (1 - p)) * (((1 - p) * f - p) / (f + 1))
           - (1 / (1 - p)) * (f / (f + 1)) * h2(p * (f + 1) / f))
    return BoundValue(val, "lower", f"0 <= p <= {ps:.9f}", argmax=a_star)


def brc_small_p_sir(p: float) -> BoundValue:
    p = _check_p(p)
    r = constant_r()
    v = 1.0 + (p * math.log2(p) if p > 0 else 0.0) + r * p
    return BoundValue(v, "exact-rate", "up to O(p^2) as p -> 0", {"psi_i": PSI_I, "r": r})
