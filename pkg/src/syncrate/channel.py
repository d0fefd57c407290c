"""The deletion-replication channel (DRC) as a channel with states.

Conventions
-----------
The state process Z starts at Z_0 = 0 and moves by +1 with probability
p_r or by -l (l >= 0) with probability p_t p_d^l. The index process is
Gamma_i = i - Z_i and the output is Y_i = X_{Gamma_i} while Gamma_i <= n.

Input positions are 1-based and there is no X_0, so the first increment of
Gamma is drawn conditioned on being at least one (law (1 - p_d) p_d^(d-1)).
With that start the finite-n law coincides exactly with the per-symbol
(Dobrushin) description: each bit is deleted with probability p_d or emitted
l >= 1 times with probability p_t p_r^(l-1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core_math import DomainError, SizeError, binary_entropy
from .sequences import as_bits, bits_to_str

EXACT_LAW_CAP = 10
DENSE_CELLS_CAP = 1 << 24


@dataclass(frozen=True)
class ChannelParams:
    p_d: float
    p_r: float

    @property
    def p_t(self) -> float:
        return (1.0 - self.p_d) * (1.0 - self.p_r)

    @property
    def is_bdc(self) -> bool:
        return self.p_r == 0.0

    @property
    def is_brc(self) -> bool:
        return self.p_d == 0.0

    def as_dict(self) -> dict:
        return {"p_d": self.p_d, "p_r": self.p_r, "p_t": self.p_t}


@dataclass(frozen=True)
class DriftMoments:
    chi: float
    nu_sq: float


def make_params(p_d: float, p_r: float) -> ChannelParams:
    p_d, p_r = float(p_d), float(p_r)
    for name, v in (("p_d", p_d), ("p_r", p_r)):
        if not (0.0 <= v < 1.0):
            raise DomainError(f"{name} must lie in [0, 1), got {v}")
    return ChannelParams(p_d, p_r)


def drift_moments(params: ChannelParams) -> DriftMoments:
    p_d, p_r = params.p_d, params.p_r
    chi = (p_r - p_d) / (1.0 - p_d)
    nu_sq = (1.0 - p_r) * (p_r + p_d) / (1.0 - p_d) ** 2
    return DriftMoments(chi, nu_sq)


def state_transition_pmf(params: ChannelParams, delta: int, ell_max: int | None = None) -> float:
    """P(Z_i - Z_{i-1} = delta). ell_max is informational only: the pmf is exact."""
    if delta > 1:
        return 0.0
    if delta == 1:
        return params.p_r
    return params.p_t * params.p_d ** (-delta)


def copy_count_pmf(params: ChannelParams, length: int) -> np.ndarray:
    """Number of output copies of one input bit, truncated to 0..length."""
    q = np.empty(length + 1)
    q[0] = params.p_d
    if length >= 1:
        q[1:] = params.p_t * params.p_r ** np.arange(length)
    return q


def output_length_pmf(params: ChannelParams, n: int, length: int) -> np.ndarray:
    """Law of N_n on 0..length (mass above length is dropped)."""
    q = copy_count_pmf(params, length)
    d = np.zeros(length + 1)
    d[0] = 1.0
    for _ in range(n):
        d = np.convolve(d, q)[: length + 1]
    return d


def length_for_tail(params: ChannelParams, n: int, tail: float, cap: int) -> int:
    """Smallest L <= cap with P(N_n > L) < tail (cap if none)."""
    if params.p_r == 0.0:
        return min(n, cap)
    d = output_length_pmf(params, n, cap)
    c = 1.0 - np.cumsum(d)
    ok = np.nonzero(c < tail)[0]
    return int(ok[0]) if ok.size else cap


# ---------------------------------------------------------------- sampling

@dataclass
class ChannelTrace:
    x: np.ndarray
    z: np.ndarray
    gamma: np.ndarray
    y: np.ndarray
    n: int
    seed: int

    @property
    def output_length(self) -> int:
        return int(self.y.size)

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "n": self.n,
            "x": bits_to_str(self.x),
            "z": [int(v) for v in self.z],
            "y": bits_to_str(self.y),
        })


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; every stochastic routine goes through this."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _gamma_increments(params: ChannelParams, rng: np.random.Generator, size: int) -> np.ndarray:
    stay = rng.random(size) < params.p_r
    jump = rng.geometric(1.0 - params.p_d, size=size)
    return np.where(stay, 0, jump)


def sample_index_path(params: ChannelParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma_1..Gamma_N for an input of length n (first increment >= 1)."""
    first = int(rng.geometric(1.0 - params.p_d))
    if first > n:
        return np.zeros(0, dtype=np.int64)
    mean_out = n * (1.0 - params.p_d) / (1.0 - params.p_r)
    block = int(mean_out * 1.05) + 64
    pieces = [np.array([first], dtype=np.int64)]
    last = first
    while True:
        inc = _gamma_increments(params, rng, block)
        g = last + np.cumsum(inc)
        over = np.nonzero(g > n)[0]
        if over.size:
            pieces.append(g[: over[0]])
            break
        pieces.append(g)
        last = int(g[-1])
    return np.concatenate(pieces)


def sample_trace(params: ChannelParams, x, seed) -> ChannelTrace:
    xb = np.asarray(as_bits(x) if not isinstance(x, np.ndarray) else x, dtype=np.int8)
    n = int(xb.size)
    if n < 1:
        raise DomainError("input must contain at least one bit")
    rng = make_rng(seed)
    gamma = sample_index_path(params, n, rng)
    idx = np.arange(1, gamma.size + 1)
    z = idx - gamma
    y = xb[gamma - 1] if gamma.size else np.zeros(0, dtype=np.int8)
    return ChannelTrace(x=xb, z=z, gamma=gamma, y=y, n=n,
                        seed=int(seed) if not isinstance(seed, np.random.SeedSequence) else -1)


def sample_drift_path(params: ChannelParams, length: int, rng: np.random.Generator) -> np.ndarray:
    """Z_1..Z_length of the free state process (i.i.d. increments from Z_0 = 0)."""
    up = rng.random(length) < params.p_r
    # -l with probability (1 - p_d) p_d^l given a non-up move
    down = rng.geometric(1.0 - params.p_d, size=length) - 1
    return np.cumsum(np.where(up, 1, -down))


def drift_path_log2_prob(params: ChannelParams, z: np.ndarray) -> float:
    """log2 P(Z_1..Z_k = z) for the free state process started at 0."""
    inc = np.diff(np.concatenate(([0], np.asarray(z))))
    up = inc == 1
    ell = -inc[~up]
    out = up.sum() * math.log2(params.p_r) if up.any() else 0.0
    if ell.size:
        out += ell.size * math.log2(params.p_t)
        if ell.sum():
            out += ell.sum() * math.log2(params.p_d)
    return float(out)


def state_block_entropy(params: ChannelParams, n: int) -> float:
    if n < 1:
        raise DomainError("n must be positive")
    p_d, p_r = params.p_d, params.p_r
    return n * (binary_entropy(p_r) + (1.0 - p_r) / (1.0 - p_d) * binary_entropy(p_d))


# ------------------------------------------------------------- exact laws

class OutputLaw(dict):
    """Mapping from output strings ('' is the empty string) to probabilities."""

    def __init__(self, probs: dict, deficit: float, max_len: int):
        super().__init__(probs)
        self.deficit = float(deficit)
        self.max_len = int(max_len)


def _decode_key(key: int) -> str:
    return bin(int(key))[3:]


def dobrushin_law_arrays(params: ChannelParams, x: Sequence[int], max_len: int):
    """Sparse output law of one input via per-symbol fragments.

    Strings are encoded as keys (1 << len) | bits, first bit most significant.
    Returns (keys, lengths, probs) with lengths <= max_len.
    """
    q = copy_count_pmf(params, max_len)
    keys = np.array([1], dtype=np.int64)
    lens = np.array([0], dtype=np.int64)
    probs = np.array([1.0])
    for b in x:
        ks, ls, ps = [], [], []
        for ell in range(max_len + 1):
            if q[ell] == 0.0:
                continue
            keep = lens + ell <= max_len
            if not keep.any():
                break
            fill = ((1 << ell) - 1) if b else 0
            ks.append((keys[keep] << ell) | fill)
            ls.append(lens[keep] + ell)
            ps.append(probs[keep] * q[ell])
        keys = np.concatenate(ks)
        lens = np.concatenate(ls)
        probs = np.concatenate(ps)
        keys, inv = np.unique(keys, return_inverse=True)
        probs = np.bincount(inv, weights=probs, minlength=keys.size)
        lens = np.zeros_like(keys)
        lens[:] = np.floor(np.log2(keys.astype(float))).astype(np.int64)
    return keys, lens, probs


def states_law_dense(params: ChannelParams, x: Sequence[int], max_len: int) -> list[np.ndarray]:
    """Output law by the forward sum over compatible index paths.

    Returns a list whose entry k holds P(Y = y) for every y of length k,
    indexed by the integer value of y (first bit most significant).
    """
    n = len(x)
    xb = np.asarray(x, dtype=np.int64)
    if (1 << max_len) * (n + 1) > DENSE_CELLS_CAP:
        raise SizeError("output-length cap too large for the dense path sum")
    p_d, p_r, p_t = params.p_d, params.p_r, params.p_t
    g = np.arange(n + 1)
    # step weights between index states 1..n (column 0 unused)
    w = np.zeros((n + 1, n + 1))
    for a in range(1, n + 1):
        w[a, a] = p_r
        w[a, a + 1:] = p_t * p_d ** (g[a + 1:] - a - 1)
    stop = np.zeros(n + 1)
    stop[1:] = (1.0 - p_r) * p_d ** (n - g[1:])
    first = np.zeros(n + 1)
    first[1:] = (1.0 - p_d) * p_d ** (g[1:] - 1)

    laws = [np.array([p_d ** n])]
    alpha = np.zeros((1, n + 1))
    alpha[0] = first
    ones = xb == 1
    cols1 = np.nonzero(ones)[0] + 1
    cols0 = np.nonzero(~ones)[0] + 1

    def emit(m: np.ndarray) -> np.ndarray:
        out = np.zeros((2 * m.shape[0], n + 1))
        out[0::2, cols0] = m[:, cols0]
        out[1::2, cols1] = m[:, cols1]
        return out

    alpha = emit(alpha)
    for k in range(1, max_len + 1):
        laws.append(alpha @ stop)
        if k == max_len:
            break
        alpha = emit(alpha @ w)
    return laws


def _default_max_len(params: ChannelParams, n: int, formulation: str) -> int:
    cap = 4 * n + 24
    if formulation == "states":
        # largest L with 2^L (n + 1) cells under the dense cap
        cap = min(cap, int(math.log2(DENSE_CELLS_CAP // (n + 1))))
    return length_for_tail(params, n, 1e-12, cap=cap)


def exact_output_law(params: ChannelParams, x, formulation: str = "dobrushin",
                     max_len: int | None = None) -> OutputLaw:
    """Full output distribution of a short input, truncated at max_len output bits.

    The deficit is the probability of an output longer than max_len (zero for
    the deletion channel once max_len >= |x|).
    """
    xb = as_bits(x)
    n = len(xb)
    if n > EXACT_LAW_CAP:
        raise SizeError(f"|x| = {n} exceeds exact-law cap {EXACT_LAW_CAP}")
    if max_len is None:
        max_len = _default_max_len(params, n, formulation)
    if formulation == "dobrushin":
        keys, _, probs = dobrushin_law_arrays(params, xb, max_len)
        law = {_decode_key(k): float(p) for k, p in zip(keys, probs) if p > 0.0}
    elif formulation == "states":
        laws = states_law_dense(params, xb, max_len)
        law = {}
        for k, arr in enumerate(laws):
            for code in np.nonzero(arr > 0.0)[0]:
                law[format(int(code), f"0{k}b") if k else ""] = float(arr[code])
    else:
        raise DomainError(f"unknown formulation {formulation!r}")
    deficit = max(0.0, 1.0 - math.fsum(law.values()))
    return OutputLaw(law, deficit, max_len)
