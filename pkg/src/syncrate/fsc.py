"""Finite-state approximations of the drift process.

Two families are built around a clip radius m:

* dagger: the drift Z_i clipped element-wise to [-m, m]. The clipped process
  is Markov but time-inhomogeneous; its boundary rows depend on the marginal
  of the free walk at the previous step.
* star: a homogeneous chain on [-m, m] whose interior rows are those of the
  free walk (mass below -m lumped on -m) and whose boundary rows are fixed.

States are stored in arrays indexed by z + m.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, drift_moments
from .core_math import DomainError, ReducibleChainError, UndefinedConditionalError
from .sequences import as_bits

STATIONARY_RESIDUAL = 1e-12


@dataclass(frozen=True)
class FscModel:
    params: ChannelParams
    m: int
    variant: str
    star_matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def drift_states(self) -> range:
        return range(-self.m, self.m + 1)

    @property
    def n_states(self) -> int:
        return 2 * self.m + 1


@dataclass(frozen=True)
class CausalState:
    """Input window X_{i-2m..i-1} together with the shifted drift in [0, 2m]."""
    window: tuple
    drift: int

    def __post_init__(self):
        bits = as_bits(self.window)
        object.__setattr__(self, "window", bits)
        if len(bits) % 2:
            raise DomainError("window length must be even (2m)")
        if not 0 <= self.drift <= len(bits):
            raise DomainError(f"shifted drift {self.drift} outside [0, {len(bits)}]")

    @property
    def m(self) -> int:
        return len(self.window) // 2


def _interior_row(params: ChannelParams, m: int, j: int) -> np.ndarray:
    p_d, p_r, p_t = params.p_d, params.p_r, params.p_t
    row = np.zeros(2 * m + 1)
    row[j + 1 + m] = p_r
    for k in range(-m + 1, j + 1):
        row[k + m] = p_t * p_d ** (j - k)
    row[0] += (1.0 - p_r) * p_d ** (j + m)
    return row


def _upper_row(params: ChannelParams, m: int, pbar: float) -> np.ndarray:
    """Row from +m when the excess above m contributes E[p_d^l] = pbar."""
    p_d, p_r, p_t = params.p_d, params.p_r, params.p_t
    row = np.zeros(2 * m + 1)
    row[2 * m] = 1.0 - (1.0 - p_r) * p_d * pbar
    for k in range(-m + 1, m):
        row[k + m] = p_t * p_d ** (m - k) * pbar
    row[0] = (1.0 - p_r) * p_d ** (2 * m) * pbar
    return row


def _lower_row(params: ChannelParams, m: int, plow: float) -> np.ndarray:
    row = np.zeros(2 * m + 1)
    row[1] = params.p_r * plow
    row[0] = 1.0 - row[1]
    return row


def build_star_fsc(params: ChannelParams, m: int) -> FscModel:
    if m < 0:
        raise DomainError("clip radius must be non-negative")
    if m == 0:
        mat = np.ones((1, 1))
    else:
        mat = np.empty((2 * m + 1, 2 * m + 1))
        mat[0] = _lower_row(params, m, 1.0)
        for j in range(-m + 1, m):
            mat[j + m] = _interior_row(params, m, j)
        mat[2 * m] = _upper_row(params, m, 1.0)
    mat.setflags(write=False)
    return FscModel(params=params, m=m, variant="star", star_matrix=mat)


def build_dagger_fsc(params: ChannelParams, m: int) -> FscModel:
    if m < 0:
        raise DomainError("clip radius must be non-negative")
    return FscModel(params=params, m=m, variant="dagger")


def clip_drift_path(z, m: int) -> np.ndarray:
    if m < 0:
        raise DomainError("clip radius must be non-negative")
    return np.clip(np.asarray(z, dtype=np.int64), -m, m)


# ------------------------------------------------------------ free walk law

@dataclass(frozen=True)
class ZMarginal:
    """Law of Z_n on floor..n; mass below floor is `deficit`."""
    n: int
    floor: int
    probs: np.ndarray
    deficit: float

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.floor, self.floor + self.probs.size)

    def prob(self, z: int) -> float:
        k = z - self.floor
        return float(self.probs[k]) if 0 <= k < self.probs.size else 0.0

    def prob_le(self, z: int) -> float:
        k = z - self.floor
        if k < 0:
            return self.deficit if z == self.floor - 1 else float("nan")
        return float(self.probs[: k + 1].sum()) + self.deficit

    def prob_ge(self, z: int) -> float:
        k = max(z - self.floor, 0)
        return float(self.probs[k:].sum())

    def mean(self) -> float:
        return float(self.support @ self.probs / self.probs.sum())

    def var(self) -> float:
        w = self.probs / self.probs.sum()
        mu = self.support @ w
        return float(((self.support - mu) ** 2) @ w)


def default_floor(params: ChannelParams, n: int) -> int:
    mom = drift_moments(params)
    spread = 12.0 * math.sqrt(max(n, 1) * mom.nu_sq)
    tail = 20.0 / math.log(1.0 / params.p_d) if params.p_d > 0.0 else 0.0
    return min(-1, int(math.floor(n * mom.chi - spread - tail)))


def z_marginal(params: ChannelParams, n: int, floor: int | None = None) -> ZMarginal:
    """Exact law of the free Z_n by repeated convolution of the increment pmf."""
    if n < 0:
        raise DomainError("n must be non-negative")
    if floor is None:
        floor = default_floor(params, n)
    floor = min(int(floor), 0)
    size = n - floor + 1
    # kern[t] = P(increment = t - (size - 1)), t = 0..size
    kern = np.empty(size + 1)
    kern[size] = params.p_r
    kern[:size] = (params.p_t * params.p_d ** np.arange(size))[::-1]
    dist = np.zeros(size)
    dist[-floor] = 1.0
    deficit = 0.0
    for _ in range(n):
        full = np.convolve(dist, kern)
        deficit += full[: size - 1].sum()
        dist = full[size - 1: 2 * size - 1].copy()
    return ZMarginal(n=n, floor=floor, probs=dist, deficit=float(deficit))


# ------------------------------------------------------------ dagger rows

def _marginal(params, i_prev, cache):
    if cache is None:
        return z_marginal(params, i_prev)
    if i_prev not in cache:
        cache[i_prev] = z_marginal(params, i_prev)
    return cache[i_prev]


def dagger_row(params: ChannelParams, m: int, i: int, frm: int,
               z_marg_cache: dict | None = None) -> np.ndarray:
    """P(Z_i^(m) = . | Z_{i-1}^(m) = frm) over -m..m."""
    if m < 0 or abs(frm) > m:
        raise DomainError(f"state {frm} outside [-{m}, {m}]")
    if i < 1:
        raise DomainError("time index starts at 1")
    if m == 0:
        return np.ones(1)
    if -m < frm < m:
        return _interior_row(params, m, frm)
    zm = _marginal(params, i - 1, z_marg_cache)
    if frm == -m:
        den = zm.prob_le(-m)
        if not den > 0.0:
            raise UndefinedConditionalError(f"P(Z_{i - 1} <= -{m}) = 0")
        return _lower_row(params, m, zm.prob(-m) / den)
    den = zm.prob_ge(m)
    if not den > 0.0:
        raise UndefinedConditionalError(f"P(Z_{i - 1} >= {m}) = 0")
    excess = zm.probs[m - zm.floor:]
    pbar = float(excess @ params.p_d ** np.arange(excess.size)) / den
    return _upper_row(params, m, pbar)


def dagger_transition_pmf(params: ChannelParams, m: int, i: int, frm: int, to: int,
                          z_marg_cache: dict | None = None) -> float:
    if abs(to) > m:
        raise DomainError(f"state {to} outside [-{m}, {m}]")
    return float(dagger_row(params, m, i, frm, z_marg_cache)[to + m])


# ------------------------------------------------------------ star checks

def _require_star(model: FscModel):
    if model.variant != "star" or model.star_matrix is None:
        raise DomainError("operation needs a star model")


def check_indecomposable(model: FscModel, horizon: int | None = None) -> bool:
    """True iff some power k <= horizon of the drift matrix is entrywise positive."""
    _require_star(model)
    if model.m == 0:
        return True
    if horizon is None:
        horizon = 4 * model.m + 4
    pattern = (model.star_matrix > 0.0).astype(np.int64)
    acc = pattern.copy()
    for _ in range(horizon):
        if acc.all():
            return True
        acc = np.minimum(acc @ pattern, 1)
    return bool(acc.all())


def star_stationary(model: FscModel) -> np.ndarray:
    _require_star(model)
    if not check_indecomposable(model):
        raise ReducibleChainError("drift chain has no unique stationary law")
    t = model.star_matrix
    k = t.shape[0]
    a = t.T - np.eye(k)
    a[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    pi = np.linalg.solve(a, rhs)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    for _ in range(10_000):
        nxt = pi @ t
        res = np.abs(nxt - pi).sum()
        pi = nxt / nxt.sum()
        if res < STATIONARY_RESIDUAL:
            break
    return pi


def star_matrix_csv(model: FscModel) -> str:
    """Row-major CSV of the drift matrix; header row carries the drift labels."""
    _require_star(model)
    buf = io.StringIO()
    labels = [str(z) for z in model.drift_states]
    buf.write("from," + ",".join(labels) + "\n")
    for z, row in zip(labels, model.star_matrix):
        buf.write(z + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
