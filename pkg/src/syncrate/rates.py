"""Monte Carlo information rates of the star channel via forward recursions.

Stationary mode (the default): the input is a stationary Markov sequence on
positions -m..n+m, the drift starts from the stationary law of the star chain
and the channel emits exactly n outputs Y_i = X_{i - Z_i}. The estimate is

    I = H_X + H_Y_hat - H_XY_hat,
    H_Y_hat  = -(1/n) log2 P(y),
    H_XY_hat = H_X - (1/n) log2 P(y | x),

averaged over independent chunks, each with its own seed stream.

Finite mode (``horizon``): n input bits, drift from Z_0 = 0 with the first
move conditioned on not being +1, output until the index passes n. Its
expectations are the exact small-n values of the star channel.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import __version__
from . import _kernels as K
from .channel import ChannelParams, make_params, make_rng
from .core_math import DomainError, ReducibleChainError
from .fsc import build_star_fsc, check_indecomposable, star_stationary
from .inputs import MarkovInputMu, as_input

MIN_STATIONARY_N = 1000
DEFAULT_CHUNKS = 50


@dataclass(frozen=True, eq=False)
class TrellisSpec:
    params: ChannelParams
    m: int
    input_law: MarkovInputMu
    horizon: int = 0
    star: np.ndarray = field(init=False, repr=False)
    pi0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        model = build_star_fsc(self.params, self.m)
        object.__setattr__(self, "star", np.ascontiguousarray(model.star_matrix))
        if check_indecomposable(model):
            pi = star_stationary(model)
        else:
            # no unique stationary law; start synchronised
            pi = np.zeros(2 * self.m + 1)
            pi[self.m] = 1.0
        object.__setattr__(self, "pi0", pi)

    @property
    def n_drift(self) -> int:
        return 2 * self.m + 1

    @property
    def n_context(self) -> int:
        return 1 << max(1, self.input_law.mu)

    @property
    def n_hidden(self) -> int:
        return self.n_drift * self.n_context

    @property
    def emission_rule(self) -> str:
        return "y_i equals the input bit at Gamma_i = i - z_i (last bit of the context)"

    @property
    def drift_only(self) -> bool:
        return self.input_law.is_iud

    def first_matrix(self) -> np.ndarray:
        """Transition used at step 1: the star matrix, or in finite mode the
        free first move from 0 (no up-move), clipped at -m."""
        if not self.horizon:
            return self.star
        m = self.m
        t1 = np.zeros_like(self.star)
        if m == 0:
            t1[0, 0] = 1.0
            return t1
        p_d = self.params.p_d
        for z in range(-m + 1, 1):
            t1[m, z + m] = (1.0 - p_d) * p_d ** (-z)
        t1[m, 0] = p_d ** m
        return t1

    def trellis_input_law(self) -> MarkovInputMu:
        """The input law written over max(1, mu)-bit contexts."""
        law = self.input_law
        if law.mu >= 1:
            return law
        q = law.transition[0]
        return MarkovInputMu(1, np.array([q, q]))

    def context_powers(self) -> np.ndarray:
        pmat = self.trellis_input_law().context_matrix()
        out = np.empty((2 * self.m + 2,) + pmat.shape)
        out[0] = np.eye(pmat.shape[0])
        for d in range(1, out.shape[0]):
            out[d] = out[d - 1] @ pmat
        return out

    def initial_drift(self) -> np.ndarray:
        if self.horizon:
            a = np.zeros(self.n_drift)
            a[self.m] = 1.0
            return a
        return self.pi0

    def initial_joint(self) -> np.ndarray:
        ctx = self.trellis_input_law().stationary()
        return np.outer(self.initial_drift(), ctx)


def make_trellis(params: ChannelParams, m: int, input_law=None, horizon: int = 0) -> TrellisSpec:
    if m < 0:
        raise DomainError("m must be non-negative")
    return TrellisSpec(params, m, as_input(input_law), int(horizon))


def _bits(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.int8))


def forward_neglog_prob(trellis: TrellisSpec, y, x=None, pi0=None, per_symbol: bool = True,
                        x_offset: int | None = None) -> float:
    """-log2 P(y) or, when x is given, -log2 P(y | x) under the trellis.

    In stationary mode x covers input positions -m..n+m (x[0] is position -m)
    unless x_offset says otherwise; in finite mode x is X_1..X_n.
    """
    y = _bits(y)
    n = y.size
    t = trellis.star
    t1 = trellis.first_matrix()
    hz = trellis.horizon
    if x is not None:
        xb = _bits(x)
        off = (trellis.m if not hz else -1) if x_offset is None else x_offset
        a0 = trellis.initial_drift() if pi0 is None else np.asarray(pi0, dtype=float)
        val, alpha = K.fwd_joint(y, xb, off, a0, t1, t, 1, hz)
        if hz and np.isfinite(val):
            val -= math.log2(_stop_prob(trellis, alpha, n))
    elif trellis.drift_only:
        a0 = trellis.initial_drift() if pi0 is None else np.asarray(pi0, dtype=float)
        val, alpha = K.fwd_iud(y, -1, a0, t1, t, 1, hz)
        if hz and np.isfinite(val):
            val -= math.log2(_stop_prob(trellis, alpha, n))
    else:
        a0 = trellis.initial_joint() if pi0 is None else np.asarray(pi0, dtype=float)
        val, alpha = K.fwd_markov(y, a0, t1, t, trellis.context_powers(), 1, hz)
        if hz and np.isfinite(val):
            val -= math.log2(_stop_prob(trellis, alpha.sum(axis=1), n))
    if per_symbol:
        denom = trellis.horizon if hz else n
        return float(val) / denom
    return float(val)


def _stop_prob(trellis: TrellisSpec, alpha_z: np.ndarray, n_out: int) -> float:
    """P(index passes the horizon at step n_out + 1 | state after n_out steps)."""
    tm = trellis.first_matrix() if n_out == 0 else trellis.star
    if n_out == 0:
        alpha_z = trellis.initial_drift()
    zs = np.arange(-trellis.m, trellis.m + 1)
    dead = (n_out + 1 - zs) > trellis.horizon
    return float(alpha_z @ tm[:, dead].sum(axis=1))


# ------------------------------------------------------------ sampling

def _cdf(mat: np.ndarray) -> np.ndarray:
    c = np.cumsum(mat, axis=1)
    c[:, -1] = 1.0
    return c


def _sample_input(law: MarkovInputMu, n: int, rng: np.random.Generator) -> np.ndarray:
    if law.mu == 0:
        return (rng.random(n) < law.transition[0, 1]).astype(np.int8)
    pi = law.stationary()
    ctx = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
    ctx = min(ctx, law.n_contexts - 1)
    head = np.array([(ctx >> (law.mu - 1 - i)) & 1 for i in range(law.mu)], dtype=np.int8)
    if n <= law.mu:
        return head[:n]
    tail = K.sample_markov_bits(rng.random(n - law.mu), np.ascontiguousarray(law.transition[:, 1]),
                                ctx, law.mu)
    return np.concatenate([head, tail])


def sample_star_stationary(trellis: TrellisSpec, n: int, rng: np.random.Generator):
    """Input on positions -m..n+m and the n outputs of the stationary star channel."""
    m = trellis.m
    x = _sample_input(trellis.input_law, n + 2 * m + 1, rng)
    pi = trellis.pi0
    s0 = int(np.searchsorted(np.cumsum(pi), rng.random() * pi.sum(), side="right"))
    s0 = min(s0, 2 * m)
    s = K.sample_drift_chain(s0, _cdf(trellis.star), rng.random(n))
    z = s - m
    gamma = np.arange(1, n + 1) - z
    y = x[gamma + m]
    return x, y, z


def sample_star_finite(trellis: TrellisSpec, rng: np.random.Generator):
    """(x, y) for the finite-input star channel with n = trellis.horizon."""
    n, m = trellis.horizon, trellis.m
    x = _sample_input(trellis.input_law, n, rng)
    budget = n + m + 2
    s, ended = K.sample_finite_drift(m, _cdf(trellis.first_matrix()), _cdf(trellis.star),
                                     rng.random(budget), m, n)
    if not ended:
        raise AssertionError("finite star output did not terminate")
    gamma = np.arange(1, s.size + 1) - (s - m)
    y = x[gamma - 1]
    return x, y


# ------------------------------------------------------------ estimates

@dataclass
class RateEstimate:
    value: float
    n: int
    m: int
    seed: int | None
    stderr: float
    H_X: float
    H_Y_hat: float
    H_XY_hat: float
    params: ChannelParams | None = field(default=None, repr=False)
    mu: int = 0
    chunk_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def components(self) -> dict:
        return {"H_X": self.H_X, "H_Y_hat": self.H_Y_hat, "H_XY_hat": self.H_XY_hat}


CSV_COLUMNS = ("p_d", "p_r", "m", "mu", "n", "seed", "value", "stderr", "H_Y_hat", "H_XY_hat")


def rate_csv_rows(rows: list[RateEstimate], meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# syncrate {__version__}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        vals = (r.params.p_d, r.params.p_r, r.m, r.mu, r.n, r.seed, repr(r.value),
                repr(r.stderr), repr(r.H_Y_hat), repr(r.H_XY_hat))
        buf.write(",".join(str(v) for v in vals) + "\n")
    return buf.getvalue()


def _chunk_lengths(n: int, chunks: int) -> list[int]:
    base, extra = divmod(n, chunks)
    return [base + (1 if i < extra else 0) for i in range(chunks)]


def _chunk_terms(trellis: TrellisSpec, length: int, seed_seq: np.random.SeedSequence):
    rng = make_rng(seed_seq)
    x, y, _ = sample_star_stationary(trellis, length, rng)
    hy = forward_neglog_prob(trellis, y, per_symbol=False)
    hygx = forward_neglog_prob(trellis, y, x=x, per_symbol=False)
    return hy, hygx


def _estimate(trellis: TrellisSpec, n: int, seed, chunks: int) -> RateEstimate:
    if n < MIN_STATIONARY_N:
        raise DomainError(f"n must be at least {MIN_STATIONARY_N} for the stationary estimate")
    if chunks < 2:
        raise DomainError("need at least two chunks for a standard error")
    lens = _chunk_lengths(n, chunks)
    seqs = np.random.SeedSequence(seed).spawn(chunks)
    hy = np.empty(chunks)
    hygx = np.empty(chunks)
    for c, (ln, ss) in enumerate(zip(lens, seqs)):
        hy[c], hygx[c] = _chunk_terms(trellis, ln, ss)
    w = np.asarray(lens, dtype=float)
    per_hy = hy / w
    per_i = (hy - hygx) / w
    value = float((hy - hygx).sum() / w.sum())
    h_y = float(hy.sum() / w.sum())
    h_x = trellis.input_law.entropy_rate()
    h_xy = h_x + float(hygx.sum() / w.sum())
    stderr = float(per_i.std(ddof=1) / math.sqrt(chunks))
    if not stderr > 0.0:
        # a noiseless channel gives identical chunks; report the float floor
        stderr = float(np.finfo(float).eps * max(1.0, abs(value)))
    return RateEstimate(value=value, n=n, m=trellis.m, seed=seed, stderr=stderr, H_X=h_x,
                        H_Y_hat=h_y, H_XY_hat=h_xy, params=trellis.params,
                        mu=trellis.input_law.mu, chunk_values=per_i)


def sir_estimate(params: ChannelParams, m: int, n: int, seed, chunks: int = DEFAULT_CHUNKS) -> RateEstimate:
    return _estimate(make_trellis(params, m), n, seed, chunks)


def markov_rate_estimate(params: ChannelParams, m: int, mu: int, transition, n: int, seed,
                         chunks: int = DEFAULT_CHUNKS) -> RateEstimate:
    law = transition if isinstance(transition, MarkovInputMu) else MarkovInputMu(mu, np.asarray(transition))
    if law.mu != mu:
        raise DomainError(f"input law has order {law.mu}, expected {mu}")
    return _estimate(make_trellis(params, m, law), n, seed, chunks)


@dataclass
class FiniteSample:
    """Per-replication -log2 P(y) and -log2 P(x, y) for the finite star channel."""
    neglog_y: np.ndarray
    neglog_xy: np.ndarray

    def mean_se(self, which: str) -> tuple[float, float]:
        v = self.neglog_y if which == "y" else self.neglog_xy
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def finite_horizon_sample(params: ChannelParams, m: int, n: int, reps: int, seed,
                          input_law=None) -> FiniteSample:
    """Replicated (x, y) draws at input length n with exact log-probabilities."""
    trellis = make_trellis(params, m, input_law, horizon=n)
    rng = make_rng(seed)
    law = trellis.input_law
    ny = np.empty(reps)
    nxy = np.empty(reps)
    for r in range(reps):
        x, y = sample_star_finite(trellis, rng)
        ny[r] = forward_neglog_prob(trellis, y, per_symbol=False)
        nxy[r] = forward_neglog_prob(trellis, y, x=x, per_symbol=False) - law.log2_prob(x)
    return FiniteSample(ny, nxy)


# ------------------------------------------------------------ estimators

class SIREstimator(BaseEstimator):
    """Symmetric information rate of the star channel at clip radius m."""

    def __init__(self, p_d=0.0, p_r=0.0, m=1, n=500_000, seed=0, chunks=DEFAULT_CHUNKS):
        self.p_d = p_d
        self.p_r = p_r
        self.m = m
        self.n = n
        self.seed = seed
        self.chunks = chunks

    def fit(self, X=None, y=None):
        est = sir_estimate(make_params(self.p_d, self.p_r), self.m, self.n, self.seed, self.chunks)
        self.estimate_ = est
        self.rate_ = est.value
        self.stderr_ = est.stderr
        return self


class MarkovRateEstimator(BaseEstimator):
    """Information rate of the star channel under a fixed Markov-mu input."""

    def __init__(self, p_d=0.0, p_r=0.0, m=1, mu=1, transition=None, n=500_000, seed=0,
                 chunks=DEFAULT_CHUNKS):
        self.p_d = p_d
        self.p_r = p_r
        self.m = m
        self.mu = mu
        self.transition = transition
        self.n = n
        self.seed = seed
        self.chunks = chunks

    def fit(self, X=None, y=None):
        trans = self.transition
        if trans is None:
            trans = np.full((1 << self.mu, 2), 0.5)
        est = markov_rate_estimate(make_params(self.p_d, self.p_r), self.m, self.mu, trans,
                                   self.n, self.seed, self.chunks)
        self.estimate_ = est
        self.rate_ = est.value
        self.stderr_ = est.stderr
        return self
