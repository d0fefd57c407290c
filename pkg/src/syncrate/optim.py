"""Markov-input optimisation for the star channel (generalised Blahut-Arimoto).

One iteration:
  1. draw (x, y) of length n under the current input law (in chunks);
  2. run a forward-backward sweep on the (drift, context) trellis to get the
     posterior of every input transition (context at l-1, bit at l) given y;
  3. form the T-values
        T_ij = mean_l [ xi_l(i,j) log2 xi_l(i,j) / (mu_i p_ij)
                        - g_l(i) log2 g_l(i) / mu_i ],
     with g_l(i) = sum_j xi_l(i,j) and mu the stationary context law;
  4. set A_ij = 2^T_ij on the context graph and take the Perron-Frobenius
     re-weighting p_ij = A_ij v_j / (rho v_i);
  5. move half way towards it; if the rate drops, halve the step again
     (up to MAX_HALVINGS times) and stop when no step helps.
Rates are scored with one fixed seed so successive iterates are compared
under common random numbers. With a hidden drift the posterior input
process is not Markov given y, so the re-weighting fixed point is only
close to a stationary point of the rate; the step control keeps the
iteration from drifting past it.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import __version__
from . import _kernels as K
from .channel import ChannelParams, make_params, make_rng
from .core_math import DomainError
from .inputs import MarkovInputMu
from .rates import (DEFAULT_CHUNKS, RateEstimate, make_trellis, markov_rate_estimate,
                    sample_star_stationary)

log = logging.getLogger(__name__)

MIN_N = 10_000
MAX_HIDDEN = 1 << 12
CONVERGENCE_TOL = 1e-4
DAMPING = 0.5
STAT_CHUNK = 20_000
MAX_HALVINGS = 4


@dataclass
class OptimResult:
    input: MarkovInputMu
    rate_trace: list[RateEstimate]
    iterations: int
    converged: bool
    best_index: int = 0
    inputs_trace: list[MarkovInputMu] = field(default_factory=list, repr=False)

    @property
    def best(self) -> RateEstimate:
        return self.rate_trace[self.best_index]

    def to_json(self) -> str:
        return json.dumps({
            "version": __version__,
            "input": self.input.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "best_index": self.best_index,
            "trace": [{"value": r.value, "stderr": r.stderr, "H_Y_hat": r.H_Y_hat,
                       "H_XY_hat": r.H_XY_hat} for r in self.rate_trace],
            "inputs": [law.to_dict() for law in self.inputs_trace],
        })

    def to_csv(self, meta: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# syncrate {__version__}\n")
        for k, v in (meta or {}).items():
            buf.write(f"# {k}={v}\n")
        buf.write("iteration,value,stderr,H_Y_hat,H_XY_hat,transition\n")
        for i, (r, law) in enumerate(zip(self.rate_trace, self.inputs_trace)):
            table = ";".join(f"{v:.10g}" for v in law.transition[:, 1])
            buf.write(f"{i},{r.value!r},{r.stderr!r},{r.H_Y_hat!r},{r.H_XY_hat!r},{table}\n")
        return buf.getvalue()


def _source_posteriors(xi: np.ndarray, mu: int) -> np.ndarray:
    """Collapse trellis contexts (>= 1 bit) to source contexts (mu bits)."""
    if mu >= 1:
        return xi
    return xi.sum(axis=1, keepdims=True)


def t_values(params: ChannelParams, m: int, law: MarkovInputMu, n: int, seed) -> np.ndarray:
    """Monte Carlo T-values of the current input law, shape (2^mu, 2)."""
    trellis = make_trellis(params, m, law)
    ppow = trellis.context_powers()
    a0 = trellis.initial_joint()
    mu_ctx = law.stationary()
    p = law.transition
    k_src = law.n_contexts
    n_chunks = max(1, math.ceil(n / STAT_CHUNK))
    base, extra = divmod(n, n_chunks)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seqs = root.spawn(n_chunks)
    tot = np.zeros((k_src, 2))
    count = 0
    for c, ss in enumerate(seqs):
        length = base + (1 if c < extra else 0)
        rng = make_rng(ss)
        _, y, _ = sample_star_stationary(trellis, length, rng)
        xi, _ = K.gbaa_pair_posteriors(y.astype(np.int8), a0, trellis.star, ppow)
        # positions m < l <= length - m are crossed with probability one
        rows = slice(2 * m + 1, length + 1)
        xs = _source_posteriors(xi[rows], law.mu)
        g = xs.sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(xs > 0.0, xs * np.log2(xs), 0.0)
            b = np.where(g > 0.0, g * np.log2(g), 0.0)
        tot += a.sum(axis=0) / np.where(p > 0.0, mu_ctx[:, None] * p, np.inf)
        tot -= (b.sum(axis=0) / np.where(mu_ctx > 0.0, mu_ctx, np.inf))[:, None]
        count += xs.shape[0]
    return tot / count


def perron_update(law: MarkovInputMu, t: np.ndarray) -> np.ndarray:
    """p_ij = A_ij v_j / (rho v_i) on the context graph with A_ij = 2^T_ij."""
    k = law.n_contexts
    mask = k - 1
    a = np.zeros((k, k))
    ok = np.isfinite(t)
    for c in range(k):
        for b in (0, 1):
            if ok[c, b]:
                a[c, ((c << 1) | b) & mask] += 2.0 ** t[c, b]
    w, v = np.linalg.eig(a)
    idx = int(np.argmax(w.real))
    rho = float(w[idx].real)
    vec = np.abs(v[:, idx].real)
    new = law.transition.copy()
    for c in range(k):
        if not ok[c].all() or vec[c] == 0.0:
            log.warning("context %d has non-finite T-values; row left unchanged", c)
            continue
        for b in (0, 1):
            j = ((c << 1) | b) & mask
            new[c, b] = 2.0 ** t[c, b] * vec[j] / (rho * vec[c])
        new[c] /= new[c].sum()
    return new


def gbaa_optimize(params: ChannelParams, m: int, mu: int, n: int, max_iter: int, seed,
                  init: MarkovInputMu | None = None, eval_n: int | None = None,
                  chunks: int = DEFAULT_CHUNKS, damping: float = DAMPING,
                  tol: float = CONVERGENCE_TOL) -> OptimResult:
    if (2 * m + 1) * (1 << max(1, mu)) > MAX_HIDDEN:
        raise DomainError("trellis too large for the optimiser's memory budget")
    if n < MIN_N:
        raise DomainError(f"n must be at least {MIN_N}")
    law = init if init is not None else MarkovInputMu(mu, np.full((1 << mu, 2), 0.5))
    if law.mu != mu:
        raise DomainError("initial law has the wrong order")
    eval_n = n if eval_n is None else eval_n
    ss = np.random.SeedSequence(seed)
    eval_seed = int(ss.generate_state(1)[0])
    stat_seq = ss.spawn(max_iter)

    def score(q):
        return markov_rate_estimate(params, m, mu, q, eval_n, eval_seed, chunks)

    est = score(law)
    trace: list[RateEstimate] = [est]
    laws: list[MarkovInputMu] = [law]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        t = t_values(params, m, law, n, stat_seq[it - 1])
        proposal = perron_update(law, t)
        step = 1.0 - damping
        accepted = None
        for _ in range(MAX_HALVINGS + 1):
            cand = MarkovInputMu(mu, law.transition + step * (proposal - law.transition))
            cand_est = score(cand)
            if cand_est.value >= est.value:
                accepted = (cand, cand_est)
                break
            step *= damping
        if accepted is None:
            # no step along the re-weighting direction improves the rate
            converged = True
            break
        change = float(np.abs(accepted[0].transition - law.transition).max())
        law, est = accepted
        trace.append(est)
        laws.append(law)
        if change < tol:
            converged = True
            break
    best = int(np.argmax([r.value for r in trace]))
    return OptimResult(input=laws[best], rate_trace=trace, iterations=it, converged=converged,
                       best_index=best, inputs_trace=laws)


def trace_is_monotone(result: OptimResult, k: float = 2.0) -> bool:
    """No iterate falls below its running best by more than k combined stderr."""
    best = -math.inf
    best_se = 0.0
    for r in result.rate_trace:
        if r.value < best - k * math.hypot(r.stderr, best_se):
            return False
        if r.value > best:
            best, best_se = r.value, r.stderr
    return True


class GBAAOptimizer(BaseEstimator):
    """Scikit-learn style wrapper around gbaa_optimize."""

    def __init__(self, p_d=0.0, p_r=0.0, m=1, mu=2, n=100_000, max_iter=20, seed=0,
                 eval_n=None, chunks=DEFAULT_CHUNKS, damping=DAMPING, tol=CONVERGENCE_TOL):
        self.p_d = p_d
        self.p_r = p_r
        self.m = m
        self.mu = mu
        self.n = n
        self.max_iter = max_iter
        self.seed = seed
        self.eval_n = eval_n
        self.chunks = chunks
        self.damping = damping
        self.tol = tol

    def fit(self, X=None, y=None):
        res = gbaa_optimize(make_params(self.p_d, self.p_r), self.m, self.mu, self.n,
                            self.max_iter, self.seed, eval_n=self.eval_n, chunks=self.chunks,
                            damping=self.damping, tol=self.tol)
        self.result_ = res
        self.input_ = res.input
        self.rate_ = res.best.value
        self.stderr_ = res.best.stderr
        return self
