"""Stationary Markov-mu input laws on binary sequences.

A context is the integer formed by the last mu bits, most recent bit in the
least significant position. ``transition[c, b]`` is P(next bit = b | c).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core_math import DomainError

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MarkovInputMu:
    mu: int
    transition: np.ndarray

    def __post_init__(self):
        t = np.array(self.transition, dtype=float)
        if t.ndim == 1:
            t = np.stack([1.0 - t, t], axis=1)
        if self.mu < 0 or t.shape != (1 << self.mu, 2):
            raise DomainError(f"transition must be a {1 << max(self.mu, 0)} x 2 table")
        if np.any(t < 0.0) or np.any(t > 1.0) or np.any(np.abs(t.sum(1) - 1.0) > ROW_TOL):
            raise DomainError("transition rows must be probability vectors")
        t = t / t.sum(1, keepdims=True)
        t.setflags(write=False)
        object.__setattr__(self, "transition", t)

    @classmethod
    def iud(cls) -> "MarkovInputMu":
        return cls(0, np.array([[0.5, 0.5]]))

    @classmethod
    def symmetric_markov1(cls, alpha: float) -> "MarkovInputMu":
        """First-order law switching symbols with probability alpha."""
        return cls(1, np.array([[1.0 - alpha, alpha], [alpha, 1.0 - alpha]]))

    @property
    def n_contexts(self) -> int:
        return 1 << self.mu

    @property
    def is_iud(self) -> bool:
        return bool(np.allclose(self.transition, 0.5, atol=0.0, rtol=0.0))

    def is_complement_symmetric(self) -> bool:
        """P(x) = P(complement of x) for every x."""
        flip = self.n_contexts - 1
        t = self.transition
        return all(t[c, 0] == t[c ^ flip, 1] for c in range(self.n_contexts))

    def context_matrix(self) -> np.ndarray:
        """Transition matrix of the context chain (2^mu states)."""
        k = self.n_contexts
        mat = np.zeros((k, k))
        mask = k - 1
        for c in range(k):
            for b in (0, 1):
                mat[c, ((c << 1) | b) & mask] += self.transition[c, b]
        return mat

    def stationary(self) -> np.ndarray:
        k = self.n_contexts
        if k == 1:
            return np.ones(1)
        a = self.context_matrix().T - np.eye(k)
        a[-1, :] = 1.0
        rhs = np.zeros(k)
        rhs[-1] = 1.0
        try:
            pi = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            # reducible context chain: take the long-run average from uniform
            pi = np.full(k, 1.0 / k)
            mat = self.context_matrix()
            acc = np.zeros(k)
            for _ in range(4096):
                acc += pi
                pi = pi @ mat
            pi = acc / acc.sum()
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    def entropy_rate(self) -> float:
        pi = self.stationary()
        t = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(t > 0.0, t * np.log2(t), 0.0).sum(1)
        return float(pi @ h)

    def block_entropy(self, n: int) -> float:
        """H(X_1..X_n) for the stationary process."""
        if n <= 0:
            return 0.0
        if n < self.mu:
            marg = np.zeros(1 << n)
            pi = self.stationary()
            for c in range(self.n_contexts):
                # oldest n bits of the context are the first n emitted
                marg[c >> (self.mu - n)] += pi[c]
            nz = marg[marg > 0.0]
            return float(-(nz * np.log2(nz)).sum())
        pi = self.stationary()
        nz = pi[pi > 0.0]
        head = float(-(nz * np.log2(nz)).sum())
        return head + (n - self.mu) * self.entropy_rate()

    def log2_prob(self, x) -> float:
        x = np.asarray(x, dtype=np.int64)
        n = x.size
        mu = self.mu
        if n < mu:
            head = 0
            for b in x:
                head = (head << 1) | int(b)
            pi = self.stationary()
            tot = float(pi[np.arange(self.n_contexts) >> (mu - n) == head].sum())
            return math.log2(tot) if tot > 0.0 else -math.inf
        ctx = 0
        for b in x[:mu]:
            ctx = (ctx << 1) | int(b)
        p0 = self.stationary()[ctx] if mu else 1.0
        if p0 == 0.0:
            return -math.inf
        out = math.log2(p0)
        mask = self.n_contexts - 1
        for b in x[mu:]:
            q = self.transition[ctx, int(b)]
            if q == 0.0:
                return -math.inf
            out += math.log2(q)
            ctx = ((ctx << 1) | int(b)) & mask
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        out = np.empty(n, dtype=np.int8)
        mu = self.mu
        if mu == 0:
            out[:] = u < self.transition[0, 1]
            return out
        pi = self.stationary()
        head = min(mu, n)
        ctx = int(np.searchsorted(np.cumsum(pi), rng.random() * pi.sum(), side="right"))
        ctx = min(ctx, self.n_contexts - 1)
        for i in range(head):
            out[i] = (ctx >> (mu - 1 - i)) & 1
        p1 = self.transition[:, 1]
        mask = self.n_contexts - 1
        for i in range(head, n):
            b = 1 if u[i] < p1[ctx] else 0
            out[i] = b
            ctx = ((ctx << 1) | b) & mask
        return out

    def to_dict(self) -> dict:
        return {"mu": self.mu, "transition": self.transition.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovInputMu":
        return cls(int(d["mu"]), np.asarray(d["transition"], dtype=float))


def as_input(spec) -> MarkovInputMu:
    if spec is None or (isinstance(spec, str) and spec == "iud"):
        return MarkovInputMu.iud()
    if isinstance(spec, MarkovInputMu):
        return spec
    raise DomainError(f"unknown input law {spec!r}")
