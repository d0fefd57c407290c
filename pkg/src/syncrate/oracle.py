"""Exhaustive small-n mutual information for the true channel and its
finite-state approximations.

All three variants share one recipe: for every input x compute the full
output law P(.|x), accumulate P(y) under the input law, and read off
H(Y), H(Y|X) and I(X;Y). Inputs whose complement has the same probability
are paired, since complementing x complements every output.

The approximating channels are run as dense forward sums over output
prefixes. The drift starts at Z_0 = 0 and the first move is the free
increment conditioned on not being +1 (there is no X_0), then
* dagger: the free walk, emitted through clip(Z) to [-m, m];
* star:   the homogeneous chain on [-m, m].
Either way Gamma_i = i - clipped(Z_i) and the output stops once Gamma
exceeds n, so outputs are at most n + m long and no truncation is needed.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import ChannelParams, dobrushin_law_arrays, length_for_tail
from .core_math import DomainError, SizeError
from .fsc import build_star_fsc
from .inputs import MarkovInputMu, as_input

TRUE_CAP = 10
DAGGER_CAP = 8
STAR_CAP = 12
ACCEPT_DEFICIT = 1e-9
ROUNDOFF = 1e-12
_MERGE_AT = 1 << 22


@dataclass
class ExactMi:
    n: int
    m: int | None
    variant: str
    value: float
    deficit: float
    h_x: float
    h_y: float
    h_y_given_x: float
    params: ChannelParams | None = field(default=None, repr=False)
    max_len: int | None = None

    @property
    def h_xy(self) -> float:
        return self.h_x + self.h_y_given_x

    @property
    def accepted(self) -> bool:
        return self.deficit < ACCEPT_DEFICIT


CSV_COLUMNS = ("n", "m", "variant", "p_d", "p_r", "value", "deficit",
               "H_X", "H_Y", "H_Y_given_X")


def exact_mi_csv(rows: list[ExactMi], meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# syncrate {__version__}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        vals = (r.n, "" if r.m is None else r.m, r.variant, r.params.p_d, r.params.p_r,
                repr(r.value), repr(r.deficit), repr(r.h_x), repr(r.h_y), repr(r.h_y_given_x))
        buf.write(",".join(str(v) for v in vals) + "\n")
    return buf.getvalue()


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def _input_table(law: MarkovInputMu, n: int):
    """All x of length n with P(x) > 0, paired by complement when possible."""
    sym = law.is_complement_symmetric()
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        if sym and bits[0] == 1:
            continue
        lp = law.log2_prob(bits)
        if lp == -math.inf:
            continue
        out.append((bits, 2.0 ** lp))
    return out, sym


def _finish(n, m, variant, params, law, h_y, h_ygx, deficit, max_len=None) -> ExactMi:
    h_x = law.block_entropy(n)
    value = (h_y - h_ygx) / n
    # entropy sums carry ~1e-15 round-off; only that much is absorbed here
    if -ROUNDOFF < value < 0.0:
        value = 0.0
    elif 1.0 < value < 1.0 + ROUNDOFF:
        value = 1.0
    return ExactMi(n=n, m=m, variant=variant, value=value, deficit=deficit, h_x=h_x,
                   h_y=h_y, h_y_given_x=h_ygx, params=params, max_len=max_len)


# ------------------------------------------------------------ true channel

def _complement_keys(keys: np.ndarray) -> np.ndarray:
    lens = np.floor(np.log2(keys.astype(float))).astype(np.int64)
    return keys ^ ((np.int64(1) << lens) - 1)


class _SparseAccumulator:
    def __init__(self):
        self.keys = np.zeros(0, dtype=np.int64)
        self.probs = np.zeros(0)
        self._pk: list[np.ndarray] = []
        self._pp: list[np.ndarray] = []
        self._pending = 0

    def add(self, keys, probs):
        self._pk.append(keys)
        self._pp.append(probs)
        self._pending += keys.size
        if self._pending > _MERGE_AT:
            self._merge()

    def _merge(self):
        if not self._pk:
            return
        k = np.concatenate([self.keys] + self._pk)
        p = np.concatenate([self.probs] + self._pp)
        self.keys, inv = np.unique(k, return_inverse=True)
        self.probs = np.bincount(inv, weights=p, minlength=self.keys.size)
        self._pk, self._pp, self._pending = [], [], 0

    def result(self) -> np.ndarray:
        self._merge()
        return self.probs


def exact_mi_true(params: ChannelParams, n: int, input_law=None,
                  max_len: int | None = None, tail: float = 1e-10) -> ExactMi:
    """I(X_[n]; Y)/n for the true channel; outputs longer than max_len are dropped."""
    if n > TRUE_CAP:
        raise SizeError(f"n = {n} exceeds exact cap {TRUE_CAP}")
    if n < 1:
        raise DomainError("n must be positive")
    law = as_input(input_law)
    if max_len is None:
        max_len = length_for_tail(params, n, tail, cap=4 * n + 40)
    xs, sym = _input_table(law, n)
    acc = _SparseAccumulator()
    h_ygx = 0.0
    deficit = 0.0
    for bits, px in xs:
        keys, _, probs = dobrushin_law_arrays(params, bits, max_len)
        w = 2.0 * px if sym else px
        h_ygx += w * _entropy(probs)
        deficit += w * max(0.0, 1.0 - probs.sum())
        acc.add(keys, px * probs)
        if sym:
            acc.add(_complement_keys(keys), px * probs)
    h_y = _entropy(acc.result())
    return _finish(n, None, "true_drc", params, law, h_y, h_ygx, deficit, max_len)


# ------------------------------------------------------------ clipped families

@dataclass(frozen=True)
class _ClipModel:
    """Finite hidden chain with a clipped drift read-out per state."""
    first: np.ndarray
    trans: np.ndarray
    clipped: np.ndarray
    max_len: int


def _dagger_model(params: ChannelParams, n: int, m: int) -> _ClipModel:
    # free-walk values below `deep` cannot climb back above -m before the
    # output ends, so they are lumped into one absorbing state (index 0)
    top = n + m + 1
    deep = -(n + 2 * m + 2)
    values = np.arange(deep, top + 1)
    values[0] = deep  # lumped state stands for every value <= deep
    k = values.size
    p_d, p_r, p_t = params.p_d, params.p_r, params.p_t
    trans = np.zeros((k, k))
    trans[0, 0] = 1.0
    for s in range(1, k):
        z = values[s]
        if s + 1 < k:
            trans[s, s + 1] = p_r
        else:
            trans[s, s] += p_r  # unreachable in the horizon; keeps rows stochastic
        for t in range(1, s + 1):
            trans[s, t] += p_t * p_d ** (z - values[t])
        trans[s, 0] += (1.0 - p_r) * p_d ** (z - deep)
    first = np.zeros(k)
    for s in range(1, k):
        if values[s] <= 0:
            first[s] = (1.0 - p_d) * p_d ** (-values[s])
    first[0] = max(0.0, 1.0 - first.sum())
    clipped = np.clip(values, -m, m)
    return _ClipModel(first, trans, clipped, n + m)


def _star_model(params: ChannelParams, n: int, m: int) -> _ClipModel:
    model = build_star_fsc(params, m)
    values = np.arange(-m, m + 1)
    first = np.zeros(2 * m + 1)
    if m == 0:
        first[0] = 1.0
    else:
        for z in range(-m + 1, 1):
            first[z + m] = (1.0 - params.p_d) * params.p_d ** (-z)
        first[0] = params.p_d ** m
    return _ClipModel(first, np.array(model.star_matrix), values, n + m)


def clip_output_law(model: _ClipModel, x) -> list[np.ndarray]:
    """Entry k holds P(Y = y) for all y of length k, y read MSB first."""
    x = np.asarray(x, dtype=np.int64)
    n = x.size
    k_states = model.first.size
    laws = [np.zeros(1 << k) for k in range(model.max_len + 1)]
    alpha = None
    for i in range(1, model.max_len + 2):
        pred = model.first[None, :] if i == 1 else alpha @ model.trans
        gamma = i - model.clipped
        live = gamma <= n
        laws[i - 1] += pred[:, ~live].sum(axis=1)
        if not live.any():
            break
        if i > model.max_len:
            raise AssertionError("output exceeded its length bound")
        # states with gamma < 1 are unreachable at step i and carry no mass
        bit = np.zeros(k_states, dtype=np.int64)
        ok = live & (gamma >= 1)
        bit[ok] = x[gamma[ok] - 1]
        nxt = np.zeros((2 * pred.shape[0], k_states))
        c0 = live & (bit == 0)
        c1 = live & (bit == 1)
        nxt[0::2, c0] = pred[:, c0]
        nxt[1::2, c1] = pred[:, c1]
        alpha = nxt
    return laws


def _complement_dense(laws: list[np.ndarray]) -> list[np.ndarray]:
    # complementing y of length k maps index v to 2^k - 1 - v
    return [a[::-1] for a in laws]


def _exact_clip(params, n, m, law, model, variant) -> ExactMi:
    xs, sym = _input_table(law, n)
    acc = [np.zeros(1 << k) for k in range(model.max_len + 1)]
    h_ygx = 0.0
    for bits, px in xs:
        laws = clip_output_law(model, bits)
        flat = np.concatenate(laws)
        h_ygx += (2.0 * px if sym else px) * _entropy(flat)
        for a, l_ in zip(acc, laws):
            a += px * l_
        if sym:
            for a, l_ in zip(acc, _complement_dense(laws)):
                a += px * l_
    h_y = _entropy(np.concatenate(acc))
    return _finish(n, m, variant, params, law, h_y, h_ygx, 0.0, model.max_len)


def exact_mi_dagger(params: ChannelParams, n: int, m: int, input_law=None) -> ExactMi:
    if n > DAGGER_CAP:
        raise SizeError(f"n = {n} exceeds exact cap {DAGGER_CAP}")
    if n < 1 or m < 0:
        raise DomainError("need n >= 1 and m >= 0")
    return _exact_clip(params, n, m, as_input(input_law), _dagger_model(params, n, m), "dagger")


def exact_mi_star(params: ChannelParams, n: int, m: int, input_law=None) -> ExactMi:
    if n > STAR_CAP:
        raise SizeError(f"n = {n} exceeds exact cap {STAR_CAP}")
    if n < 1 or m < 0:
        raise DomainError("need n >= 1 and m >= 0")
    return _exact_clip(params, n, m, as_input(input_law), _star_model(params, n, m), "star")
