"""Compiled inner loops: samplers, forward recursions and the GBAA sweep.

Drift states are indexed s = z + m. A move z -> z' advances the input index
by delta = 1 + z - z', which lies in 0..2m+1. Forward recursions renormalise
every step and return -log2 of the product of normalisers together with the
final normalised state, so a long sequence can be processed piecewise.

``horizon`` > 0 switches on the finite-input mode: states whose index
Gamma = i - z exceeds the horizon are dead (the output has ended).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NEG_INF_LOG = -np.inf


@njit(cache=True)
def _draw(cdf_row, u):
    k = 0
    last = cdf_row.size - 1
    while k < last and u >= cdf_row[k]:
        k += 1
    return k


@njit(cache=True)
def sample_drift_chain(s0, cdf, u):
    """State indices s_1..s_n of the chain with row CDFs `cdf` from s0."""
    n = u.size
    out = np.empty(n, dtype=np.int64)
    s = s0
    for i in range(n):
        s = _draw(cdf[s], u[i])
        out[i] = s
    return out


@njit(cache=True)
def sample_finite_drift(s0, cdf1, cdf, u, m, horizon):
    """Drift indices until Gamma = i - z first exceeds the horizon."""
    out = np.empty(u.size, dtype=np.int64)
    s = s0
    n_out = 0
    for t in range(u.size):
        row = cdf1[s] if t == 0 else cdf[s]
        s = _draw(row, u[t])
        if t + 1 - (s - m) > horizon:
            return out[:n_out], True
        out[n_out] = s
        n_out += 1
    return out[:n_out], False


@njit(cache=True)
def sample_markov_bits(u, p1, ctx0, mu):
    n = u.size
    out = np.empty(n, dtype=np.int8)
    mask = (1 << mu) - 1
    ctx = ctx0
    for i in range(n):
        b = 1 if u[i] < p1[ctx] else 0
        out[i] = b
        ctx = ((ctx << 1) | b) & mask
    return out


@njit(cache=True)
def fwd_joint(y, x, xoff, alpha0, t1, t, i0, horizon):
    """-log2 P(y | x): drift-only trellis, emission 1{y_i = x[Gamma_i]}."""
    s_n = t.shape[0]
    m = (s_n - 1) // 2
    alpha = alpha0.copy()
    new = np.empty(s_n)
    acc = 0.0
    for k in range(y.size):
        i = i0 + k
        tm = t1 if k == 0 else t
        for sp in range(s_n):
            g = i - (sp - m)
            idx = g + xoff
            new[sp] = 0.0
            if horizon > 0 and g > horizon:
                continue
            if idx < 0 or idx >= x.size or x[idx] != y[k]:
                continue
            v = 0.0
            for s in range(s_n):
                v += alpha[s] * tm[s, sp]
            new[sp] = v
        c = new.sum()
        if c <= 0.0:
            return np.inf, alpha
        acc += math.log2(c)
        for s in range(s_n):
            alpha[s] = new[s] / c
    return -acc, alpha


@njit(cache=True)
def fwd_iud(y, yprev, alpha0, t1, t, i0, horizon):
    """-log2 P(y) for i.u.d. input: a fresh index emits a fair bit, a repeated
    index repeats the previous output bit. yprev < 0 means unknown."""
    s_n = t.shape[0]
    m = (s_n - 1) // 2
    alpha = alpha0.copy()
    new = np.empty(s_n)
    acc = 0.0
    prev = yprev
    for k in range(y.size):
        i = i0 + k
        tm = t1 if k == 0 else t
        same = 0.5 if prev < 0 else (1.0 if y[k] == prev else 0.0)
        for sp in range(s_n):
            new[sp] = 0.0
            if horizon > 0 and i - (sp - m) > horizon:
                continue
            v = 0.0
            for s in range(s_n):
                w = alpha[s] * tm[s, sp]
                if w == 0.0:
                    continue
                # delta = 1 + z - z' is zero only for the up-move
                v += w * (same if sp == s + 1 else 0.5)
            new[sp] = v
        c = new.sum()
        if c <= 0.0:
            return np.inf, alpha
        acc += math.log2(c)
        for s in range(s_n):
            alpha[s] = new[s] / c
        prev = y[k]
    return -acc, alpha


@njit(cache=True)
def fwd_markov(y, alpha0, t1, t, ppow, i0, horizon):
    """-log2 P(y) for a Markov input; hidden state (drift, context at Gamma).

    ppow[d] is the d-step context transition matrix; the context's least
    significant bit is the input bit at Gamma, which must equal the output.
    """
    s_n = t.shape[0]
    k_n = alpha0.shape[1]
    m = (s_n - 1) // 2
    alpha = alpha0.copy()
    new = np.empty((s_n, k_n))
    acc = 0.0
    for k in range(y.size):
        i = i0 + k
        tm = t1 if k == 0 else t
        yb = y[k]
        new[:, :] = 0.0
        for sp in range(s_n):
            if horizon > 0 and i - (sp - m) > horizon:
                continue
            for s in range(s_n):
                w = tm[s, sp]
                if w == 0.0:
                    continue
                p = ppow[1 + s - sp]
                for c in range(k_n):
                    a = alpha[s, c] * w
                    if a == 0.0:
                        continue
                    for cp in range(yb, k_n, 2):
                        new[sp, cp] += a * p[c, cp]
        c_sum = new.sum()
        if c_sum <= 0.0:
            return np.inf, alpha
        acc += math.log2(c_sum)
        alpha[:, :] = new / c_sum
    return -acc, alpha


@njit(cache=True)
def gbaa_pair_posteriors(y, alpha0, t, ppow):
    """Posterior P(context at l-1 = a, x_l = b | y) for every input position.

    Row r of the result is position l = r - m (positions 1-m .. n+m+1).
    Returns (xi, neglog2 P(y)).
    """
    s_n = t.shape[0]
    k_n = alpha0.shape[1]
    m = (s_n - 1) // 2
    n = y.size
    d_n = ppow.shape[0]
    mask = k_n - 1
    fw = np.empty((n + 1, s_n, k_n))
    scale = np.empty(n + 1)
    fw[0] = alpha0
    scale[0] = 1.0
    acc = 0.0
    for k in range(n):
        yb = y[k]
        cur = fw[k + 1]
        cur[:, :] = 0.0
        for sp in range(s_n):
            for s in range(s_n):
                w = t[s, sp]
                if w == 0.0:
                    continue
                p = ppow[1 + s - sp]
                for c in range(k_n):
                    a = fw[k, s, c] * w
                    if a == 0.0:
                        continue
                    for cp in range(yb, k_n, 2):
                        cur[sp, cp] += a * p[c, cp]
        c_sum = cur.sum()
        scale[k + 1] = c_sum
        acc += math.log2(c_sum)
        cur /= c_sum

    xi = np.zeros((n + 2 * m + 2, k_n, 2))
    beta = np.ones((s_n, k_n))
    eb = np.empty((s_n, k_n))
    right = np.empty((d_n, s_n, k_n))
    left = np.empty((d_n, k_n))
    wvec = np.empty(k_n)
    p1 = ppow[1]
    for k in range(n, 0, -1):
        yb = y[k - 1]
        # e * beta at step k
        for sp in range(s_n):
            for c in range(k_n):
                eb[sp, c] = beta[sp, c] if (c & 1) == yb else 0.0
        # right[r, s', j] = sum_c P^r[j, c] eb[s', c]
        for r in range(d_n):
            pr = ppow[r]
            for sp in range(s_n):
                for j in range(k_n):
                    v = 0.0
                    for c in range(k_n):
                        v += pr[j, c] * eb[sp, c]
                    right[r, sp, j] = v
        inv = 1.0 / scale[k]
        for s in range(s_n):
            # left[q, a] = sum_c fw[k-1, s, c] P^q[c, a]
            for q in range(d_n - 1):
                pq = ppow[q]
                for a in range(k_n):
                    v = 0.0
                    for c in range(k_n):
                        v += fw[k - 1, s, c] * pq[c, a]
                    left[q, a] = v
            for q in range(d_n - 1):
                # position crossed q steps after Gamma_{k-1} = (k-1) - z
                row = (k - 1) - (s - m) + q + 1 + m
                for j in range(k_n):
                    wvec[j] = 0.0
                have = False
                for sp in range(s_n):
                    dl = 1 + s - sp
                    if dl < q + 1:
                        continue
                    w = t[s, sp]
                    if w == 0.0:
                        continue
                    have = True
                    for j in range(k_n):
                        wvec[j] += w * right[dl - q - 1, sp, j]
                if not have:
                    continue
                for a in range(k_n):
                    la = left[q, a] * inv
                    if la == 0.0:
                        continue
                    for b in range(2):
                        j = ((a << 1) | b) & mask
                        xi[row, a, b] += la * p1[a, j] * wvec[j]
        # beta at step k-1
        nb = np.zeros((s_n, k_n))
        for s in range(s_n):
            for sp in range(s_n):
                w = t[s, sp]
                if w == 0.0:
                    continue
                p = ppow[1 + s - sp]
                for c in range(k_n):
                    v = 0.0
                    for cp in range(k_n):
                        v += p[c, cp] * eb[sp, cp]
                    nb[s, c] += w * v
        beta = nb * inv
    return xi, -acc


@njit(cache=True)
def h_im_counts(i, length):
    """Sum over (x, y) of -sum_k N_k log2(N_k / W), where N_k counts the ways
    to obtain y (length i-1) from x (length `length`) by deletions with the
    first kept bit at position k, and W = sum_k N_k. x runs over half the
    inputs; complement symmetry doubles the total."""
    ly = i - 1
    cnt = np.zeros((ly + 1, length + 1))
    total = 0.0
    xb = np.empty(length, dtype=np.int64)
    yb = np.empty(ly, dtype=np.int64)
    for x in range(1 << (length - 1)):
        for k in range(length):
            xb[k] = (x >> (length - 1 - k)) & 1
        for y in range(1 << ly):
            for j in range(ly):
                yb[j] = (y >> (ly - 1 - j)) & 1
            # cnt[j, k]: embeddings of y[j:] into x[k:]
            for k in range(length + 1):
                cnt[ly, k] = 1.0
            for j in range(ly - 1, -1, -1):
                cnt[j, length] = 0.0
                for k in range(length - 1, -1, -1):
                    v = cnt[j, k + 1]
                    if xb[k] == yb[j]:
                        v += cnt[j + 1, k + 1]
                    cnt[j, k] = v
            w = cnt[0, 0]
            if w == 0.0:
                continue
            for k in range(length):
                if xb[k] == yb[0]:
                    nk = cnt[1, k + 1]
                    if nk > 0.0:
                        total -= nk * math.log2(nk / w)
    return 2.0 * total
