"""Desk-scale invariant checks, shared by the CLI ``verify`` command.

Each check returns a CheckResult; ``hard`` checks make the run fail, soft
ones (conjectures, measured-only properties) are reported but never fail.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as B
from .core_math import LOG2E, binom, exp_integral_ei
from .channel import (drift_moments, exact_output_law, make_params, make_rng, sample_trace,
                      state_block_entropy, sample_drift_path, drift_path_log2_prob)
from .fsc import (build_star_fsc, check_indecomposable, clip_drift_path, dagger_row,
                  star_stationary, z_marginal)
from .oracle import exact_mi_dagger, exact_mi_star, exact_mi_true
from .inputs import MarkovInputMu
from .rates import finite_horizon_sample, forward_neglog_prob, make_trellis, sample_star_stationary, sir_estimate
from .sequences import subsequence_weight, subsequence_weight_brute


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    hard: bool = True


def _check(name: str, hard: bool = True):
    def deco(fn: Callable[[], tuple[bool, str]]):
        fn.check_name = name
        fn.hard = hard
        REGISTRY.append(fn)
        return fn
    return deco


REGISTRY: list[Callable] = []


@_check("binary entropy symmetry and peak")
def _h2():
    xs = np.linspace(0, 1, 101)
    ok = np.allclose(B.h2(xs), B.h2(1 - xs), atol=1e-15) and B.h2(0.5) == 1.0
    return ok, "h2(x) = h2(1-x), h2(1/2) = 1"


@_check("subsequence weight DP equals brute force")
def _subseq():
    rng = make_rng(1)
    worst = 0
    for _ in range(200):
        x = rng.integers(0, 2, rng.integers(1, 12))
        y = rng.integers(0, 2, rng.integers(0, x.size + 1))
        worst = max(worst, abs(subsequence_weight(y, x) - subsequence_weight_brute(y, x)))
    return worst == 0, f"max mismatch {worst}"


@_check("lower bounds below upper bound on a grid")
def _ordering():
    bad = []
    for p in np.arange(0.0, 0.5, 0.05):
        up = 1.0 - p
        vals = [B.d2_iud(p).value, B.bdc_sir_partial(4, 6, p).value,
                B.drc_simple_bounds(make_params(p, 0.0))[0].value]
        if any(v > up + 1e-12 for v in vals):
            bad.append(round(float(p), 2))
    return not bad, f"violations at {bad}" if bad else "all lower <= 1 - p"


@_check("D_i^(j) non-decreasing in j, and in i at deep truncation")
def _monotone():
    ok = True
    for p in (0.05, 0.1, 0.2):
        a = np.array([[B.bdc_sir_partial(i, j, p).value for j in range(0, 7)]
                      for i in range(1, 7)])
        ok &= bool(np.all(np.diff(a, axis=1) >= -1e-12))
        deep = [B.bdc_sir_partial(i, min(21 - i, 12), p).value for i in range(1, 7)]
        ok &= bool(np.all(np.diff(deep) >= -1e-12))
    return ok, "j <= 6 on the grid; i <= 6 with j = min(21 - i, 12)"


@_check("psi_i1 non-decreasing with geometric tail")
def _psi():
    v = np.array([B.psi_i1(i) for i in range(1, 40)])
    gaps = np.abs(v - B.psi_1())
    ok = np.all(np.diff(v) >= -1e-15) and np.all(gaps[10:30][1:] <= gaps[10:30][:-1])
    return bool(ok), f"psi_64,1 = {B.psi_1():.12f}"


@_check("BRC SIR below the Markov-1 maximum")
def _brc_sir():
    bad = [p for p in (0.1, 0.3, 0.5)
           if B.brc_markov1_rate(p, 0.5).value > B.brc_markov1_max(p).value + 1e-9]
    return not bad, "max over alpha >= value at alpha = 1/2"


@_check("star rows are stochastic and indecomposable inside the square")
def _star():
    worst = 0.0
    ok = True
    for pd, pr in itertools.product((0.05, 0.3), repeat=2):
        for m in range(0, 6):
            mod = build_star_fsc(make_params(pd, pr), m)
            worst = max(worst, float(np.abs(mod.star_matrix.sum(1) - 1).max()))
            ok &= check_indecomposable(mod)
            pi = star_stationary(mod)
            ok &= float(np.abs(pi @ mod.star_matrix - pi).sum()) < 1e-12
    return ok and worst < 1e-12, f"max row error {worst:.1e}"


@_check("dagger interior rows equal star interior rows")
def _dagger_interior():
    p = make_params(0.1, 0.2)
    cache = {}
    worst = 0.0
    for m in (1, 2, 3):
        star = build_star_fsc(p, m).star_matrix
        for j in range(-m + 1, m):
            worst = max(worst, float(np.abs(dagger_row(p, m, 5, j, cache) - star[j + m]).max()))
    return worst == 0.0, f"max difference {worst}"


@_check("clipping refines the touched index set")
def _refined():
    p = make_params(0.1, 0.1)
    rng = make_rng(7)
    n = 60
    for _ in range(300):
        z = sample_drift_path(p, n + 10, rng)
        g_true = np.arange(1, z.size + 1) - z
        touched = set(g_true[(g_true >= 1) & (g_true <= n)].tolist())
        prev = touched
        for m in (6, 4, 2, 1):
            g = np.arange(1, z.size + 1) - clip_drift_path(z, m)
            cur = set(g[(g >= 1) & (g <= n)].tolist())
            if not prev <= cur:
                return False, f"refinement broken at m = {m}"
            prev = cur
    return True, "true subset of clip(m+1) subset of clip(m) over 300 paths"


@_check("both channel formulations agree")
def _equivalence():
    worst = 0.0
    for pd, pr in ((0.1, 0.1), (0.3, 0.0), (0.0, 0.3)):
        p = make_params(pd, pr)
        for bits in itertools.product((0, 1), repeat=5):
            a = exact_output_law(p, bits, "dobrushin", max_len=12)
            b = exact_output_law(p, bits, "states", max_len=12)
            keys = set(a) | set(b)
            worst = max(worst, max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys))
    return worst < 1e-12, f"max difference {worst:.1e} (|x| = 5)"


@_check("mean output length per input symbol")
def _length():
    p = make_params(0.2, 0.1)
    law = exact_output_law(p, "10110100")
    mean = sum(len(y) * q for y, q in law.items()) / 8
    target = (1 - p.p_d) / (1 - p.p_r)
    return abs(mean - target) < 1e-9, f"{mean:.12f} vs {target:.12f}"


@_check("z marginal moments")
def _zmoments():
    p = make_params(0.2, 0.1)
    zm = z_marginal(p, 200)
    mom = drift_moments(p)
    ok = abs(zm.mean() / 200 - mom.chi) < 1e-9 and abs(zm.var() / 200 - mom.nu_sq) < 1e-6
    return ok, f"mean/n {zm.mean() / 200:.10f}, var/n {zm.var() / 200:.10f}"


@_check("state-path entropy matches the plug-in estimate")
def _state_entropy():
    p = make_params(0.2, 0.3)
    rng = make_rng(11)
    n, reps = 50, 4000
    vals = np.array([-drift_path_log2_prob(p, sample_drift_path(p, n, rng)) for _ in range(reps)])
    target = state_block_entropy(p, n)
    se = vals.std(ddof=1) / math.sqrt(reps)
    return abs(vals.mean() - target) < 3 * se, f"{vals.mean():.3f} vs {target:.3f} (se {se:.3f})"


@_check("N_n monotone along a shared increment stream")
def _nn_monotone():
    p = make_params(0.2, 0.2)
    x = np.zeros(400, dtype=np.int8)
    for s in range(20):
        t = sample_trace(p, x, s)
        counts = [int(np.searchsorted(t.gamma, k, side="right")) for k in range(1, 401, 20)]
        if any(b < a for a, b in zip(counts, counts[1:])):
            return False, f"seed {s}"
    return True, "N_k non-decreasing in k for 20 traces"


@_check("dagger ordering and star convergence at small n")
def _ordering_exact():
    p = make_params(0.1, 0.1)
    it = exact_mi_true(p, 4).value
    dag = [exact_mi_dagger(p, 4, m).value for m in range(0, 4)]
    ok = all(b <= a + 1e-10 for a, b in zip(dag, dag[1:])) and min(dag) >= it - 1e-9
    star = [abs(exact_mi_star(p, 4, m).value - it) for m in (1, 2, 3)]
    ok &= star[0] > star[1] > star[2]
    return ok, f"I_4 = {it:.6f}, dagger {['%.6f' % v for v in dag]}"


@_check("forward recursion is chunk-invariant")
def _chunk():
    tr = make_trellis(make_params(0.1, 0.1), 2)
    x, y, _ = sample_star_stationary(tr, 4000, make_rng(3))
    from . import _kernels as K
    whole, _ = K.fwd_iud(y, -1, tr.pi0, tr.star, tr.star, 1, 0)
    a, st = K.fwd_iud(y[:1500], -1, tr.pi0, tr.star, tr.star, 1, 0)
    b, _ = K.fwd_iud(y[1500:], int(y[1499]), st, tr.star, tr.star, 1501, 0)
    # -log2 P(x, y) with i.u.d. x
    joint = forward_neglog_prob(tr, y, x=x, per_symbol=False) + x.size
    ok = abs(whole - (a + b)) < 1e-9 and joint >= whole
    return ok, f"split difference {abs(whole - (a + b)):.1e}"


@_check("SIR estimate at p = 0 is one")
def _sir_zero():
    est = sir_estimate(make_params(0.0, 0.0), 2, 2000, 0, chunks=4)
    return abs(est.value - 1.0) < 1e-12, f"{est.value}"


@_check("SIR estimates non-increasing in m (conjecture)", hard=False)
def _sir_m():
    p = make_params(0.1, 0.1)
    ests = [sir_estimate(p, m, 40_000, 5, chunks=20) for m in (1, 2, 3)]
    ok = all(b.value <= a.value + 3 * math.hypot(a.stderr, b.stderr) for a, b in zip(ests, ests[1:]))
    return ok, ", ".join(f"{e.value:.4f}" for e in ests)


@_check("h2 concave, Pascal identity, Ei decreasing on the negative axis")
def _core():
    rng = make_rng(2)
    a, b = rng.random(2000), rng.random(2000)
    ok = bool(np.all(B.h2((a + b) / 2) >= (B.h2(a) + B.h2(b)) / 2 - 1e-15))
    ok &= all(binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k)
              for n in range(1, 65) for k in range(1, n))
    xs = -np.logspace(-3, 2, 200)[::-1]
    ei = np.array([exp_integral_ei(float(v)) for v in xs])
    # Ei'(x) = e^x / x < 0 here
    ok &= bool(np.all(np.diff(ei) < 0))
    return ok, "2000 concavity pairs, n <= 64, Ei on [-100, -1e-3]"


@_check("subsequence weights over all y of a length sum to C(|x|, i)")
def _subseq_sum():
    rng = make_rng(4)
    for _ in range(20):
        x = rng.integers(0, 2, rng.integers(1, 11))
        for i in range(x.size + 1):
            tot = sum(subsequence_weight(y, x) for y in itertools.product((0, 1), repeat=i))
            if tot != binom(x.size, i):
                return False, f"x = {x.tolist()}, i = {i}"
    return True, "20 random x with |x| <= 10"


@_check("index paths start at or after 1 and never decrease")
def _gamma():
    p = make_params(0.3, 0.3)
    for s in range(200):
        t = sample_trace(p, np.zeros(50, dtype=np.int8), s)
        if t.gamma.size and (t.gamma[0] < 1 or np.any(np.diff(t.gamma) < 0) or t.gamma[-1] > 50):
            return False, f"seed {s}"
    return True, "200 traces at p_d = p_r = 0.3"


@_check("output process is stationary for stationary input")
def _stationary_y():
    from scipy.stats import chi2_contingency

    p = make_params(0.2, 0.2)
    law = MarkovInputMu.symmetric_markov1(0.2)
    rng = make_rng(21)
    reps = 20_000
    counts = np.zeros((4, 16))
    for r in range(reps):
        t = sample_trace(p, law.sample(120, rng), 21_000_000 + r)
        y = t.y
        if y.size < 24:
            continue
        for row, k in enumerate((0, 1, 5, 20)):
            w = y[k:k + 4]
            counts[row, int(w[0]) * 8 + int(w[1]) * 4 + int(w[2]) * 2 + int(w[3])] += 1
    pv = [chi2_contingency(counts[[0, row]])[1] for row in (1, 2, 3)]
    return min(pv) > 1e-3, "chi-square p-values " + ", ".join(f"{v:.3f}" for v in pv)


@_check("Doob bound on the drift excursion")
def _doob():
    from scipy.stats import beta

    rng = make_rng(31)
    worst = ""
    for prob in (0.05, 0.1, 0.2):
        p = make_params(prob, prob)
        for m in (20, 50):
            n, reps = 1000, 400
            hits = sum(int(np.abs(sample_drift_path(p, n + m, rng)).max() >= m)
                       for _ in range(reps))
            low = beta.ppf(0.01, hits, reps - hits + 1) if hits else 0.0
            bound = 2 * prob / (1 - prob) * (n + m) / m ** 2
            if low > bound:
                return False, f"p = {prob}, m = {m}: {hits}/{reps} vs bound {bound:.4f}"
            worst = f"last cell {hits}/{reps} vs {bound:.3f}"
    return True, worst


@_check("clipped drift is eventually absorbed at the boundary", hard=False)
def _absorb():
    p = make_params(0.2, 0.1)
    rng = make_rng(41)
    fr = []
    for n in (1000, 10_000, 100_000):
        m = math.ceil(math.sqrt(n))
        hits = [abs(int(clip_drift_path(sample_drift_path(p, n, rng)[-1:], m)[0])) == m
                for _ in range(100)]
        fr.append(float(np.mean(hits)))
    ok = fr[-1] > 0.99 and all(b >= a for a, b in zip(fr, fr[1:]))
    return ok, "P(|Z_n^(m)| = m): " + ", ".join(f"{v:.2f}" for v in fr)


@_check("d2_iud small-p expansion residual is O(p^2)")
def _d2_expansion():
    ks = []
    for p in (1e-3, 2e-3, 4e-3):
        ref = 1 + p * math.log2(p) - p * LOG2E
        ks.append((B.d2_iud(p).value - ref) / p ** 2)
    spread = (max(ks) - min(ks)) / abs(np.mean(ks))
    return spread < 0.05, "fitted K " + ", ".join(f"{k:.4f}" for k in ks)


@_check("exact mutual information lies in [0, 1] and is formulation-free")
def _exact_range():
    p = make_params(0.2, 0.1)
    vals = [exact_mi_true(p, n).value for n in (1, 2, 3)]
    vals += [exact_mi_star(p, 3, m).value for m in (0, 1, 2)]
    vals += [exact_mi_dagger(p, 3, m).value for m in (0, 1, 2)]
    ok = all(-1e-12 <= v <= 1 + 1e-12 for v in vals)
    # the same I computed from the Gamma-path formulation
    n = 3
    hy = {}
    hyx = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        law = exact_output_law(p, bits, "states", max_len=16)
        for y, q in law.items():
            hy[y] = hy.get(y, 0.0) + q / 2 ** n
        hyx -= sum(q * math.log2(q) for q in law.values() if q > 0) / 2 ** n
    h = -sum(q * math.log2(q) for q in hy.values() if q > 0)
    diff = abs((h - hyx) / n - exact_mi_true(p, n, max_len=16).value)
    return ok and diff < 1e-12, f"range ok; formulation difference {diff:.1e}"


@_check("finite-horizon Monte Carlo matches the star oracle")
def _mc_oracle():
    p = make_params(0.1, 0.1)
    n, m = 6, 1
    ex = exact_mi_star(p, n, m)
    fs = finite_horizon_sample(p, m, n, 3000, 51)
    my, sy = fs.mean_se("y")
    mxy, sxy = fs.mean_se("xy")
    ok = abs(my - ex.h_y) < 3 * sy and abs(mxy - ex.h_xy) < 3 * sxy
    return ok, f"H_Y {my:.4f} vs {ex.h_y:.4f}, H_XY {mxy:.4f} vs {ex.h_xy:.4f}"


@_check("estimator standard error shrinks like n^-1/2")
def _aep():
    p = make_params(0.1, 0.1)
    ns = np.array([10_000, 40_000, 160_000])
    se = np.array([sir_estimate(p, 2, int(n), 61).stderr for n in ns])
    slope = float(np.polyfit(np.log(ns), np.log(se), 1)[0])
    return abs(slope + 0.5) < 0.1, f"fitted slope {slope:.3f}"


@_check("GBAA iterates are valid laws with a non-decreasing trace")
def _gbaa():
    from .optim import gbaa_optimize, trace_is_monotone

    res = gbaa_optimize(make_params(0.1, 0.1), 1, 2, 10_000, 3, 71, chunks=10)
    ok = all(np.allclose(q.transition.sum(1), 1.0) and np.all(q.transition >= 0)
             for q in res.inputs_trace)
    ok &= trace_is_monotone(res, 2.0)
    return ok, "trace " + ", ".join(f"{r.value:.4f}" for r in res.rate_trace)


@_check("optimised law is close to complement-symmetric", hard=False)
def _gbaa_sym():
    from .optim import gbaa_optimize

    res = gbaa_optimize(make_params(0.1, 0.1), 1, 2, 20_000, 4, 72, chunks=10)
    t = res.input.transition
    k = t.shape[0]
    comp = np.array([[t[k - 1 - c, 1 - b] for b in (0, 1)] for c in range(k)])
    dev = float(np.abs(t - comp).max())
    return dev < 0.05, f"max deviation {dev:.3f}"


@_check("CLI output headers carry version and configuration")
def _cli_header():
    import contextlib
    import tempfile

    from . import __version__
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        out = f"{tmp}/b.csv"
        with contextlib.redirect_stdout(io.StringIO()):
            code = main(["bounds", "--channel", "bdc", "--curve", "d2_iud",
                         "--pgrid", "0:0.1:0.05", "--out", out])
        text = open(out, encoding="utf-8").read()
    ok = code == 0 and text.startswith(f"# syncrate {__version__}") and "# pgrid=0:0.1:0.05" in text
    return ok, "bounds CSV header inspected"


def run_all(names: list[str] | None = None) -> list[CheckResult]:
    out = []
    for fn in REGISTRY:
        if names and fn.check_name not in names:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(fn.check_name, bool(ok), detail, fn.hard))
    return out
