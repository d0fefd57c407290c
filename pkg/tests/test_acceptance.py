"""Acceptance criteria 1-13. Each test records one PASS/FAIL line.

Tolerances are pinned below. A failing criterion is left failing.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import beta

from conftest import ACCEPTANCE_LINES
from syncrate import bounds as B
from syncrate.channel import exact_output_law, make_params, make_rng, sample_drift_path, sample_trace
from syncrate.core_math import binary_entropy as h2
from syncrate.inputs import MarkovInputMu
from syncrate.optim import gbaa_optimize, trace_is_monotone
from syncrate.oracle import exact_mi_dagger, exact_mi_star, exact_mi_true
from syncrate.rates import finite_horizon_sample, markov_rate_estimate, sir_estimate

# pinned tolerances
TOL_D = 1e-8
TOL_PSI = 1e-8
TOL_PSTAR = 1e-9
TOL_PSUB = 1e-6
TOL_CLOSED = 1e-12
TOL_FORMULATION = 1e-12
FORMULATION_EXTRA_LEN = 8
TOL_EXACT = 1e-10
STAR_FINAL_GAP = 0.01
MC_SIGMAS = 3.0
MC_REPS = 10_000
SWEEP_N = 500_000
SWEEP_SEEDS = (1, 2)
P0_TOL = 0.002
REL_SPREAD = 0.0015
OPT_SIGMAS = 2.0
TRACE_SIGMAS = 3.0
N_LEN = 1_000_000
N_LEN_REL = 0.01
DOOB_CONF = 0.99


def record(num: int, ok: bool, detail: str, seconds: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail} [{seconds:.1f} s]"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


def test_criterion_01_constant_d():
    t = time.perf_counter()
    d = B.constant_d()
    dt = time.perf_counter() - t
    ok = abs(d - 1.154163765) < TOL_D and dt < 1.0
    record(1, ok, f"d = {d:.10f}", dt)


def test_criterion_02_constant_r():
    t = time.perf_counter()
    r = B.constant_r()
    dt = time.perf_counter() - t
    ok = abs(r - 0.845836235) < TOL_D and abs(r - (2 - B.constant_d())) < 1e-15 and dt < 1.0
    record(2, ok, f"r = {r:.10f}", dt)


def test_criterion_03_psi():
    t = time.perf_counter()
    psi = B.psi_1()
    v = np.array([B.psi_i1(i) for i in range(1, 40)])
    dt = time.perf_counter() - t
    mono = bool(np.all(np.diff(v) >= -1e-15))
    gap = np.abs(v - psi)[8:30]
    geometric = bool(np.all(gap[1:] <= 0.5 * gap[:-1] + 1e-15))
    ok = abs(psi - 1.288531275) < TOL_PSI and mono and geometric and dt < 1.0
    record(3, ok, f"psi_1 = {psi:.10f}, monotone {mono}, geometric tail {geometric}", dt)


def test_criterion_04_thresholds():
    t = time.perf_counter()
    p_star = B.P_STAR
    p_sub = B.p_sub_star()
    dt = time.perf_counter() - t
    ref = math.exp(-(1 + math.log(2)) / (2 * math.log(2)))
    ok = (abs(p_star - 0.294832606) < TOL_PSTAR and abs(p_star - ref) < 1e-15
          and abs(p_sub - 0.734675821) < TOL_PSUB
          and abs((1 - p_sub) * (2 ** (2 * p_sub) + 1) - 1) < 1e-9 and dt < 1.0)
    record(4, ok, f"p* = {p_star:.10f}, p_* = {p_sub:.8f}", dt)


def test_criterion_05_closed_forms():
    t = time.perf_counter()
    e1 = max(abs(B.h_im(2, m) - B.h2m_closed(m)) for m in range(0, 11))
    # h_im starts at i = 2; psi_i1(1) = 0 has no h_im counterpart
    e2 = max(abs(i * B.h_im(i, 1) - B.psi_i1(i)) for i in range(2, 13))
    dt = time.perf_counter() - t
    ok = e1 < TOL_CLOSED and e2 < TOL_CLOSED and dt < 30
    record(5, ok, f"h_im(2,m) err {e1:.1e}, i h_im(i,1) err {e2:.1e}", dt)


def test_criterion_06_channel_equivalence():
    # both formulations are exact on outputs up to max_len; the mass beyond
    # it is the deficit, which must agree as well
    t = time.perf_counter()
    worst = 0.0
    count = 0
    for pd, pr in itertools.product((0.0, 0.1, 0.3), repeat=2):
        params = make_params(pd, pr)
        for n in range(1, 9):
            for x in itertools.product((0, 1), repeat=n):
                L = n + FORMULATION_EXTRA_LEN
                a = exact_output_law(params, x, "dobrushin", max_len=L)
                b = exact_output_law(params, x, "states", max_len=L)
                diff = max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b))
                worst = max(worst, diff, abs(a.deficit - b.deficit))
                count += 1
    dt = time.perf_counter() - t
    ok = worst < TOL_FORMULATION and dt < 120
    record(6, ok, f"{count} (params, x) pairs, max difference {worst:.1e}", dt)


def test_criterion_07_dagger_ordering():
    t = time.perf_counter()
    bad = []
    for p in (0.1, 0.2):
        params = make_params(p, p)
        for n in range(1, 7):
            true = exact_mi_true(params, n)
            vals = [exact_mi_dagger(params, n, m).value for m in range(0, 5)]
            slack = TOL_EXACT + true.deficit
            if any(b > a + TOL_EXACT for a, b in zip(vals, vals[1:])):
                bad.append(f"p={p} n={n} not non-increasing")
            if min(vals) < true.value - slack:
                bad.append(f"p={p} n={n} below I_n")
    dt = time.perf_counter() - t
    ok = not bad and dt < 300
    record(7, ok, "ordered for n <= 6, m <= 4" if not bad else "; ".join(bad), dt)


def test_criterion_08_star_convergence():
    t = time.perf_counter()
    params = make_params(0.1, 0.1)
    true = exact_mi_true(params, 8)
    gaps = [abs(exact_mi_star(params, 8, m).value - true.value) for m in (1, 2, 3, 4)]
    dt = time.perf_counter() - t
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < STAR_FINAL_GAP and dt < 300
    record(8, ok, "gaps " + ", ".join(f"{g:.2e}" for g in gaps), dt)


def test_criterion_09_monte_carlo_vs_oracle():
    t = time.perf_counter()
    params = make_params(0.1, 0.1)
    n = 12
    parts = []
    ok = True
    for m in (1, 2):
        ex = exact_mi_star(params, n, m)
        fs = finite_horizon_sample(params, m, n, MC_REPS, 9000 + m)
        my, sy = fs.mean_se("y")
        mxy, sxy = fs.mean_se("xy")
        zy = abs(my - ex.h_y) / sy
        zxy = abs(mxy - ex.h_xy) / sxy
        ok &= zy < MC_SIGMAS and zxy < MC_SIGMAS
        parts.append(f"m={m}: H(Y)/n {my / n:.4f} vs {ex.h_y / n:.4f} ({zy:.1f} se), "
                     f"H(X,Y)/n {mxy / n:.4f} vs {ex.h_xy / n:.4f} ({zxy:.1f} se)")
    dt = time.perf_counter() - t
    record(9, ok and dt < 300, "; ".join(parts), dt)


@pytest.mark.slow
def test_criterion_10_sir_sweep():
    t = time.perf_counter()
    ps = [round(0.05 * k, 2) for k in range(11)]
    ms = range(1, 9)
    est = {(p, m, s): sir_estimate(make_params(p, p), m, SWEEP_N, s)
           for p in ps for m in ms for s in SWEEP_SEEDS}
    dt = time.perf_counter() - t
    s1, s2 = SWEEP_SEEDS
    a_ok = all(abs(est[(0.0, m, s)].value - 1.0) <= P0_TOL for m in ms for s in SWEEP_SEEDS)
    below = [(p, m, s) for (p, m, s), e in est.items()
             if e.value < 1 - p - 2 * h2(p) - MC_SIGMAS * e.stderr]
    spread = {}
    for p in ps:
        for m in ms:
            v1, v2 = est[(p, m, s1)].value, est[(p, m, s2)].value
            spread[(p, m)] = (abs(v1 - v2) / (0.5 * (v1 + v2)), abs(v1 - v2))
    wide = sorted(k for k, (rel, _) in spread.items() if rel > REL_SPREAD)
    worst_abs = max(a for _, a in spread.values())
    # (d) is a conjecture: reported, not enforced
    rises = []
    for p in ps:
        for s in SWEEP_SEEDS:
            for m in range(1, 8):
                a, b = est[(p, m, s)], est[(p, m + 1, s)]
                if b.value > a.value + MC_SIGMAS * math.hypot(a.stderr, b.stderr):
                    rises.append((p, m, s))
    detail = (f"(a) {'ok' if a_ok else 'off'}; (b) {len(below)} below 1 - p - 2 h2(p); "
              f"(c) {len(wide)}/{len(spread)} points over {REL_SPREAD:.2%} relative "
              f"(max absolute spread {worst_abs:.4f}; first {wide[:4]}); "
              f"(d) {len(rises)} rises over {MC_SIGMAS:g} se")
    record(10, a_ok and not below and not wide, detail, dt)


def test_criterion_11_gbaa():
    t = time.perf_counter()
    parts = []
    ok = True
    for p in (0.1, 0.2):
        params = make_params(p, p)
        for m, mu in ((1, 2), (2, 4)):
            res = gbaa_optimize(params, m, mu, 100_000, 10, 1100 + m)
            sir = sir_estimate(params, m, 100_000, 1200 + m)
            best = res.best
            beats = best.value >= sir.value - OPT_SIGMAS * math.hypot(best.stderr, sir.stderr)
            # re-score the accepted iterates on noise the optimiser never saw
            rescored = [markov_rate_estimate(params, m, mu, law, 100_000, 1300 + m)
                        for law in res.inputs_trace]
            res.rate_trace = rescored
            mono = trace_is_monotone(res, TRACE_SIGMAS)
            ok &= beats and mono
            parts.append(f"p={p} m={m} mu={mu}: {best.value:.4f} vs SIR {sir.value:.4f}, "
                         f"trace {'monotone' if mono else 'drops'}")
    dt = time.perf_counter() - t
    record(11, ok and dt < 1800, "; ".join(parts), dt)


def test_criterion_12_brc():
    t = time.perf_counter()
    witness = [round(float(p), 2) for p in np.arange(0.05, 0.95, 0.05)
               if B.brc_markov1_max(p).value > 1 - p]
    r2_zero = B.brc_r2_closed(0.0).value
    dominated = all(B.brc_r2_closed(p).value <= B.brc_markov1_max(p, 800).value + 1e-9
                    for p in np.arange(0.05, 0.61, 0.05))
    dt = time.perf_counter() - t
    ok = bool(witness) and abs(r2_zero - 1.0) < 1e-15 and dominated and dt < 60
    record(12, ok, f"max_alpha rate > 1 - p at p in {witness[:3]}...; R2(0) = {r2_zero}; "
                   f"R2 <= Markov-1 {dominated}", dt)


def test_criterion_13_doob_and_length():
    t = time.perf_counter()
    parts = []
    ok = True
    for k, (pd, pr) in enumerate(((0.1, 0.1), (0.3, 0.1), (0.1, 0.3))):
        params = make_params(pd, pr)
        x = MarkovInputMu.iud().sample(N_LEN, make_rng([13, k]))
        ratio = sample_trace(params, x, 1300 + k).output_length / N_LEN
        target = (1 - pd) / (1 - pr)
        ok &= abs(ratio / target - 1) < N_LEN_REL
        parts.append(f"N_n/n {ratio:.4f} vs {target:.4f}")
    p, reps = 0.1, 10_000
    params = make_params(p, p)
    rng = make_rng(1313)
    for n, m in ((100, 10), (100, 15), (400, 30)):
        hits = sum(int(np.abs(sample_drift_path(params, n, rng)).max() >= m) for _ in range(reps))
        lower = beta.ppf(1 - DOOB_CONF, hits, reps - hits + 1) if hits else 0.0
        bound = 2 * p / (1 - p) * (n + m) / m ** 2
        ok &= lower <= bound
        parts.append(f"n={n} m={m}: {hits}/{reps} (99% lower {lower:.3f}) vs {bound:.3f}")
    dt = time.perf_counter() - t
    record(13, ok and dt < 120, "; ".join(parts), dt)
