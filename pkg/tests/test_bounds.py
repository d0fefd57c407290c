import itertools
import math

import numpy as np
import pytest
from scipy.special import gammaln

from syncrate import bounds as B
from syncrate.channel import make_params
from syncrate.core_math import LOG2E, SizeError, ValidityError, binary_entropy as h2


# ------------------------------------------------------------ simple bounds

def test_simple_bounds():
    lo, up = B.drc_simple_bounds(make_params(0, 0))
    assert (lo.value, up.value) == (1.0, 1.0)
    p = 0.1
    lo, up = B.drc_simple_bounds(make_params(p, 0))
    assert lo.value == pytest.approx(1 - p - h2(p)) and up.value == pytest.approx(1 - p)
    q = 0.02
    lo, _ = B.drc_simple_bounds(make_params(q, q))
    assert lo.value == pytest.approx(1 - q - 2 * h2(q))
    assert lo.kind == "lower" and up.kind == "upper"


def test_simple_lower_clamped():
    lo, _ = B.drc_simple_bounds(make_params(0.45, 0.45))
    assert lo.value == 0.0


# ------------------------------------------------------------ h_im, psi

def test_h_im_examples():
    assert all(B.h_im(i, 0) == 0.0 for i in range(2, 8))
    assert B.h_im(2, 1) == pytest.approx(0.5, abs=1e-15)


def test_h_im_matches_enumeration():
    for i in range(2, 6):
        for m in range(0, 6):
            assert B.h_im(i, m) == pytest.approx(B._h_im_enumerate(i, m), abs=1e-12)


def test_h_im_cap():
    with pytest.raises(SizeError):
        B.h_im(5, 17)


def test_h2m_closed():
    assert B.h2m_closed(0) == 0.0
    assert B.h2m_closed(1) == pytest.approx(0.5, abs=1e-15)
    for m in range(0, 11):
        assert B.h_im(2, m) == pytest.approx(B.h2m_closed(m), abs=1e-12)
    for m in range(0, 21):
        assert B.h2m_closed(m) >= math.log2(m + 1) - 1 + 2.0 ** -m - 1e-12


def test_psi():
    assert B.psi_i1(1) == 0.0
    assert B.psi_i1(2) == pytest.approx(1.0, abs=1e-15)
    assert B.psi_i1(2) == pytest.approx(2 * B.h_im(2, 1), abs=1e-15)
    for i in range(2, 13):
        assert B.psi_i1(i) == pytest.approx(i * B.h_im(i, 1), abs=1e-12)
    assert B.psi_i1(64) == pytest.approx(1.288531275, abs=1e-8)


def test_psi_monotone_geometric_tail():
    v = np.array([B.psi_i1(i) for i in range(1, 40)])
    assert np.all(np.diff(v) >= -1e-15)
    gap = np.abs(v - B.psi_1())[8:30]
    assert np.all(gap[1:] <= 0.5 * gap[:-1] + 1e-15)


def test_constants():
    assert B.constant_d() == pytest.approx(1.154163765, abs=1e-8)
    assert B.constant_r() == pytest.approx(0.845836235, abs=1e-8)
    assert B.constant_r() + B.constant_d() == 2.0
    assert B.P_STAR == pytest.approx(0.294832606, abs=1e-9)
    assert B.p_sub_star() == pytest.approx(0.734675821, abs=1e-6)


# ------------------------------------------------------------ D2 iud

def test_d2_iud_examples():
    assert B.d2_iud(0.0).value == 1.0
    a = B.d2_iud(0.1, 200).value
    b = B.d2_iud(0.1, 400).value
    assert abs(a - b) < 1e-8
    assert B.d2_iud(0.1).truncation_report["terms"] > 0


def test_d2_iud_above_closed_form():
    for p in np.arange(0.05, 0.26, 0.05):
        assert B.d2_iud(p).value >= B.d2_iud_closed(p).value


def test_d2_iud_closed_validity():
    with pytest.raises(ValidityError):
        B.d2_iud_closed(0.3)
    with pytest.raises(ValidityError):
        B.d2_iud_closed(0.0)


def test_d2_iud_closed_small_p():
    # independent evaluation of the same expression with mpmath
    import mpmath

    def ref(p):
        p = mpmath.mpf(p)
        lp = mpmath.log(p)
        ln2 = mpmath.log(2)
        hp = -p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2)
        return (4 * (1 - p) ** 3 / (2 - p) ** 2 - hp
                + (1 - p) ** 3 * (1 / (ln2 * lp))
                * (p * (1 + ln2) / lp - 2 * p * ln2 - mpmath.ei(2 * lp) / p))

    for p in (1e-4, 1e-5, 1e-6, 0.1):
        assert B.d2_iud_closed(p).value == pytest.approx(float(ref(p)), abs=1e-10)
    assert B.d2_iud_closed(1e-4).value == pytest.approx(0.9983507525, abs=1e-9)
    gaps = [1 - B.d2_iud_closed(p).value for p in (1e-4, 1e-5, 1e-6)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[2] < 1e-4


def test_d2_iud_small_p_expansion():
    # the m = 1 term contributes +p, so the linear coefficient is -log2(e)
    ks = [(B.d2_iud(p).value - (1 + p * math.log2(p) - p * LOG2E)) / p ** 2
          for p in (1e-3, 2e-3, 4e-3)]
    assert max(ks) - min(ks) < 0.01 * abs(np.mean(ks))
    assert np.mean(ks) == pytest.approx(0.41, abs=0.01)


# ------------------------------------------------------------ small-p SIR

def test_bdc_small_p_sir():
    assert B.bdc_small_p_sir(0.0).value == 1.0
    assert B.bdc_small_p_sir(0.01).value == pytest.approx(0.9220198004, abs=1e-9)
    assert B.bdc_small_p_sir(0.01).kind == "exact-rate"


def test_brc_small_p_sir():
    assert B.brc_small_p_sir(0.0).value == 1.0
    p = 0.01
    assert B.brc_small_p_sir(p).value == pytest.approx(1 + p * math.log2(p) + B.constant_r() * p)


# ------------------------------------------------------------ partial sums

def test_sir_partial_examples():
    for i in (1, 2, 4):
        for p in (0.05, 0.2):
            assert B.bdc_sir_partial(i, 0, p).value == pytest.approx(1 - p - h2(p))
    for i in (2, 3, 6):
        p = 0.1
        expect = 1 - p - h2(p) + p * (1 - p) ** (i + 1) * B.psi_i1(i)
        assert B.bdc_sir_partial(i, 1, p).value == pytest.approx(expect, abs=1e-12)


def test_sir_partial_monotone_in_j():
    for p in (0.05, 0.1, 0.2):
        for i in range(1, 7):
            v = [B.bdc_sir_partial(i, j, p).value for j in range(0, 7)]
            assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))


def test_sir_partial_monotone_in_i_when_converged():
    for p in (0.05, 0.1, 0.2):
        v = [B.bdc_sir_partial(i, min(21 - i, 12), p).value for i in range(1, 7)]
        assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))


def test_sir_partial_cap():
    with pytest.raises(SizeError):
        B.bdc_sir_partial(10, 12, 0.1)


# ------------------------------------------------------------ Markov-1, BDC

def test_markov_weight_law_matches_enumeration():
    for alpha in (0.1, 0.5, 0.9):
        for length in range(1, 11):
            ref = np.zeros(length + 1)
            for s in itertools.product((0, 1), repeat=length):
                pr = 0.5
                for a, b in zip(s, s[1:]):
                    pr *= alpha if a != b else 1 - alpha
                ref[sum(s)] += pr
            np.testing.assert_allclose(B.markov_weight_law(alpha, length), ref, atol=1e-15)


def test_markov_weight_law_sums_to_one():
    for alpha in np.arange(0.1, 1.0, 0.1):
        for m in range(1, 13):
            assert B.markov_weight_law(alpha, m).sum() == pytest.approx(1.0, abs=1e-14)


def test_markov1_d2_reduces_to_iud():
    p = 0.1
    logs = [math.log2(m + 1) for m in range(65)]
    hs = [h2(np.arange(m + 2) / (m + 1)) for m in range(65)]
    at_half = B._m1_bracket_d2(0.5, p, 64, logs, hs) * (1 - p) - h2(p)
    assert at_half == pytest.approx(B.d2_iud(p, 64).value, abs=1e-9)


def test_markov1_d2_not_below_iud():
    for p in np.arange(0.05, 0.31, 0.05):
        assert B.bdc_markov1_d2(p).value >= B.d2_iud(p).value - 1e-9


def test_markov1_d2_absolute_gain_small():
    for p in np.arange(0.05, 0.31, 0.05):
        assert B.bdc_markov1_d2(p).value - B.d2_iud(p).value < 0.02


@pytest.mark.parametrize("p", [0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
def test_markov1_d2_relative_gain_below_two_percent(p):
    # read as a relative gain this fails once d2_iud approaches zero (p >= 0.2)
    iud = B.d2_iud(p).value
    assert (B.bdc_markov1_d2(p).value - iud) / iud < 0.02


def test_markov1_d1_inner_at_half_is_psi():
    for i in range(1, 20):
        assert B._m1_inner_d1(0.5, i) == pytest.approx(B.psi_i1(i), abs=1e-12)


def test_markov1_frak_d1():
    assert B.bdc_markov1_frak_d1(0.0).value == pytest.approx(1.0, abs=1e-12)
    a = B.bdc_markov1_frak_d1(0.1, 64).value
    b = B.bdc_markov1_frak_d1(0.1, 128).value
    assert abs(a - b) < 1e-10
    p = 0.1
    best_iud = max(1 - p - h2(p) + p * (1 - p) ** (i + 1) * B.psi_i1(i) for i in range(1, 20))
    assert a >= best_iud - 1e-9


# ------------------------------------------------------------ BRC

def _brc_run_oracle(p: float, alpha: float, cap: int = 700) -> float:
    """alpha * I(A; R): input runs A ~ Geom(alpha), output runs R | A = a
    negative binomial. Computed in log space so small p is safe."""
    a = np.arange(1, cap + 1)[:, None]
    r = np.arange(1, cap + 1)[None, :]
    ok = r >= a
    with np.errstate(invalid="ignore", divide="ignore"):
        logc = gammaln(r) - gammaln(a) - gammaln(np.where(ok, r - a + 1, 1))
        lp = np.where(ok, logc + a * math.log1p(-p) + (r - a) * math.log(p), -np.inf)
    pr_a = alpha * (1 - alpha) ** (a[:, 0] - 1)
    cond = np.exp(lp)
    joint = pr_a[:, None] * cond
    pr_r = joint.sum(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        h_r = -np.sum(np.where(pr_r > 0, pr_r * np.log2(pr_r), 0.0))
        h_r_a = -np.sum(np.where(joint > 0, joint * np.log2(np.where(cond > 0, cond, 1)), 0.0))
    return alpha * (h_r - h_r_a)


@pytest.mark.parametrize("p,alpha", [(0.3, 0.5), (0.1, 0.3), (0.5, 0.6), (0.01, 0.5)])
def test_brc_markov1_rate_matches_run_oracle(p, alpha):
    assert B.brc_markov1_rate(p, alpha).value == pytest.approx(_brc_run_oracle(p, alpha), abs=1e-8)


def test_brc_examples():
    assert B.brc_markov1_rate(0.0, 0.5).value == 1.0
    p, alpha = 0.2, 0.3
    q = p + (1 - alpha) * (1 - p)
    assert B.brc_z1_given_y(p, alpha) == pytest.approx(q * h2(p / q))


def test_brc_non_convexity_witness():
    assert any(B.brc_markov1_max(p).value > 1 - p for p in np.arange(0.05, 0.95, 0.05))


def test_brc_r2():
    assert B.brc_r2_closed(0.0).value == pytest.approx(1.0, abs=1e-15)
    for p in np.arange(0.1, 0.61, 0.1):
        assert B.brc_r2_closed(p).value <= B.brc_markov1_max(p, 800).value + 1e-9
    with pytest.raises(ValidityError):
        B.brc_r2_closed(0.8)


def test_brc_sir_below_max():
    for p in (0.1, 0.3, 0.5, 0.7):
        assert B.brc_markov1_rate(p, 0.5).value <= B.brc_markov1_max(p).value + 1e-12


# ------------------------------------------------------------ grid invariant

def test_lower_below_upper_on_grid():
    for p in np.arange(0.0, 0.5, 0.02):
        upper = 1 - p
        lows = [B.d2_iud(p).value, B.bdc_sir_partial(3, 6, p).value,
                B.bdc_markov1_frak_d1(p).value, B.drc_simple_bounds(make_params(p, 0))[0].value]
        # the series curves are not clamped at zero, only the upper side matters
        assert all(v <= upper + 1e-12 for v in lows)
