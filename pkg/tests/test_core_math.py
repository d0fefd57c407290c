import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from syncrate.core_math import (DomainError, binary_entropy as h2, binom, exp_integral_ei)


def test_h2_examples():
    assert h2(0.0) == 0.0
    assert h2(1.0) == 0.0
    assert h2(0.5) == 1.0
    ref = float(-(mpmath.mpf(1) / 4) * mpmath.log(mpmath.mpf(1) / 4, 2)
                - (mpmath.mpf(3) / 4) * mpmath.log(mpmath.mpf(3) / 4, 2))
    assert h2(0.25) == pytest.approx(ref, abs=1e-15)
    assert h2(0.25) == pytest.approx(0.811278124459, abs=1e-12)


def test_h2_vectorised():
    xs = np.array([0.0, 0.25, 0.5, 1.0])
    np.testing.assert_allclose(h2(xs), [0.0, 0.811278124459133, 1.0, 0.0], atol=1e-14)


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_h2_domain(bad):
    with pytest.raises(DomainError):
        h2(bad)


@given(st.floats(0, 1), st.floats(0, 1))
def test_h2_concave(a, b):
    assert h2((a + b) / 2) >= (h2(a) + h2(b)) / 2 - 1e-15


@given(st.floats(0, 1))
def test_h2_symmetric(x):
    assume(1.0 - (1.0 - x) == x)  # 1 - x must be exact
    assert h2(x) == pytest.approx(h2(1 - x), abs=1e-15)


def test_binom_examples():
    assert binom(5, 2) == 10
    assert binom(10, 5) == 252
    assert all(binom(n, 0) == 1 for n in range(70))
    assert binom(3, 5) == 0


def test_binom_pascal_exact():
    for n in range(1, 65):
        for k in range(1, n):
            assert binom(n, k) == binom(n - 1, k - 1) + binom(n - 1, k)


def test_binom_large_relative_error():
    for n, k in [(100, 30), (200, 100), (80, 3)]:
        assert binom(n, k) == pytest.approx(math.comb(n, k), rel=1e-12)


@pytest.mark.parametrize("x", [-1.0, -3.2188758248682006, -0.01, -5.0, -20.0, -45.0])
def test_ei_against_mpmath(x):
    assert exp_integral_ei(x) == pytest.approx(float(mpmath.ei(x)), abs=1e-10)


def test_ei_examples():
    assert exp_integral_ei(-1.0) == pytest.approx(-0.2193839343955203, abs=1e-10)
    # frozen from mpmath.ei(2 * log(0.2))
    assert exp_integral_ei(2 * math.log(0.2)) == pytest.approx(-0.009895501310043, abs=1e-12)
    assert abs(exp_integral_ei(-50.0)) < 1e-20


def test_ei_decreasing_on_negative_axis():
    # Ei'(x) = e^x / x < 0 for x < 0
    xs = -np.logspace(-4, 2, 300)[::-1]
    vals = [exp_integral_ei(float(v)) for v in xs]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("bad", [0.0, 1.0])
def test_ei_domain(bad):
    with pytest.raises(DomainError):
        exp_integral_ei(bad)
