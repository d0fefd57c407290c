import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncrate.core_math import DomainError, SizeError, binom
from syncrate.sequences import (as_bits, bits_to_str, first_run_length, hamming_weight, runs,
                                subsequence_weight, subsequence_weight_brute)

bits = st.lists(st.integers(0, 1), max_size=24)


def test_weight_examples():
    assert subsequence_weight("", "0110") == 1
    assert subsequence_weight("", "") == 1
    assert subsequence_weight("101", "10101") == 4
    assert subsequence_weight("11", "0") == 0
    assert subsequence_weight_brute("101", "10101") == 4
    assert subsequence_weight_brute("0", "000") == 3
    assert subsequence_weight_brute("01", "01") == 1


def test_weight_exhaustive_small():
    for n in range(0, 9):
        for x in itertools.product((0, 1), repeat=n):
            for i in range(0, n + 1):
                for y in itertools.product((0, 1), repeat=i):
                    assert subsequence_weight(y, x) == subsequence_weight_brute(y, x)


@settings(max_examples=300, deadline=None)
@given(bits, st.data())
def test_weight_random_matches_brute(x, data):
    y = data.draw(st.lists(st.integers(0, 1), max_size=len(x)))
    assert subsequence_weight(y, x) == subsequence_weight_brute(y, x)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.data())
def test_weights_sum_to_binomial(x, data):
    i = data.draw(st.integers(0, len(x)))
    total = sum(subsequence_weight(y, x) for y in itertools.product((0, 1), repeat=i))
    assert total == binom(len(x), i)


def test_weight_positive_iff_subsequence():
    x = (1, 0, 0, 1, 1, 0)
    for i in range(0, 8):
        for y in itertools.product((0, 1), repeat=i):
            it = iter(x)
            is_sub = all(b in it for b in y)
            assert (subsequence_weight(y, x) >= 1) == is_sub


def test_brute_force_cap():
    with pytest.raises(SizeError):
        subsequence_weight_brute("1", "0" * 25)


def test_runs_and_weights():
    assert first_run_length("000110") == 3
    assert first_run_length("1") == 1
    with pytest.raises(DomainError):
        first_run_length("")
    assert runs("000110") == [(0, 3), (1, 2), (0, 1)]
    assert hamming_weight("10110") == 3
    assert bits_to_str(as_bits("0101")) == "0101"


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_first_run_bounds(x):
    r = first_run_length(x)
    assert 1 <= r <= len(x)
    assert sum(length for _, length in runs(x)) == len(x)
