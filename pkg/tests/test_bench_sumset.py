from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codevolve.bench_math import sumset
from codevolve.bench_math.sumset import ZeroNotInSet, sum_diff_sizes, sumset_bound


def enumerate_sizes(u):
    u = set(u)
    return len({a + b for a in u for b in u}), len({a - b for a in u for b in u})


def enumerate_bound(u):
    plus, minus = enumerate_sizes(u)
    return 1 + math.log(minus / plus) / math.log(2 * max(u) + 1)


def test_pair_is_exactly_one():
    assert sumset_bound({0, 1}) == 1.0


def test_013_against_enumeration():
    assert enumerate_sizes({0, 1, 3}) == (6, 7)
    assert sumset_bound({0, 1, 3}) == pytest.approx(enumerate_bound({0, 1, 3}), abs=1e-12)


def test_requires_zero():
    with pytest.raises(ZeroNotInSet):
        sumset_bound({1, 2, 5})


def test_requires_positive_max():
    with pytest.raises(ValueError):
        sumset_bound({0})


@settings(max_examples=200, deadline=None)
@given(st.sets(st.integers(1, 300), min_size=1, max_size=25))
def test_matches_enumeration(rest):
    u = rest | {0}
    assert sum_diff_sizes(u) == enumerate_sizes(u)
    assert sumset_bound(u) == pytest.approx(enumerate_bound(u), abs=1e-12)


def test_difference_set_fits_window():
    # U - U lies in [-max U, max U], which is what the side condition asks
    rng = random.Random(5)
    for _ in range(50):
        u = {0} | {rng.randrange(1, 500) for _ in range(rng.randrange(1, 30))}
        assert sum_diff_sizes(u)[1] <= 2 * max(u) + 1


def test_large_set_uses_fft_path():
    rng = random.Random(11)
    u = {0, 40000} | {rng.randrange(40000) for _ in range(150)}
    assert max(u) + 1 > sumset._DIRECT_LIMIT
    assert sum_diff_sizes(u) == enumerate_sizes(u)
