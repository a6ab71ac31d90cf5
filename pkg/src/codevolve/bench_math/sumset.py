"""Sum/difference set lower bound from a finite set of non-negative integers."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

_DIRECT_LIMIT = 1 << 15


class SideConditionViolated(ValueError):
    pass


class ZeroNotInSet(ValueError):
    pass


def _support_count(a: np.ndarray, b: np.ndarray) -> int:
    """Number of nonzero entries of the convolution of two 0/1 indicator vectors."""
    if len(a) <= _DIRECT_LIMIT:
        return int(np.count_nonzero(np.convolve(a, b)))
    from scipy.signal import fftconvolve

    return int(np.count_nonzero(fftconvolve(a.astype(float), b.astype(float)) > 0.5))


def sum_diff_sizes(u: Iterable[int]) -> tuple[int, int]:
    """``(|U+U|, |U-U|)``."""
    values = sorted(set(int(x) for x in u))
    if values[0] < 0:
        raise ValueError("elements must be non-negative")
    ind = np.zeros(values[-1] + 1, dtype=np.int64)
    ind[values] = 1
    return _support_count(ind, ind), _support_count(ind, ind[::-1])


def sumset_bound(u: Iterable[int]) -> float:
    """``1 + log(|U-U| / |U+U|) / log(2 max U + 1)``."""
    values = set(int(x) for x in u)
    if 0 not in values:
        raise ZeroNotInSet("U must contain 0")
    top = max(values)
    if top < 1:
        raise ValueError("max(U) must be >= 1")
    plus, minus = sum_diff_sizes(values)
    if minus > 2 * top + 1:
        raise SideConditionViolated(f"|U-U| = {minus} exceeds 2 max(U) + 1 = {2 * top + 1}")
    return 1.0 + math.log(minus / plus) / math.log(2 * top + 1)
