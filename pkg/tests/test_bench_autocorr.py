from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codevolve.bench_math.autocorr import (
    MassViolated,
    ZeroIntegral,
    autocorr_c1_upper,
    autocorr_c2_lower,
    autocorr_c3_upper,
    min_overlap_objective,
)

SUB = 8  # oracle grid points per knot interval


def _overlap(a0, a1, b0, b1):
    return np.clip(np.minimum(a1, b1) - np.maximum(a0, b0), 0.0, None)


def conv_oracle(h, lo, hi, ts):
    """f*f(t) by summing interval overlaps of the steps, for each t."""
    n = len(h)
    w = (hi - lo) / n
    edges = lo + w * np.arange(n + 1)
    # x in step i and t - x in step j  <=>  x in [t - e_{j+1}, t - e_j]
    t = ts[:, None, None]
    lens = _overlap(edges[:-1][None, :, None], edges[1:][None, :, None],
                    t - edges[1:][None, None, :], t - edges[:-1][None, None, :])
    return np.einsum("kij,i,j->k", lens, h, h)


def grid(lo, hi, n):
    return np.linspace(lo, hi, n * SUB + 1)


def c_oracles(h):
    n = len(h)
    ts = grid(-0.5, 0.5, 2 * n)
    g = conv_oracle(h, -0.25, 0.25, ts)
    integral = h.sum() * 0.5 / n
    # composite Simpson on each linear piece is exact for the quadratic g^2
    dt = ts[1] - ts[0]
    g2 = g * g
    mid = conv_oracle(h, -0.25, 0.25, ts[:-1] + dt / 2) ** 2
    l2 = float(np.sum(g2[:-1] + 4 * mid + g2[1:]) * dt / 6)
    return g.max() / integral**2, l2 / (integral**2 * g.max()), np.abs(g).max() / integral**2


def overlap_oracle(h):
    """max over a dense k-grid of ∫ h(x)(1 - h(x+k)) with x, x+k in [0, 2]."""
    n = len(h)
    w = 2.0 / n
    edges = w * np.arange(n + 1)
    k = grid(-2.0, 2.0, 2 * n)[:, None]
    lo, hi = np.maximum(0.0, -k), np.minimum(2.0, 2.0 - k)
    mass = _overlap(edges[:-1][None, :], edges[1:][None, :], lo, hi) @ h
    kk = k[:, :, None]
    lens = _overlap(edges[:-1][None, :, None], edges[1:][None, :, None],
                    edges[:-1][None, None, :] - kk, edges[1:][None, None, :] - kk)
    corr = np.einsum("kij,i,j->k", lens, h, h)
    return float((mass - corr).max())


def random_overlap_heights(rng, n):
    """Heights in [0, 1] with mean exactly 1/2, i.e. unit integral on [0, 2]."""
    r = rng.random(n)
    r = r - r.mean()
    span = np.abs(r).max()
    return 0.5 + 0.5 * r / span if span > 0 else np.full(n, 0.5)


def test_closed_forms():
    assert autocorr_c1_upper([1.0]) == pytest.approx(2.0, abs=1e-15)
    # triangle of height 1/2 on [-1/2, 1/2]: ||g||_2^2 = 1/12, ||g||_1 = 1/4, max 1/2
    assert autocorr_c2_lower([1.0]) == pytest.approx((1 / 12) / (0.25 * 0.5), abs=1e-15)
    assert min_overlap_objective([0.5] * 10) == pytest.approx(0.5, abs=1e-15)


def test_indicator_overlap_pinned():
    # h = 1 on [0, 1]: quadrature oracle value, frozen
    h = [1.0] * 5 + [0.0] * 5
    assert overlap_oracle(np.array(h)) == pytest.approx(1.0, abs=1e-12)
    assert min_overlap_objective(h) == pytest.approx(1.0, abs=1e-12)


def test_invariances():
    rng = np.random.default_rng(0)
    h = rng.random(13)
    for fn in (autocorr_c1_upper, autocorr_c2_lower, autocorr_c3_upper):
        assert fn(3.7 * h) == pytest.approx(fn(h), rel=1e-12)
    assert autocorr_c3_upper(h) == pytest.approx(autocorr_c1_upper(h), rel=1e-12)
    s = h - 0.3
    assert autocorr_c3_upper(-s) == pytest.approx(autocorr_c3_upper(s), rel=1e-12)


def test_errors():
    with pytest.raises(ZeroIntegral):
        autocorr_c1_upper([0.0, 0.0])
    with pytest.raises(ZeroIntegral):
        autocorr_c3_upper([1.0, -1.0])
    with pytest.raises(ValueError):
        autocorr_c1_upper([1.0, -0.5])
    with pytest.raises(MassViolated):
        min_overlap_objective([0.4] * 4)
    with pytest.raises(ValueError):
        min_overlap_objective([1.5, 0.5, 0.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_against_quadrature(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.random(n) + 0.01
    c1, c2, _ = c_oracles(h)
    assert autocorr_c1_upper(h) == pytest.approx(c1, rel=1e-9)
    assert autocorr_c2_lower(h) == pytest.approx(c2, rel=1e-9)
    signed = rng.normal(size=n)
    if abs(signed.sum()) > 1e-3:
        _, _, c3 = c_oracles(signed)
        assert autocorr_c3_upper(signed) == pytest.approx(c3, rel=1e-9)
    m = random_overlap_heights(rng, n)
    assert min_overlap_objective(m) == pytest.approx(overlap_oracle(m), rel=1e-9)
