"""Step-function objectives: autoconvolution constants and the minimum overlap problem.

A step function with ``n`` equal pieces of width ``w`` has a piecewise-linear
autoconvolution with knots every ``w``, so its maximum and its squared L2
norm can be computed exactly from the knot values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ZeroIntegral(ValueError):
    pass


class MassViolated(ValueError):
    pass


@dataclass(frozen=True)
class StepFunction:
    lo: float
    hi: float
    heights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "heights", np.asarray(self.heights, dtype=float))
        if self.heights.ndim != 1 or len(self.heights) < 1:
            raise ValueError("need at least one step")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights must be finite")

    @property
    def n(self) -> int:
        return len(self.heights)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def integral(self) -> float:
        return float(self.heights.sum() * self.width)


def autoconv_knots(heights, width: float) -> np.ndarray:
    """Values of ``f*f`` at its ``2n+1`` knots (the two end knots are zero)."""
    h = np.asarray(heights, dtype=float)
    inner = np.convolve(h, h) * width
    return np.concatenate([[0.0], inner, [0.0]])


def _on_quarter(heights) -> StepFunction:
    return StepFunction(-0.25, 0.25, heights)


def _integral_or_raise(f: StepFunction) -> float:
    total = f.integral
    if total == 0:
        raise ZeroIntegral("step function integrates to zero")
    return total


def autocorr_c1_upper(heights) -> float:
    """``max f*f / (∫f)^2`` for a non-negative step function on [-1/4, 1/4]."""
    f = _on_quarter(heights)
    if np.any(f.heights < 0):
        raise ValueError("heights must be non-negative")
    total = _integral_or_raise(f)
    return float(autoconv_knots(f.heights, f.width).max() / total**2)


def autocorr_c2_lower(heights) -> float:
    """``‖f*f‖₂² / (‖f*f‖₁ ‖f*f‖∞)`` for a non-negative step function."""
    f = _on_quarter(heights)
    if np.any(f.heights < 0):
        raise ValueError("heights must be non-negative")
    total = _integral_or_raise(f)
    g = autoconv_knots(f.heights, f.width)
    a, b = g[:-1], g[1:]
    l2sq = float(np.sum(a * a + a * b + b * b) * f.width / 3.0)
    return l2sq / (total**2 * float(g.max()))


def autocorr_c3_upper(heights) -> float:
    """``max |f*f| / (∫f)^2`` for a signed step function on [-1/4, 1/4]."""
    f = _on_quarter(heights)
    total = _integral_or_raise(f)
    return float(np.abs(autoconv_knots(f.heights, f.width)).max() / total**2)


def overlap_knots(heights) -> np.ndarray:
    """``M(k) = ∫ h(x)(1 - h(x+k)) dx`` over x, x+k in [0, 2], at ``k = j*w``, ``j = -n..n``."""
    h = np.asarray(heights, dtype=float)
    n = len(h)
    w = 2.0 / n
    prefix = np.concatenate([[0.0], np.cumsum(h)])  # prefix[i] = sum h[:i]
    out = np.empty(2 * n + 1)
    for j in range(-n, n + 1):
        if j >= 0:
            mass = prefix[n - j]
            corr = float(np.dot(h[: n - j], h[j:]))
        else:
            mass = prefix[n] - prefix[-j]
            corr = float(np.dot(h[-j:], h[: n + j]))
        out[j + n] = w * (mass - corr)
    return out


def min_overlap_objective(heights, tol: float = 1e-9) -> float:
    """Upper-bound witness value for the minimum overlap constant.

    ``heights`` describe h on [0, 2] with values in [0, 1] and unit integral.
    The max over shifts is attained at a knot since M is piecewise linear.
    """
    h = np.asarray(heights, dtype=float)
    if np.any(h < -tol) or np.any(h > 1 + tol):
        raise ValueError("heights must lie in [0, 1]")
    mass = float(h.sum() * 2.0 / len(h))
    if abs(mass - 1.0) > tol:
        raise MassViolated(f"integral is {mass}, expected 1")
    return float(overlap_knots(h).max())
