"""Hermite-combination test functions for the sign-uncertainty constant.

Test functions have the form ``f(x) = P(x) exp(-pi x^2)`` with
``P = sum_k c_k H_{4k}(sqrt(2 pi) x)`` and ``H_n`` the physicists' Hermite
polynomials; each term is then a Fourier eigenfunction with eigenvalue 1, so
``f`` is its own transform. In the unscaled variable the largest sign change
``r`` of ``P(x)/x^2`` gives the bound ``r^2 / (2 pi)``.

By default the coefficient list is completed with one more ``H_{4k}`` term
chosen so that ``P(0) = 0``; three published coefficients therefore describe
a degree-12 polynomial.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite, polynomial


class NoPositiveRoot(ValueError):
    pass


class ConstraintViolated(ValueError):
    pass


def hermite_combination(coeffs: Sequence[float], complete: bool = True) -> np.ndarray:
    """Power-basis coefficients (ascending) of ``sum c_k H_{4k}(x)``."""
    herm = np.zeros(4 * len(coeffs) + 1)
    for k, c in enumerate(coeffs):
        herm[4 * k] = c
    if complete:
        top = 4 * len(coeffs)
        unit = np.zeros(top + 1)
        unit[top] = 1.0
        herm[top] = -hermite.herm2poly(herm)[0] / hermite.herm2poly(unit)[0]
    return hermite.herm2poly(herm)


def uncertainty_bound(coeffs: Sequence[float], complete: bool = True, tol: float = 1e-12) -> float:
    """``r_max^2 / (2 pi)`` for the even polynomial built from ``coeffs``.

    With ``complete=False`` the coefficients are used as given and must
    already satisfy ``P(0) = 0`` (relative tolerance ``tol``).
    """
    if not len(coeffs):
        raise ValueError("need at least one coefficient")
    p = hermite_combination(coeffs, complete=complete)
    scale = float(np.abs(p).max())
    if scale == 0:
        raise ConstraintViolated("polynomial is identically zero")
    if abs(p[0]) > tol * scale:
        raise ConstraintViolated(f"P(0) = {p[0]:.3e}, expected 0")
    # P is even with a double root at 0: P(x)/x^2 = Q(x^2)
    q = p[2::2]
    q = np.trim_zeros(q, "b")
    if len(q) < 2:
        raise NoPositiveRoot("P(x)/x^2 is constant")
    roots = polynomial.polyroots(q)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    positive = real[real > 0]
    if positive.size == 0:
        raise NoPositiveRoot("P(x)/x^2 has no positive root")
    return float(positive.max() / (2.0 * math.pi))
