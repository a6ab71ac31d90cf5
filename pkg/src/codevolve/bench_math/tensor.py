"""Matrix multiplication tensors and exact verification of their decompositions.

Layout convention. For ``<m,n,p>`` the tensor has shape ``(m*n, n*p, m*p)``.
``A`` (m x n) is flattened row-major to index ``i*n + j``, ``B`` (n x p) to
``k*p + l`` and ``C`` (m x p) to ``q*p + r``. An entry is 1 exactly when
``j == k``, ``i == q`` and ``l == r``, so a decomposition ``(U, V, W)`` yields
the algorithm ``C[q, r] = sum_t W[q*p+r, t] * (sum U[:, t]·vec(A)) * (sum V[:, t]·vec(B))``.

Factor entries live in the half-Gaussian lattice ``(a + b i) / 2`` with
integer ``a`` and ``b``. Exact checks work on the doubled integer parts:
the doubled triple products must sum to ``8 * T``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FAILED_RANK = -1_000_000.0


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class HalfGaussian:
    """The number ``(a + b i) / 2``."""

    a: int
    b: int = 0

    @classmethod
    def from_value(cls, value: complex | float | Fraction) -> HalfGaussian:
        """Exact conversion; raises if ``value`` is not on the half-Gaussian lattice."""
        z = complex(value) if not isinstance(value, Fraction) else complex(float(value))
        a2, b2 = 2 * z.real, 2 * z.imag
        if a2 != round(a2) or b2 != round(b2):
            raise ValueError(f"{value!r} is not a multiple of 1/2")
        return cls(int(round(a2)), int(round(b2)))

    @property
    def real(self) -> Fraction:
        return Fraction(self.a, 2)

    @property
    def imag(self) -> Fraction:
        return Fraction(self.b, 2)

    def __add__(self, other: HalfGaussian) -> HalfGaussian:
        return HalfGaussian(self.a + other.a, self.b + other.b)

    def __neg__(self) -> HalfGaussian:
        return HalfGaussian(-self.a, -self.b)

    def __sub__(self, other: HalfGaussian) -> HalfGaussian:
        return self + (-other)

    def __mul__(self, other: HalfGaussian) -> tuple[Fraction, Fraction]:
        """Products leave the lattice; returned as an exact ``(real, imag)`` pair."""
        re_ = self.a * other.a - self.b * other.b
        im = self.a * other.b + self.b * other.a
        return Fraction(re_, 4), Fraction(im, 4)

    def __str__(self) -> str:
        return f"{self.a}{self.b:+d}i/2"

    _TOKEN = re.compile(r"^\s*([+-]?\d+)\s*(?:([+-])\s*(\d+)\s*i)?\s*/\s*2\s*$")

    @classmethod
    def parse(cls, token: str) -> HalfGaussian:
        """Read ``"a+bi/2"``, ``"a-bi/2"`` or ``"a/2"``."""
        m = cls._TOKEN.match(token)
        if not m:
            raise ValueError(f"bad half-Gaussian token {token!r}")
        a = int(m.group(1))
        b = 0 if m.group(2) is None else int(m.group(3)) * (1 if m.group(2) == "+" else -1)
        return cls(a, b)


@dataclass(frozen=True)
class Tensor3D:
    dims: tuple[int, int, int]  # (m, n, p)
    entries: np.ndarray  # int64, shape (m*n, n*p, m*p)


@dataclass(frozen=True)
class Decomposition:
    """Rank-R factors stored doubled: ``U2 = 2*U`` as real and imaginary int arrays."""

    u_re: np.ndarray
    u_im: np.ndarray
    v_re: np.ndarray
    v_im: np.ndarray
    w_re: np.ndarray
    w_im: np.ndarray

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    @property
    def rank(self) -> int:
        return int(self.u_re.shape[1])

    @classmethod
    def from_values(cls, u, v, w) -> Decomposition:
        """Build from exact half-integer (possibly complex) factor matrices."""
        parts = []
        for mat in (u, v, w):
            arr = np.asarray(mat, dtype=complex)
            d_re, d_im = 2 * arr.real, 2 * arr.imag
            if not (np.array_equal(d_re, np.round(d_re)) and np.array_equal(d_im, np.round(d_im))):
                raise ValueError("factor entries must be multiples of 1/2")
            parts += [d_re.astype(np.int64), d_im.astype(np.int64)]
        return cls(*parts)

    def entry(self, factor: str, row: int, col: int) -> HalfGaussian:
        re_, im = getattr(self, f"{factor}_re"), getattr(self, f"{factor}_im")
        return HalfGaussian(int(re_[row, col]), int(im[row, col]))

    def values(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(
            (getattr(self, f"{f}_re") + 1j * getattr(self, f"{f}_im")) / 2 for f in "uvw"
        )


def matmul_tensor(m: int, n: int, p: int) -> Tensor3D:
    if min(m, n, p) < 1:
        raise ValueError("dimensions must be >= 1")
    t = np.zeros((m * n, n * p, m * p), dtype=np.int64)
    for i in range(m):
        for j in range(n):
            for l in range(p):
                t[i * n + j, j * p + l, i * p + l] = 1
    return Tensor3D((m, n, p), t)


def trivial_decomposition(m: int, n: int, p: int) -> Decomposition:
    """The rank-``mnp`` decomposition with one term per scalar product."""
    r = m * n * p
    u = np.zeros((m * n, r), dtype=np.int64)
    v = np.zeros((n * p, r), dtype=np.int64)
    w = np.zeros((m * p, r), dtype=np.int64)
    t = 0
    for i in range(m):
        for j in range(n):
            for l in range(p):
                u[i * n + j, t] = 2
                v[j * p + l, t] = 2
                w[i * p + l, t] = 2
                t += 1
    z = np.zeros_like
    return Decomposition(u, z(u), v, z(v), w, z(w))


def strassen_decomposition() -> Decomposition:
    """Strassen's rank-7 algorithm for ``<2,2,2>`` in this module's layout."""
    # rows: A11 A12 A21 A22 / B11 B12 B21 B22 / C11 C12 C21 C22
    u = [
        [1, 0, 1, 0, 1, -1, 0],
        [0, 0, 0, 0, 1, 0, 1],
        [0, 1, 0, 0, 0, 1, 0],
        [1, 1, 0, 1, 0, 0, -1],
    ]
    v = [
        [1, 1, 0, -1, 0, 1, 0],
        [0, 0, 1, 0, 0, 1, 0],
        [0, 0, 0, 1, 0, 0, 1],
        [1, 0, -1, 0, 1, 0, 1],
    ]
    w = [
        [1, 0, 0, 1, -1, 0, 1],
        [0, 0, 1, 0, 1, 0, 0],
        [0, 1, 0, 1, 0, 0, 0],
        [1, -1, 1, 0, 0, 1, 0],
    ]
    return Decomposition.from_values(u, v, w)


_LIMIT = 1 << 20


def reconstruct_doubled(d: Decomposition) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``8 * sum_r U⊗V⊗W`` as (real, imag) integer arrays."""
    if max(int(np.abs(a).max(initial=0)) for a in (d.u_re, d.u_im, d.v_re, d.v_im, d.w_re, d.w_im)) > _LIMIT:
        dtype = object
    else:
        dtype = np.int64
    ur, ui, vr, vi, wr, wi = (a.astype(dtype) for a in (d.u_re, d.u_im, d.v_re, d.v_im, d.w_re, d.w_im))
    # (ur + i ui)(vr + i vi) for each pair of rows and each term
    pr = np.einsum("ar,br->abr", ur, vr) - np.einsum("ar,br->abr", ui, vi)
    pi = np.einsum("ar,br->abr", ur, vi) + np.einsum("ar,br->abr", ui, vr)
    re_ = np.einsum("abr,cr->abc", pr, wr) - np.einsum("abr,cr->abc", pi, wi)
    im = np.einsum("abr,cr->abc", pr, wi) + np.einsum("abr,cr->abc", pi, wr)
    return re_, im


def verify_decomposition(t: Tensor3D, d: Decomposition) -> dict:
    """``{"exact": bool, "rank": R}``; exact means the terms sum to ``t`` with no imaginary residue."""
    shape = t.entries.shape
    if (d.u_re.shape[0], d.v_re.shape[0], d.w_re.shape[0]) != shape or not (
        d.u_re.shape[1] == d.v_re.shape[1] == d.w_re.shape[1]
    ):
        raise ShapeMismatch(f"factors do not match tensor of shape {shape}")
    re_, im = reconstruct_doubled(d)
    exact = bool(np.all(re_ == 8 * t.entries) and np.all(im == 0))
    return {"exact": exact, "rank": d.rank}


def round_to_half(u, v, w) -> Decomposition:
    """Snap real or complex factors to the nearest multiple of 1/2.

    Ties go to the even multiple of 1/2 (``0.75 -> 1.0``, ``0.25 -> 0.0``),
    separately for real and imaginary parts.
    """
    parts = []
    for mat in (u, v, w):
        arr = np.asarray(mat, dtype=complex)
        parts += [np.rint(2 * arr.real).astype(np.int64), np.rint(2 * arr.imag).astype(np.int64)]
    return Decomposition(*parts)


def score_tensor_search(per_seed_ranks: list[int | None]) -> dict[str, float]:
    """Hill-climbing signal: best rank (negated), share of seeds at it, share succeeding."""
    if not per_seed_ranks:
        raise ValueError("need at least one seed")
    achieved = [r for r in per_seed_ranks if r is not None]
    total = len(per_seed_ranks)
    if not achieved:
        return {"best_rank_neg": FAILED_RANK, "fraction_at_best": 0.0, "success_rate": 0.0}
    best = min(achieved)
    return {
        "best_rank_neg": -float(best),
        "fraction_at_best": achieved.count(best) / total,
        "success_rate": len(achieved) / total,
    }
