"""Plain-text certificate formats and a registry of verifiers.

Every format ignores blank lines and lines starting with ``#``.

- ``tensor``: first line ``m n p R``, then the ``mn`` rows of U, ``np`` rows
  of V and ``mp`` rows of W, each row holding R tokens ``a+bi/2``.
- ``kissing``: one integer point per row.
- ``circles``: optional ``width <w>`` line (rectangle ``w x (2-w)``), then
  ``x y r`` rows; without it the container is the unit square.
- ``hexagons``: ``L <side>`` line, then ``x y rotation`` rows.
- ``ratio``, ``heilbronn_triangle``, ``heilbronn_convex``: one point per row.
- step functions (``autocorr_c1``, ``autocorr_c2``, ``autocorr_c3``,
  ``min_overlap``): ``n`` then ``n`` heights, whitespace separated.
- ``sumset``: integers, whitespace separated.
- ``uncertainty``: Hermite coefficients ``c0 c1 ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import autocorr, geometry, sumset, tensor, uncertainty


class UnknownProblem(KeyError):
    pass


class MalformedCertificate(ValueError):
    pass


@dataclass
class Verdict:
    valid: bool
    value: float | None = None
    detail: str = ""

    def __str__(self) -> str:
        head = "valid" if self.valid else "invalid"
        parts = [head]
        if self.detail:
            parts.append(self.detail)
        elif self.value is not None:
            parts.append(f"value {self.value:.12g}")
        return ", ".join(parts)


def _lines(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            out.append(s)
    return out


def _rows(lines: list[str], width: int | None = None, cast=float) -> list[list]:
    rows = []
    for k, line in enumerate(lines):
        try:
            row = [cast(tok) for tok in line.split()]
        except ValueError as exc:
            raise MalformedCertificate(f"row {k + 1}: {exc}") from None
        if width is not None and len(row) != width:
            raise MalformedCertificate(f"row {k + 1}: expected {width} fields, got {len(row)}")
        rows.append(row)
    if not rows:
        raise MalformedCertificate("no data rows")
    if len({len(r) for r in rows}) != 1:
        raise MalformedCertificate("rows have differing lengths")
    return rows


def _numbers(text: str, cast=float) -> list:
    try:
        return [cast(tok) for line in _lines(text) for tok in line.split()]
    except ValueError as exc:
        raise MalformedCertificate(str(exc)) from None


def parse_tensor(text: str) -> tuple[tensor.Tensor3D, tensor.Decomposition]:
    lines = _lines(text)
    if not lines:
        raise MalformedCertificate("empty certificate")
    try:
        m, n, p, r = (int(t) for t in lines[0].split())
    except ValueError:
        raise MalformedCertificate("first line must be 'm n p R'") from None
    if min(m, n, p, r) < 1:
        raise MalformedCertificate("dimensions and rank must be >= 1")
    body = lines[1:]
    sizes = (m * n, n * p, m * p)
    if len(body) != sum(sizes):
        raise MalformedCertificate(f"expected {sum(sizes)} factor rows, got {len(body)}")
    parts = []
    start = 0
    for size in sizes:
        chunk = body[start:start + size]
        start += size
        re_ = np.zeros((size, r), dtype=np.int64)
        im = np.zeros((size, r), dtype=np.int64)
        for i, line in enumerate(chunk):
            toks = line.split()
            if len(toks) != r:
                raise MalformedCertificate(f"factor row has {len(toks)} entries, expected {r}")
            for j, tok in enumerate(toks):
                try:
                    h = tensor.HalfGaussian.parse(tok)
                except ValueError as exc:
                    raise MalformedCertificate(str(exc)) from None
                re_[i, j], im[i, j] = h.a, h.b
        parts += [re_, im]
    return tensor.matmul_tensor(m, n, p), tensor.Decomposition(*parts)


def format_tensor(dims: tuple[int, int, int], d: tensor.Decomposition) -> str:
    lines = [f"{dims[0]} {dims[1]} {dims[2]} {d.rank}"]
    for f in "uvw":
        re_, im = getattr(d, f"{f}_re"), getattr(d, f"{f}_im")
        for i in range(re_.shape[0]):
            lines.append(" ".join(str(tensor.HalfGaussian(int(a), int(b))) for a, b in zip(re_[i], im[i])))
    return "\n".join(lines) + "\n"


def _heights(text: str) -> list[float]:
    nums = _numbers(text)
    if not nums:
        raise MalformedCertificate("empty certificate")
    n = nums[0]
    if n != int(n) or n < 1:
        raise MalformedCertificate("first value must be the number of steps")
    heights = nums[1:]
    if len(heights) != int(n):
        raise MalformedCertificate(f"expected {int(n)} heights, got {len(heights)}")
    return heights


def _keyed(text: str, key: str) -> tuple[float | None, list[str]]:
    lines = _lines(text)
    if lines and lines[0].split()[0].lower() == key:
        toks = lines[0].split()
        if len(toks) != 2:
            raise MalformedCertificate(f"'{key}' line needs one value")
        try:
            return float(toks[1]), lines[1:]
        except ValueError:
            raise MalformedCertificate(f"bad {key} value {toks[1]!r}") from None
    return None, lines


def _verify_tensor(text: str) -> Verdict:
    t, d = parse_tensor(text)
    try:
        res = tensor.verify_decomposition(t, d)
    except tensor.ShapeMismatch as exc:
        raise MalformedCertificate(str(exc)) from None
    return Verdict(res["exact"], float(res["rank"]), f"rank {res['rank']}")


def _verify_kissing(text: str) -> Verdict:
    rows = _rows(_lines(text), cast=int)
    try:
        res = geometry.verify_kissing(rows)
    except geometry.ZeroPoint as exc:
        return Verdict(False, None, str(exc))
    return Verdict(res["valid"], float(res["count"]), f"count {res['count']}")


def _verify_circles(text: str) -> Verdict:
    width, lines = _keyed(text, "width")
    rows = _rows(lines, width=3)
    if any(r[2] <= 0 for r in rows):
        return Verdict(False, None, "non-positive radius")
    res = geometry.verify_circle_packing(rows, width=1.0 if width is None else width,
                                         height=1.0 if width is None else None)
    return Verdict(res["valid"], res["sum_radii"], f"sum_radii {res['sum_radii']:.12g}")


def _verify_hexagons(text: str) -> Verdict:
    side, lines = _keyed(text, "l")
    if side is None:
        raise MalformedCertificate("missing 'L <side>' line")
    rows = _rows(lines, width=3)
    if side <= 0:
        raise MalformedCertificate("outer side must be positive")
    res = geometry.verify_hexagon_packing(rows, side)
    return Verdict(res["valid"], side, f"count {res['count']}, side {side:.12g}")


def _objective(fn: Callable, errors: tuple) -> Callable[[object], Verdict]:
    def run(arg) -> Verdict:
        try:
            return Verdict(True, float(fn(arg)))
        except errors as exc:
            return Verdict(False, None, f"{type(exc).__name__}: {exc}")
    return run


_STEP_ERRORS = (autocorr.ZeroIntegral, autocorr.MassViolated, ValueError)
_GEOM_ERRORS = (geometry.DuplicatePoints, geometry.OutsideRegion, geometry.CollinearAll, ValueError)

PROBLEMS: dict[str, Callable[[str], Verdict]] = {
    "tensor": _verify_tensor,
    "kissing": _verify_kissing,
    "circles": _verify_circles,
    "hexagons": _verify_hexagons,
    "ratio": lambda t: _objective(geometry.ratio_objective, _GEOM_ERRORS)(_rows(_lines(t))),
    "heilbronn_triangle": lambda t: _objective(
        lambda p: geometry.heilbronn_objective(p, "triangle"), _GEOM_ERRORS)(_rows(_lines(t), width=2)),
    "heilbronn_convex": lambda t: _objective(
        lambda p: geometry.heilbronn_objective(p, "convex"), _GEOM_ERRORS)(_rows(_lines(t), width=2)),
    "autocorr_c1": lambda t: _objective(autocorr.autocorr_c1_upper, _STEP_ERRORS)(_heights(t)),
    "autocorr_c2": lambda t: _objective(autocorr.autocorr_c2_lower, _STEP_ERRORS)(_heights(t)),
    "autocorr_c3": lambda t: _objective(autocorr.autocorr_c3_upper, _STEP_ERRORS)(_heights(t)),
    "min_overlap": lambda t: _objective(autocorr.min_overlap_objective, _STEP_ERRORS)(_heights(t)),
    "sumset": lambda t: _objective(
        sumset.sumset_bound, (sumset.SideConditionViolated, sumset.ZeroNotInSet, ValueError))(
        _numbers(t, int) or _raise_empty()),
    "uncertainty": lambda t: _objective(
        uncertainty.uncertainty_bound, (uncertainty.NoPositiveRoot, uncertainty.ConstraintViolated))(
        _numbers(t) or _raise_empty()),
}


def _raise_empty():
    raise MalformedCertificate("empty certificate")


def verify_text(problem: str, text: str) -> Verdict:
    if problem not in PROBLEMS:
        raise UnknownProblem(problem)
    return PROBLEMS[problem](text)


def verify_file(problem: str, path: str | Path) -> Verdict:
    if problem not in PROBLEMS:
        raise UnknownProblem(problem)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MalformedCertificate(f"cannot read {path}: {exc}") from None
    return verify_text(problem, text)
