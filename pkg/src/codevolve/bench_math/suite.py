"""Reference values the verifiers are expected to reproduce."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from . import autocorr, binpack, geometry, sumset, tensor, uncertainty


@dataclass
class Check:
    name: str
    value: float
    expected: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tol

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name:<28} value={self.value:.12g} expected={self.expected:.12g} tol={self.tol:g}"


def _kissing_d4() -> float:
    pts = []
    for i in range(4):
        for j in range(i + 1, 4):
            for si in (1, -1):
                for sj in (1, -1):
                    v = [0] * 4
                    v[i], v[j] = si, sj
                    pts.append(v)
    res = geometry.verify_kissing(pts)
    return float(res["count"]) if res["valid"] else -1.0


def _binpack_margin() -> float:
    jobs, machines = binpack.fixture_workload()
    ours = binpack.simulate_binpack(jobs, machines, binpack.binpack_score)
    base = binpack.simulate_binpack(jobs, machines, binpack.best_fit_cpu)
    total = lambda r: r["stranded_cpu"] + r["stranded_mem"]  # noqa: E731
    return float(total(ours) <= total(base))


def _strassen_rank() -> float:
    res = tensor.verify_decomposition(tensor.matmul_tensor(2, 2, 2), tensor.strassen_decomposition())
    return float(res["rank"]) if res["exact"] else -1.0


REFERENCE: list[tuple[str, Callable[[], float], float, float]] = [
    ("strassen_rank", _strassen_rank, 7.0, 0.0),
    ("uncertainty_bound", lambda: uncertainty.uncertainty_bound([0.32925, -0.01159, -8.9216e-5]), 0.3521, 5e-5),
    ("kissing_d4_count", _kissing_d4, 24.0, 0.0),
    ("autocorr_c1_constant", lambda: autocorr.autocorr_c1_upper([1.0]), 2.0, 1e-12),
    ("autocorr_c2_constant", lambda: autocorr.autocorr_c2_lower([1.0]), 2.0 / 3.0, 1e-12),
    ("min_overlap_half", lambda: autocorr.min_overlap_objective([0.5] * 8), 0.5, 1e-12),
    ("sumset_013", lambda: sumset.sumset_bound({0, 1, 3}), 1 + math.log(7 / 6) / math.log(7), 1e-12),
    ("binpack_score_example", lambda: binpack.binpack_score((1, 1), (2, 2)), -3.0, 0.0),
    ("binpack_fixture_not_worse", _binpack_margin, 1.0, 0.0),
]


def reference_checks() -> list[Check]:
    return [Check(name, fn(), expected, tol) for name, fn, expected, tol in REFERENCE]
