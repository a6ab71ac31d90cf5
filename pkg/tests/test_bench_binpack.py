from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codevolve.bench_math.binpack import (
    ZeroFree,
    ZeroResidual,
    best_fit_cpu,
    binpack_score,
    fixture_workload,
    simulate_binpack,
)

# frozen once from the loop simulator below on the seeded fixture
FIXTURE_SCORE = {"placed": 430, "skipped": 70, "stranded_cpu": 0.8357, "stranded_mem": 0.3406}
FIXTURE_BASELINE = {"placed": 413, "skipped": 87, "stranded_cpu": 4.4574, "stranded_mem": 1.9228}


def naive_simulate(jobs, machines, scorer, tol=1e-12):
    free = [list(m) for m in machines]
    skipped = []
    for cpu, mem in jobs:
        best, best_score = None, None
        for k, (fc, fm) in enumerate(free):
            if fc > 0 and fm > 0 and fc >= cpu - tol and fm >= mem - tol:
                s = scorer((cpu, mem), (fc, fm))
                if best is None or s > best_score:
                    best, best_score = k, s
        if best is None:
            skipped.append((cpu, mem))
        else:
            free[best][0] -= cpu
            free[best][1] -= mem
    pool = skipped or list(jobs)
    pc, pm = min(j[0] for j in pool), min(j[1] for j in pool)
    sc = sm = 0.0
    for fc, fm in free:
        if not (fc >= pc - tol and fm >= pm - tol):
            sc += max(fc, 0.0)
            sm += max(fm, 0.0)
    return {"placed": len(jobs) - len(skipped), "skipped": len(skipped), "stranded_cpu": sc, "stranded_mem": sm}


def test_score_example():
    assert binpack_score((1, 1), (2, 2)) == -3.0


def test_score_errors():
    with pytest.raises(ZeroResidual):
        binpack_score((0, 1), (2, 2))
    with pytest.raises(ZeroFree):
        binpack_score((1, 1), (0, 2))


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5))
def test_score_symmetric_and_bounded(rc, rm, fc, fm):
    s = binpack_score((rc, rm), (fc, fm))
    assert s == pytest.approx(binpack_score((rm, rc), (fm, fc)))
    # the two cross ratios alone sum to at least 2
    assert s <= -2.0


def test_small_cases():
    assert simulate_binpack([(0.5, 0.5)], [(1, 1)], binpack_score)["placed"] == 1
    res = simulate_binpack([(2, 0.1)], [(1, 1)], binpack_score)
    assert res == {"placed": 0, "skipped": 1, "stranded_cpu": 1.0, "stranded_mem": 1.0}


def test_matches_naive_simulator():
    jobs, machines = fixture_workload(seed=3, num_jobs=120, num_machines=10)
    for scorer in (binpack_score, best_fit_cpu):
        fast, slow = simulate_binpack(jobs, machines, scorer), naive_simulate(jobs, machines, scorer)
        assert fast == pytest.approx(slow, abs=1e-9)


def test_fixture_pinned():
    jobs, machines = fixture_workload()
    assert len(jobs) == 500 and len(machines) == 50
    ours = naive_simulate(jobs, machines, binpack_score)
    base = naive_simulate(jobs, machines, best_fit_cpu)
    assert ours == pytest.approx(FIXTURE_SCORE, abs=5e-5)
    assert base == pytest.approx(FIXTURE_BASELINE, abs=5e-5)
    assert simulate_binpack(jobs, machines, binpack_score) == pytest.approx(ours, abs=1e-9)
