"""Online two-resource bin packing with a pluggable machine-priority scorer."""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np


class ZeroFree(ValueError):
    pass


class ZeroResidual(ZeroDivisionError):
    pass


class Resources(NamedTuple):
    cpu: float
    mem: float


Scorer = Callable[[Resources, Resources], float]


def binpack_score(required: Sequence[float], free: Sequence[float]) -> float:
    """Balanced-residual priority: higher is better."""
    required, free = Resources(*required), Resources(*free)
    if free.cpu <= 0 or free.mem <= 0:
        raise ZeroFree(f"free resources must be positive, got {tuple(free)}")
    if required.cpu < 0 or required.mem < 0:
        raise ValueError("required resources must be non-negative")
    cpu_residual = required.cpu / free.cpu
    mem_residual = required.mem / free.mem
    if cpu_residual == 0 or mem_residual == 0:
        raise ZeroResidual("a residual is zero; the score is undefined")
    return -1.0 * (cpu_residual + mem_residual
                   + mem_residual / cpu_residual
                   + cpu_residual / mem_residual)


def best_fit_cpu(required: Sequence[float], free: Sequence[float]) -> float:
    """Baseline: prefer the machine left with the least free cpu."""
    return -(free[0] - required[0])


def simulate_binpack(jobs: Sequence[Sequence[float]], machines: Sequence[Sequence[float]],
                     scorer: Scorer, tol: float = 1e-12) -> dict:
    """Place jobs in arrival order on the feasible machine with the highest score.

    Ties go to the lowest machine index; a job no machine can hold is skipped.
    A machine counts as stranded when it cannot fit a probe job whose demand
    is the componentwise minimum over the skipped jobs (over all jobs when
    nothing was skipped); its leftover cpu and memory are summed.
    """
    free = np.array(machines, dtype=float).reshape(-1, 2)
    demands = np.array(jobs, dtype=float).reshape(-1, 2)
    placed = 0
    skipped = []
    for req in demands:
        best_idx, best_score = -1, -np.inf
        need = Resources(float(req[0]), float(req[1]))
        for idx in np.flatnonzero(np.all(free >= req - tol, axis=1) & np.all(free > 0, axis=1)):
            s = scorer(need, Resources(float(free[idx, 0]), float(free[idx, 1])))
            if s > best_score:
                best_idx, best_score = int(idx), s
        if best_idx < 0:
            skipped.append(req)
            continue
        free[best_idx] -= req
        placed += 1
    pool = np.array(skipped) if skipped else demands
    stranded_cpu = stranded_mem = 0.0
    if len(pool):
        probe = pool.min(axis=0)
        stuck = ~np.all(free >= probe - tol, axis=1)
        left = np.clip(free[stuck], 0.0, None)
        stranded_cpu, stranded_mem = float(left[:, 0].sum()), float(left[:, 1].sum())
    return {"placed": placed, "skipped": len(skipped),
            "stranded_cpu": stranded_cpu, "stranded_mem": stranded_mem}


def fixture_workload(seed: int = 2024, num_jobs: int = 500, num_machines: int = 50):
    """Seeded workload of cpu-heavy and memory-heavy jobs on unit machines."""
    rng = np.random.default_rng(seed)
    big = rng.uniform(0.05, 0.30, num_jobs)
    small = rng.uniform(0.01, 0.10, num_jobs)
    cpu_heavy = rng.random(num_jobs) < 0.5
    jobs = np.column_stack([np.where(cpu_heavy, big, small), np.where(cpu_heavy, small, big)])
    machines = np.ones((num_machines, 2))
    return jobs.round(4).tolist(), machines.tolist()
