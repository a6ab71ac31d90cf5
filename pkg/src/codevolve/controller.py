"""Asynchronous evolution loop: sample, prompt, generate, mutate, evaluate, register."""

from __future__ import annotations

import asyncio
import dataclasses
import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from . import evaluator as ev
from .model_provider import GenerationRequest, Provider, generate_with_deadline, pick_tier
from .mutation import apply_diffs, apply_full_rewrite, parse_diffs, NO_DIFF_FOUND
from .program_db import ArchiveConfig, Candidate, ProgramDatabase, write_log_record
from .prompt_sampler import (
    MetaPromptStore,
    PromptConfig,
    RenderedCandidate,
    build_prompt,
    propose_meta,
    update_meta,
)
from .taskspec import TaskSpec, assemble, render_program

log = logging.getLogger(__name__)


class SeedEvaluationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class Ablations:
    no_evolution: bool = False
    no_context: bool = False
    no_meta_prompt: bool = False
    restrict_blocks: frozenset[int] | None = None
    fast_tier_only: bool = False


@dataclass
class RunConfig:
    budget_candidates: int = 100
    budget_wallclock: float = 3600.0
    prompt_workers: int = 1
    eval_workers: int = 1
    tier_weights: dict[str, float] = field(default_factory=lambda: {"fast": 0.8, "strong": 0.2})
    archive: ArchiveConfig = field(default_factory=ArchiveConfig)
    ablations: Ablations = field(default_factory=Ablations)
    generation_deadline: float | None = None
    temperature: float = 1.0
    max_output: int = 16384
    meta_every: int = 10
    meta_epsilon: float = 0.2
    feedback: bool = False
    refine_rounds: int | None = None
    refine_time_budget: float | None = None
    out_dir: Path | None = None
    snapshot_every: int = 50
    scratch_root: str | None = None

    def __post_init__(self) -> None:
        if self.budget_candidates < 0 or self.budget_wallclock <= 0:
            raise ValueError("budgets must be positive")
        if self.prompt_workers < 1 or self.eval_workers < 1:
            raise ValueError("worker pools need at least one slot")


@dataclass
class RunReport:
    best: Candidate
    trajectory: list[float]
    counts: dict
    seed: int
    elapsed: float
    prompts: list[str] = field(default_factory=list)
    log_lines: list[str] = field(default_factory=list)
    db: ProgramDatabase | None = None
    meta_store: MetaPromptStore | None = None
    tiers_used: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "best_id": self.best.id,
            "best_objective": self.best.objective,
            "best_metrics": self.best.metrics,
            "trajectory": self.trajectory,
            "counts": self.counts,
            "seed": self.seed,
            "elapsed": self.elapsed,
        }


def capture_prompts(report: RunReport) -> Iterator[str]:
    """Every prompt built during the run, in build order."""
    yield from report.prompts


def _rendered(cand: Candidate, task: TaskSpec, include_excerpt: bool = True) -> RenderedCandidate:
    code = render_program(assemble(task, cand.block_texts))
    metrics = {k: v for k, v in cand.metrics.items() if k in task.metric_names}
    return RenderedCandidate(code, metrics, cand.eval_excerpt if include_excerpt else None)


class _Run:
    def __init__(self, task, cfg, provider, seed, initial_blocks, warm_start, on_prompt, resume=None):
        self.task = task
        self.cfg = cfg
        self.provider = provider
        self.seed = seed
        self.rng = random.Random(seed)
        self.db = resume if resume is not None else ProgramDatabase(cfg.archive, seed=seed)
        self.resumed = resume is not None
        self.meta = MetaPromptStore()
        self.initial_blocks = list(initial_blocks) if initial_blocks is not None else task.block_texts()
        self.warm_start = warm_start
        self.on_prompt = on_prompt
        self.prompt_cfg: PromptConfig = task.prompt_config or PromptConfig()
        if cfg.ablations.no_context:
            self.prompt_cfg = dataclasses.replace(self.prompt_cfg, explicit_context=[])
        self.meta_enabled = self.prompt_cfg.meta_prompt_enabled and not cfg.ablations.no_meta_prompt
        self.weights = {"fast": 1.0} if cfg.ablations.fast_tier_only else dict(cfg.tier_weights)
        self.counts = {"proposed": 0, "applied": 0, "succeeded": 0, "failed_by_tag": {}, "feedback_failures": 0}
        self.trajectory: list[float] = []
        self.prompts: list[str] = []
        self.log_lines: list[str] = []
        self.tiers_used: list[str] = []
        self.failures: list[str] = []
        self.eval_slots = asyncio.Semaphore(cfg.eval_workers)
        self.start = time.monotonic()
        self.seed_cand: Candidate | None = None
        self._log_fh = None
        if cfg.out_dir is not None:
            Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
            mode = "a" if self.resumed else "w"
            self._log_fh = open(Path(cfg.out_dir) / "candidates.jsonl", mode, encoding="utf-8")
            self._prompt_fh = open(Path(cfg.out_dir) / "prompts.jsonl", mode, encoding="utf-8")

    # -- bookkeeping -------------------------------------------------------

    def _time_left(self) -> float:
        return self.cfg.budget_wallclock - (time.monotonic() - self.start)

    def _record(self, cand: Candidate) -> None:
        self.db.register(cand)
        line = json.dumps(cand.to_record(), sort_keys=True)
        self.log_lines.append(line)
        if self._log_fh:
            write_log_record(self._log_fh, cand)
            self._log_fh.flush()
        self.trajectory.append(self.db.best.objective)
        if cand.failure:
            tags = self.counts["failed_by_tag"]
            tags[cand.failure] = tags.get(cand.failure, 0) + 1
        else:
            self.counts["succeeded"] += 1
        period = self.cfg.archive.migration_period
        if period > 0 and self.db.step % period == 0:
            self.db.migrate()
        if self.cfg.out_dir and self.cfg.snapshot_every and self.db.step % self.cfg.snapshot_every == 0:
            self._write_snapshot()
        log.info(
            "candidate %s island=%d objective=%s failure=%s best=%.6g",
            cand.id, cand.island, cand.objective, cand.failure, self.db.best.objective,
        )

    def _write_snapshot(self) -> None:
        (Path(self.cfg.out_dir) / "snapshot.json").write_bytes(self.db.snapshot())

    def close(self) -> None:
        if self._log_fh:
            self._log_fh.close()
            self._prompt_fh.close()
            self._write_snapshot()

    # -- seed ----------------------------------------------------------------

    async def seed_program(self) -> None:
        if self.resumed:
            self._adopt_snapshot()
            return
        files = assemble(self.task, self.initial_blocks)
        res = await asyncio.to_thread(
            ev.evaluate, self.task, files, None, self._time_left(), self.warm_start, self.cfg.scratch_root
        )
        if not res.ok:
            raise SeedEvaluationFailed(f"initial program failed evaluation: {res.failure}\n{res.output_excerpt}")
        cand = Candidate(
            id="c000000",
            block_texts=self.initial_blocks,
            metrics=res.metrics,
            objective=self.task.objective(res.metrics),
            eval_excerpt=res.output_excerpt,
            artifact=res.artifact,
        )
        self.db.register(cand, islands=range(self.cfg.archive.num_islands))
        self.seed_cand = cand
        line = json.dumps(cand.to_record(), sort_keys=True)
        self.log_lines.append(line)
        if self._log_fh:
            write_log_record(self._log_fh, cand)
        self.trajectory.append(cand.objective)

    def _adopt_snapshot(self) -> None:
        if "c000000" not in self.db.candidates:
            raise SeedEvaluationFailed("snapshot holds no seed program")
        self.seed_cand = self.db.candidates["c000000"]
        # the seed registration ticked the step counter once
        self.counts["proposed"] = self.db.step - 1
        self.counts["failed_by_tag"] = dict(self.db.failures)
        self.counts["succeeded"] = self.counts["proposed"] - sum(self.db.failures.values())
        self.trajectory.append(self.db.best.objective)

    # -- one proposal --------------------------------------------------------

    async def propose(self, index: int) -> None:
        task, cfg = self.task, self.cfg
        island = index % cfg.archive.num_islands
        cid = f"c{index + 1:06d}"
        if cfg.ablations.no_evolution:
            parent, inspirations = self.seed_cand, []
        else:
            parent = self.db.sample_parent(island)
            inspirations = self.db.sample_inspirations(
                island, self.prompt_cfg.num_inspirations, exclude=parent.id
            )
        meta = None
        if self.meta_enabled:
            if cfg.meta_every > 0 and index % cfg.meta_every == 0:
                fresh = await asyncio.to_thread(propose_meta, self.provider, self.meta.best())
                if fresh is not None:
                    self.meta.add(fresh)
            meta = self.meta.select(self.rng, cfg.meta_epsilon)
        tier = pick_tier(self.weights, self.rng).name
        rewrite_block = None
        mutable = cfg.ablations.restrict_blocks
        if task.full_rewrite_blocks:
            choices = sorted(task.full_rewrite_blocks if mutable is None else task.full_rewrite_blocks & mutable)
            rewrite_block = self.rng.choice(choices) if choices else None
        prompt = build_prompt(
            _rendered(parent, task, self.prompt_cfg.include_results),
            [_rendered(c, task, self.prompt_cfg.include_results) for c in inspirations],
            self.prompt_cfg,
            meta,
            self.rng,
            rewrite_block=rewrite_block,
        )
        self.prompts.append(prompt)
        if self.on_prompt:
            self.on_prompt(prompt)
        if self._log_fh:
            self._prompt_fh.write(json.dumps({"id": cid, "prompt": prompt}) + "\n")

        def fail(tag: str, blocks=None, excerpt: str = "") -> None:
            self.failures.append(tag)
            self._record(Candidate(
                id=cid, block_texts=list(blocks or parent.block_texts), parent_id=parent.id,
                island=island, birth_step=self.db.step, failure=tag, eval_excerpt=excerpt,
            ))
            if meta is not None:
                update_meta(self.meta, meta, 0.0)

        req = GenerationRequest(prompt, tier=tier, max_output=cfg.max_output,
                                temperature=cfg.temperature, request_id=cid)
        gen = await asyncio.to_thread(generate_with_deadline, self.provider, req, cfg.generation_deadline)
        self.tiers_used.append(gen.tier_used)
        if gen.failure is not None:
            return fail(gen.failure)
        parent_files = assemble(task, parent.block_texts)
        if rewrite_block is not None:
            mut = apply_full_rewrite(task, parent_files, gen.text, rewrite_block)
        else:
            diffs = parse_diffs(gen.text)
            if not diffs:
                return fail(NO_DIFF_FOUND)
            mut = apply_diffs(task, parent_files, diffs, mutable_blocks=mutable)
        if not mut.ok:
            return fail(mut.failure)
        self.counts["applied"] += 1
        async with self.eval_slots:
            res = await asyncio.to_thread(
                ev.evaluate, task, mut.child_files, None, None, self.warm_start, cfg.scratch_root
            )
        if not res.ok:
            return fail(res.failure, mut.block_texts, res.output_excerpt)
        metrics = dict(res.metrics)
        if cfg.feedback and task.feedback_rubric:
            fb, tag = await asyncio.to_thread(
                ev.llm_feedback, self.provider, render_program(mut.child_files), task.feedback_rubric
            )
            metrics.update(fb)
            if tag:
                self.counts["feedback_failures"] += 1
        child = Candidate(
            id=cid, block_texts=mut.block_texts, metrics=metrics,
            objective=task.objective(metrics), parent_id=parent.id, island=island,
            birth_step=self.db.step, eval_excerpt=res.output_excerpt, artifact=res.artifact,
        )
        self._record(child)
        if meta is not None:
            update_meta(self.meta, meta, child.objective - parent.objective)

    async def worker(self) -> None:
        while self.counts["proposed"] < self.cfg.budget_candidates and self._time_left() > 0:
            index = self.counts["proposed"]
            self.counts["proposed"] += 1
            await self.propose(index)

    async def main(self) -> RunReport:
        try:
            await self.seed_program()
            await asyncio.gather(*(self.worker() for _ in range(self.cfg.prompt_workers)))
        finally:
            self.close()
        return RunReport(
            best=self.db.best,
            trajectory=self.trajectory,
            counts=self.counts,
            seed=self.seed,
            elapsed=time.monotonic() - self.start,
            prompts=self.prompts,
            log_lines=self.log_lines,
            db=self.db,
            meta_store=self.meta,
            tiers_used=self.tiers_used,
            failures=self.failures,
        )


def run(
    task: TaskSpec,
    cfg: RunConfig,
    provider: Provider,
    rng_seed: int = 0,
    *,
    initial_blocks: list[str] | None = None,
    warm_start: str | None = None,
    on_prompt: Callable[[str], None] | None = None,
    resume: ProgramDatabase | None = None,
) -> RunReport:
    """Evolve ``task`` until a budget runs out.

    Raises SeedEvaluationFailed when the initial program does not score.
    With one prompt worker, a deterministic provider and a deterministic
    evaluation program, the candidate log is reproducible for a fixed seed.

    ``resume`` continues from a restored database: the seed is not
    re-evaluated and proposals go on until ``budget_candidates`` in total.
    """
    return asyncio.run(
        _Run(task, cfg, provider, rng_seed, initial_blocks, warm_start, on_prompt, resume).main()
    )


def refine_loop(
    task: TaskSpec,
    cfg: RunConfig,
    provider: Provider,
    warm_start: str | None = None,
    rng_seed: int = 0,
    on_prompt: Callable[[str], None] | None = None,
) -> RunReport:
    """Rounds of :func:`run`, each starting from the previous round's best program.

    The best candidate's artifact is handed to the next round as its warm
    start. ``cfg.refine_time_budget`` (if set) replaces the wall-clock budget
    of every round. The combined trajectory carries the running best across
    rounds, so it never decreases.
    """
    rounds = cfg.refine_rounds or 1
    round_cfg = cfg
    if cfg.refine_time_budget is not None:
        round_cfg = dataclasses.replace(cfg, budget_wallclock=cfg.refine_time_budget)
    blocks = None
    best: Candidate | None = None
    trajectory: list[float] = []
    prompts: list[str] = []
    log_lines: list[str] = []
    counts = {"proposed": 0, "applied": 0, "succeeded": 0, "failed_by_tag": {}, "feedback_failures": 0, "rounds": 0}
    tiers: list[str] = []
    failures: list[str] = []
    start = time.monotonic()
    report = None
    for r in range(rounds):
        this_cfg = round_cfg
        if cfg.out_dir is not None:
            this_cfg = dataclasses.replace(round_cfg, out_dir=Path(cfg.out_dir) / f"round{r}")
        report = run(task, this_cfg, provider, rng_seed + r, initial_blocks=blocks,
                     warm_start=warm_start, on_prompt=on_prompt)
        counts["rounds"] += 1
        for key in ("proposed", "applied", "succeeded", "feedback_failures"):
            counts[key] += report.counts[key]
        for tag, n in report.counts["failed_by_tag"].items():
            counts["failed_by_tag"][tag] = counts["failed_by_tag"].get(tag, 0) + n
        if best is None or report.best.objective > best.objective:
            best = report.best
        floor = trajectory[-1] if trajectory else float("-inf")
        trajectory.extend(max(floor, v) for v in report.trajectory)
        prompts += report.prompts
        log_lines += report.log_lines
        tiers += report.tiers_used
        failures += report.failures
        blocks = best.block_texts
        if best.artifact is not None:
            warm_start = best.artifact
    return RunReport(
        best=best, trajectory=trajectory, counts=counts, seed=rng_seed,
        elapsed=time.monotonic() - start, prompts=prompts, log_lines=log_lines,
        db=report.db, meta_store=report.meta_store, tiers_used=tiers, failures=failures,
    )
