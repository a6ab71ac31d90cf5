"""Cascaded subprocess evaluation of candidate programs.

The evaluation command runs inside a fresh scratch directory holding the
candidate's files. It reports scores by printing one line::

    EVOLVE_METRICS: {"score": 1.0, "runtime": -3.2}

The last such line on stdout wins. Every problem is reported through
``EvaluationResult.failure``; nothing here raises for a bad candidate.
"""

from __future__ import annotations

import json
import logging
import math
import operator
import os
import re
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .model_provider import GenerationRequest, Provider
from .prompt_sampler import truncate_excerpt

log = logging.getLogger(__name__)

METRICS_PREFIX = "EVOLVE_METRICS: "
WARM_START_NAME = "warm_start"
ARTIFACT_NAME = "artifact"
FEEDBACK_PREFIX = "fb_"

TIMEOUT = "Timeout"
NONZERO_EXIT = "NonzeroExit"
BAD_METRICS = "BadMetrics"
STAGE_GATE = "StageGate"

_OPS = {
    ">=": operator.ge,
    ">": operator.gt,
    "<=": operator.le,
    "<": operator.lt,
    "==": operator.eq,
}
_RULE_RE = re.compile(r"^\s*(>=|<=|==|>|<)\s*(\S+)\s*$")


@dataclass(frozen=True)
class PassRule:
    metric: str
    op: str
    threshold: float

    def holds(self, metrics: Mapping[str, float]) -> bool:
        return self.metric in metrics and _OPS[self.op](metrics[self.metric], self.threshold)

    @classmethod
    def parse(cls, metric: str, text: str | float) -> PassRule:
        """``PassRule.parse("score", ">= 0.5")``; a bare number means ``>=``."""
        if isinstance(text, (int, float)):
            return cls(metric, ">=", float(text))
        m = _RULE_RE.match(text)
        if not m:
            raise ValueError(f"bad pass rule for {metric!r}: {text!r}")
        return cls(metric, m.group(1), float(m.group(2)))


@dataclass(frozen=True)
class CascadeStage:
    name: str
    command_args: tuple[str, ...] = ()
    timeout: float = 60.0
    pass_rule: tuple[PassRule, ...] = ()

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("stage timeout must be positive")


@dataclass
class EvaluationResult:
    metrics: dict[str, float] | None
    stages_passed: int = 0
    output_excerpt: str = ""
    duration: float = 0.0
    failure: str | None = None
    artifact: str | None = None
    stage_log: list[tuple[str, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failure is None


def parse_metrics(stdout: str) -> dict[str, float] | None:
    """Read the last metrics line; None if absent, malformed, non-numeric or non-finite."""
    line = None
    for raw in stdout.splitlines():
        if raw.startswith(METRICS_PREFIX):
            line = raw[len(METRICS_PREFIX):]
    if line is None:
        return None
    return _numeric_map(line)


def _numeric_map(text: str) -> dict[str, float] | None:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(doc, dict) or not doc:
        return None
    out = {}
    for k, v in doc.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            return None
        out[str(k)] = float(v)
    return out


def _format_command(template: Sequence[str], scratch: Path, files: Sequence[tuple[str, bytes]], stage: CascadeStage) -> list[str]:
    subs = {
        "python": sys.executable,
        "scratch": str(scratch),
        "main": str(scratch / files[0][0]),
        "stage": stage.name,
    }
    return [part.format(**subs) for part in template] + list(stage.command_args)


def _run_stage(cmd: list[str], cwd: Path, env: dict[str, str], timeout: float) -> tuple[str, str, int | None]:
    proc = subprocess.Popen(
        cmd,
        cwd=cwd,
        env=env,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        start_new_session=True,
    )
    try:
        out, err = proc.communicate(timeout=timeout)
        return out, err, proc.returncode
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
        return out or "", err or "", None


def default_stages(task) -> list[CascadeStage]:
    return list(task.cascade) or [CascadeStage("main")]


def evaluate(
    task,
    child_files: Sequence[tuple[str, bytes]],
    stages: Sequence[CascadeStage] | None = None,
    budget: float | None = None,
    warm_start: str | None = None,
    scratch_root: str | os.PathLike | None = None,
    excerpt_cap: int = 4096,
) -> EvaluationResult:
    """Run the cascade on one child.

    ``budget`` caps total wall-clock across stages (each stage timeout is
    clipped to what remains). ``warm_start`` is written to
    ``$EVOLVE_SCRATCH/warm_start``; if the program leaves
    ``$EVOLVE_SCRATCH/artifact`` behind, its text is returned as the artifact.
    """
    stages = list(stages) if stages is not None else default_stages(task)
    start = time.monotonic()
    result = EvaluationResult(metrics=None)
    outputs: list[str] = []
    scratch = Path(tempfile.mkdtemp(prefix="codevolve-", dir=scratch_root))
    try:
        for path, data in child_files:
            target = (scratch / path).resolve()
            if not target.is_relative_to(scratch.resolve()):
                raise ValueError(f"refusing to write {path!r} outside the scratch directory")
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
        if warm_start is not None:
            (scratch / WARM_START_NAME).write_text(warm_start, encoding="utf-8")
        for stage in stages:
            timeout = stage.timeout
            if budget is not None:
                timeout = min(timeout, budget - (time.monotonic() - start))
                if timeout <= 0:
                    result.failure = TIMEOUT
                    break
            env = dict(os.environ, EVOLVE_STAGE=stage.name, EVOLVE_SCRATCH=str(scratch))
            cmd = _format_command(task.eval_command, scratch, child_files, stage)
            t0 = time.monotonic()
            out, err, code = _run_stage(cmd, scratch, env, timeout)
            result.stage_log.append((stage.name, t0, time.monotonic()))
            outputs.append(out + err)
            if code is None:
                result.failure = TIMEOUT
                break
            if code != 0:
                result.failure = NONZERO_EXIT
                break
            metrics = parse_metrics(out)
            if metrics is None or any(r.metric not in metrics for r in stage.pass_rule):
                result.failure = BAD_METRICS
                break
            result.metrics = metrics
            result.stages_passed += 1
            if not all(rule.holds(metrics) for rule in stage.pass_rule):
                result.failure = STAGE_GATE
                break
        if result.failure is None and any(n not in result.metrics for n in task.metric_names):
            result.failure = BAD_METRICS
        artifact = scratch / ARTIFACT_NAME
        if artifact.is_file():
            result.artifact = artifact.read_text(encoding="utf-8", errors="replace")
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    result.output_excerpt = truncate_excerpt("".join(outputs), excerpt_cap)
    result.duration = time.monotonic() - start
    return result


def evaluate_parallel(
    task,
    children: Sequence[Sequence[tuple[str, bytes]]],
    pool_size: int = 4,
    **kwargs,
) -> list[EvaluationResult]:
    """Evaluate many children with at most ``pool_size`` in flight; results keep input order."""
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        return list(pool.map(lambda files: evaluate(task, files, **kwargs), children))


FEEDBACK_REQUEST = """\
{rubric}

Program:
{code}

Reply with a single JSON object mapping metric names to numbers, e.g. {{"simplicity": 0.5}}.
"""

_JSON_OBJ_RE = re.compile(r"\{[^{}]*\}")


def llm_feedback(provider: Provider, code: str, rubric: str, tier: str = "fast") -> tuple[dict[str, float], str | None]:
    """Grade ``code`` with one model call.

    Returns metrics renamed under the ``fb_`` prefix plus a failure tag
    (``BadMetrics`` when the reply holds no usable object).
    """
    result = provider.generate(GenerationRequest(FEEDBACK_REQUEST.format(rubric=rubric, code=code), tier=tier))
    if result.failure is not None:
        return {}, result.failure
    for m in _JSON_OBJ_RE.finditer(result.text):
        parsed = _numeric_map(m.group(0))
        if parsed:
            return {
                (k if k.startswith(FEEDBACK_PREFIX) else FEEDBACK_PREFIX + k): v
                for k, v in parsed.items()
            }, None
    return {}, BAD_METRICS
