"""Task definitions: evolve-block parsing and program reassembly.

Source files are split into alternating skeleton and evolve segments. A line
containing ``EVOLVE-BLOCK-START`` opens a block and a line containing
``EVOLVE-BLOCK-END`` closes it; the comment leader does not matter, so
``#``, ``//`` and ``;`` style files all work. Marker lines belong to the
skeleton and are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import PurePosixPath, PureWindowsPath
from typing import Literal, Mapping, Sequence

START_TOKEN = "EVOLVE-BLOCK-START"
END_TOKEN = "EVOLVE-BLOCK-END"


class TaskSpecError(ValueError):
    """Base class for task parsing errors."""


class UnmatchedMarker(TaskSpecError):
    pass


class NestedMarker(TaskSpecError):
    pass


class NoEvolveBlock(TaskSpecError):
    pass


class ArityMismatch(TaskSpecError):
    pass


class UnsafePath(TaskSpecError):
    """A source path that would escape the evaluation directory."""


class SkeletonMismatch(TaskSpecError):
    pass


@dataclass(frozen=True)
class Segment:
    kind: Literal["skeleton", "evolve"]
    text: str
    block_id: int | None = None


@dataclass(frozen=True)
class SourceFile:
    path: str
    segments: tuple[Segment, ...]

    @property
    def text(self) -> str:
        return "".join(s.text for s in self.segments)

    @property
    def blocks(self) -> list[Segment]:
        return [s for s in self.segments if s.kind == "evolve"]

    @property
    def skeleton(self) -> list[str]:
        return [s.text for s in self.segments if s.kind == "skeleton"]


@dataclass(frozen=True)
class Objective:
    """Weighted mean over named metrics; equal weights by default."""

    metric_names: tuple[str, ...]
    weights: Mapping[str, float] | None = None

    def __call__(self, metrics: Mapping[str, float]) -> float:
        weights = self.weights or {name: 1.0 for name in self.metric_names}
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("objective weights must sum to a positive value")
        return sum(w * float(metrics[name]) for name, w in weights.items()) / total


@dataclass(frozen=True)
class Budget:
    max_candidates: int = 100
    wallclock: float = 3600.0


@dataclass
class TaskSpec:
    files: list[SourceFile]
    eval_command: list[str]
    metric_names: list[str]
    cascade: list = field(default_factory=list)  # list[evaluator.CascadeStage]
    prompt_config: object | None = None  # prompt_sampler.PromptConfig
    objective: Objective | None = None
    budget: Budget = field(default_factory=Budget)
    abstraction_mode: str = "direct-solution"
    full_rewrite_blocks: frozenset[int] = frozenset()
    feedback_rubric: str | None = None

    def __post_init__(self) -> None:
        if self.objective is None:
            self.objective = Objective(tuple(self.metric_names))
        for stage in self.cascade:
            for rule in getattr(stage, "pass_rule", ()):
                if rule.metric not in self.metric_names:
                    raise TaskSpecError(
                        f"stage {stage.name!r} gates on unknown metric {rule.metric!r}"
                    )

    @property
    def num_blocks(self) -> int:
        return sum(len(f.blocks) for f in self.files)

    def block_texts(self) -> list[str]:
        """Initial evolve-block contents in global block_id order."""
        return [b.text for f in self.files for b in f.blocks]

    def original_files(self) -> list[tuple[str, bytes]]:
        return [(f.path, f.text.encode("utf-8")) for f in self.files]


def _split_file(path: str, text: str, first_id: int) -> SourceFile:
    segments: list[Segment] = []
    skeleton: list[str] = []
    body: list[str] = []
    in_block = False
    block_id = first_id
    for lineno, line in enumerate(text.splitlines(keepends=True), start=1):
        is_start = START_TOKEN in line
        is_end = END_TOKEN in line
        if is_start and is_end:
            raise UnmatchedMarker(f"{path}:{lineno}: START and END on one line")
        if is_start:
            if in_block:
                raise NestedMarker(f"{path}:{lineno}: START inside an open block")
            skeleton.append(line)
            segments.append(Segment("skeleton", "".join(skeleton)))
            skeleton = []
            in_block = True
        elif is_end:
            if not in_block:
                raise UnmatchedMarker(f"{path}:{lineno}: END without START")
            segments.append(Segment("evolve", "".join(body), block_id))
            block_id += 1
            body = []
            skeleton.append(line)
            in_block = False
        elif in_block:
            body.append(line)
        else:
            skeleton.append(line)
    if in_block:
        raise UnmatchedMarker(f"{path}: START without END")
    segments.append(Segment("skeleton", "".join(skeleton)))
    return SourceFile(path, tuple(segments))


def parse_sources(raw_files: Sequence[tuple[str, bytes]]) -> list[SourceFile]:
    """Split files into segments; block ids run in file order, then textual order."""
    files = []
    next_id = 0
    for path, data in raw_files:
        pure = PurePosixPath(path)
        if pure.is_absolute() or PureWindowsPath(path).drive or ".." in pure.parts or not pure.parts:
            raise UnsafePath(f"{path!r}: source paths must be relative and stay inside the task")
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        sf = _split_file(path, text, next_id)
        next_id += len(sf.blocks)
        files.append(sf)
    if next_id == 0:
        raise NoEvolveBlock("no EVOLVE-BLOCK markers found in any file")
    return files


def parse_task(raw_files: Sequence[tuple[str, bytes]], config: Mapping) -> TaskSpec:
    """Build a TaskSpec from source files and an already-validated config mapping.

    ``config`` needs at least ``eval_command`` and ``metric_names``; the other
    TaskSpec fields are taken from it when present.
    """
    for key in ("eval_command", "metric_names"):
        if key not in config:
            raise TaskSpecError(f"config is missing {key!r}")
    files = parse_sources(raw_files)
    cmd = config["eval_command"]
    if isinstance(cmd, str):
        import shlex

        cmd = shlex.split(cmd)
    names = list(config["metric_names"])
    weights = config.get("objective")
    return TaskSpec(
        files=files,
        eval_command=list(cmd),
        metric_names=names,
        cascade=list(config.get("cascade", [])),
        prompt_config=config.get("prompt_config"),
        objective=Objective(tuple(names), dict(weights) if weights else None),
        budget=config.get("budget", Budget()),
        abstraction_mode=config.get("abstraction_mode", "direct-solution"),
        full_rewrite_blocks=frozenset(config.get("full_rewrite_blocks", ())),
        feedback_rubric=config.get("feedback_rubric"),
    )


def assemble(task: TaskSpec, block_texts: Sequence[str]) -> list[tuple[str, bytes]]:
    """Substitute ``block_texts`` into the skeleton, returning file contents."""
    if len(block_texts) != task.num_blocks:
        raise ArityMismatch(f"expected {task.num_blocks} block texts, got {len(block_texts)}")
    out = []
    for f in task.files:
        parts = [
            block_texts[s.block_id] if s.kind == "evolve" else s.text for s in f.segments
        ]
        out.append((f.path, "".join(parts).encode("utf-8")))
    return out


def extract_blocks(task: TaskSpec, files: Sequence[tuple[str, bytes]]) -> list[str]:
    """Read evolve-block texts back out of files that share the task skeleton."""
    if [p for p, _ in files] != [f.path for f in task.files]:
        raise SkeletonMismatch("file list differs from the task")
    blocks: list[str] = []
    for (path, data), original in zip(files, task.files):
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        try:
            parsed = _split_file(path, text, len(blocks))
        except TaskSpecError as exc:
            raise SkeletonMismatch(str(exc)) from exc
        if parsed.skeleton != original.skeleton:
            raise SkeletonMismatch(f"{path}: skeleton differs from the original")
        blocks.extend(b.text for b in parsed.blocks)
    return blocks


def render_program(files: Sequence[tuple[str, bytes]]) -> str:
    """Join files into one text for prompts; single-file tasks render bare."""
    if len(files) == 1:
        return files[0][1].decode("utf-8")
    return "".join(f"--- {path}\n{data.decode('utf-8')}" for path, data in files)
