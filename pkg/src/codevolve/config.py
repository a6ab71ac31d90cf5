"""YAML run configuration: one document describing the task, provider and run.

Relative paths resolve against the config file's directory, and the string
``{taskdir}`` inside ``eval_command`` expands to that directory so the
evaluation script can stay out of the evolved sources.
"""

from __future__ import annotations

import dataclasses
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .controller import Ablations, RunConfig
from .evaluator import CascadeStage, PassRule
from .model_provider import ConfigError, HttpProvider, Provider, load_stub_file, validate_weights
from .program_db import ArchiveConfig
from .prompt_sampler import PromptConfig
from .taskspec import Budget, TaskSpec, TaskSpecError, parse_task


class ConfigParseError(ValueError):
    """A config problem, located by field path and (when known) line number."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, path: str | None = None):
        self.field = field
        self.line = line
        self.path = path
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        prefix = ", ".join(where) + ": " if where else ""
        super().__init__(prefix + message)


TOP_LEVEL = {
    "files", "eval_command", "metric_names", "objective", "stages", "full_rewrite_blocks",
    "feedback_rubric", "abstraction_mode", "prompt", "archive", "provider", "run",
    "ablations", "refine",
}
RUN_KEYS = {
    "budget_candidates", "budget_wallclock", "prompt_workers", "eval_workers", "seed",
    "tier_weights", "generation_deadline", "temperature", "max_output", "meta_every",
    "meta_epsilon", "feedback", "snapshot_every", "out_dir", "scratch_root",
}
PROMPT_KEYS = {
    "context", "template", "placeholder_alternatives", "num_inspirations",
    "include_results", "meta_prompt", "excerpt_cap",
}
PROVIDER_KEYS = {"kind", "stub_script", "delay", "endpoint", "models", "token", "deadline", "max_in_flight"}
REFINE_KEYS = {"rounds", "time_budget", "warm_start"}


@dataclass
class LoadedConfig:
    task: TaskSpec
    run: RunConfig
    provider_settings: dict[str, Any]
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)
    warm_start: str | None = None
    source: str | None = None

    def make_provider(self, stub_script: str | Path | None = None) -> Provider:
        """Instantiate the configured provider; ``stub_script`` forces a stub."""
        settings = dict(self.provider_settings)
        if stub_script is not None:
            return load_stub_file(stub_script, delay=float(settings.get("delay", 0.0)))
        kind = settings.pop("kind", "stub")
        if kind == "stub":
            script = settings.get("stub_script")
            if not script:
                raise ConfigParseError("stub provider needs stub_script", "provider.stub_script", path=self.source)
            return load_stub_file(self.base_dir / script, delay=float(settings.get("delay", 0.0)))
        if kind == "http":
            kwargs = {k: settings[k] for k in ("endpoint", "models", "token", "deadline", "max_in_flight") if k in settings}
            try:
                return HttpProvider.from_env(**kwargs)
            except ConfigError as exc:
                raise ConfigParseError(str(exc), "provider", path=self.source) from None
        raise ConfigParseError(f"unknown provider kind {kind!r}", "provider.kind", path=self.source)


class _Located:
    """Field-path to line-number index over the composed YAML tree."""

    def __init__(self, node: yaml.Node | None):
        self.lines: dict[str, int] = {}
        if node is not None:
            self._walk(node, "")

    def _walk(self, node: yaml.Node, prefix: str) -> None:
        self.lines[prefix] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                self._walk(v, key)
                self.lines[key] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                self._walk(item, f"{prefix}[{i}]")

    def line(self, fieldpath: str) -> int | None:
        path = fieldpath
        while path:
            if path in self.lines:
                return self.lines[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return self.lines.get("")


class _Reader:
    def __init__(self, doc: dict, where: _Located, source: str | None):
        self.doc = doc
        self.where = where
        self.source = source

    def error(self, message: str, fieldpath: str) -> ConfigParseError:
        return ConfigParseError(message, fieldpath, self.where.line(fieldpath), self.source)

    def section(self, name: str, allowed: set[str]) -> dict:
        value = self.doc.get(name) or {}
        if not isinstance(value, dict):
            raise self.error("expected a mapping", name)
        unknown = sorted(set(value) - allowed)
        if unknown:
            raise self.error(f"unknown key {unknown[0]!r}", f"{name}.{unknown[0]}")
        return value

    def typed(self, mapping: dict, key: str, kind, fieldpath: str, default=None):
        if key not in mapping or mapping[key] is None:
            return default
        value = mapping[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is int and isinstance(value, bool) or not isinstance(value, kind):
            name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise self.error(f"expected {name}, got {type(value).__name__}", fieldpath)
        return value


def load_config(path: str | Path, overrides: dict | None = None) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}", path=str(path)) from None
    return parse_config(text, base_dir=path.resolve().parent, source=str(path), overrides=overrides)


def parse_config(text: str, base_dir: str | Path = ".", source: str | None = None,
                 overrides: dict | None = None) -> LoadedConfig:
    """Validate a YAML document and build the task and run configuration.

    ``overrides`` patches the ``run`` section (e.g. ``{"seed": 7}``).
    """
    base = Path(base_dir).resolve()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                               line=mark.line + 1 if mark else None, path=source) from None
    if not isinstance(doc, dict):
        raise ConfigParseError("config must be a mapping", line=1, path=source)
    r = _Reader(doc, _Located(node), source)
    unknown = sorted(set(doc) - TOP_LEVEL)
    if unknown:
        raise r.error(f"unknown key {unknown[0]!r}", unknown[0])
    for key in ("files", "eval_command", "metric_names"):
        if key not in doc or doc[key] in (None, "", []):
            raise r.error("required field is missing", key)

    files = doc["files"]
    if isinstance(files, str):
        files = [files]
    if not isinstance(files, list) or not all(isinstance(f, str) for f in files):
        raise r.error("expected a list of paths", "files")
    raw_files = []
    for i, name in enumerate(files):
        try:
            raw_files.append((name, (base / name).read_bytes()))
        except OSError as exc:
            raise r.error(f"cannot read source file: {exc.strerror}", f"files[{i}]") from None

    cmd = doc["eval_command"]
    if isinstance(cmd, str):
        cmd = shlex.split(cmd)
    if not isinstance(cmd, list) or not all(isinstance(c, str) for c in cmd):
        raise r.error("expected a command string or list", "eval_command")
    cmd = [c.replace("{taskdir}", str(base)) for c in cmd]

    metric_names = doc["metric_names"]
    if isinstance(metric_names, str):
        metric_names = [metric_names]
    if not isinstance(metric_names, list) or not all(isinstance(m, str) for m in metric_names):
        raise r.error("expected a list of metric names", "metric_names")

    objective = doc.get("objective")
    if objective is not None:
        if not isinstance(objective, dict):
            raise r.error("expected a mapping of metric weights", "objective")
        for k, v in objective.items():
            if k not in metric_names:
                raise r.error(f"weight for unknown metric {k!r}", f"objective.{k}")
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise r.error("weight must be a number", f"objective.{k}")

    stages = []
    for i, st in enumerate(doc.get("stages") or []):
        fp = f"stages[{i}]"
        if not isinstance(st, dict) or "name" not in st:
            raise r.error("stage needs a name", fp)
        args = st.get("args", [])
        if isinstance(args, str):
            args = shlex.split(args)
        rules = []
        for metric, rule in (st.get("pass") or {}).items():
            try:
                rules.append(PassRule.parse(str(metric), rule))
            except ValueError as exc:
                raise r.error(str(exc), f"{fp}.pass.{metric}") from None
        try:
            stages.append(CascadeStage(str(st["name"]), tuple(str(a) for a in args),
                                       float(st.get("timeout", 60.0)), tuple(rules)))
        except (TypeError, ValueError) as exc:
            raise r.error(str(exc), fp) from None

    prompt = r.section("prompt", PROMPT_KEYS)
    pkw: dict[str, Any] = {}
    if "context" in prompt:
        ctx = prompt["context"]
        pkw["explicit_context"] = [ctx] if isinstance(ctx, str) else list(ctx or [])
    for src, dst, kind in (("template", "template", str), ("num_inspirations", "num_inspirations", int),
                           ("include_results", "include_results", bool), ("meta_prompt", "meta_prompt_enabled", bool),
                           ("excerpt_cap", "excerpt_cap", int)):
        v = r.typed(prompt, src, kind, f"prompt.{src}")
        if v is not None:
            pkw[dst] = v
    if "placeholder_alternatives" in prompt:
        alts = prompt["placeholder_alternatives"]
        if not isinstance(alts, dict):
            raise r.error("expected a mapping", "prompt.placeholder_alternatives")
        pkw["placeholder_alternatives"] = {
            name: [(str(t), float(p)) for t, p in (opts.items() if isinstance(opts, dict) else opts)]
            for name, opts in alts.items()
        }
    try:
        prompt_cfg = PromptConfig(**pkw)
    except (TypeError, ValueError) as exc:
        raise r.error(str(exc), "prompt") from None

    archive = r.section("archive", {f.name for f in dataclasses.fields(ArchiveConfig)})
    try:
        archive_cfg = ArchiveConfig(**archive)
    except (TypeError, ValueError) as exc:
        raise r.error(str(exc), "archive") from None

    ablations = r.section("ablations", {f.name for f in dataclasses.fields(Ablations)})
    abl = dict(ablations)
    if abl.get("restrict_blocks") is not None:
        abl["restrict_blocks"] = frozenset(int(b) for b in abl["restrict_blocks"])
    for k, v in abl.items():
        if k != "restrict_blocks" and not isinstance(v, bool):
            raise r.error("expected true/false", f"ablations.{k}")
    ablation_cfg = Ablations(**abl)

    run = dict(r.section("run", RUN_KEYS))
    run.update(overrides or {})
    seed = r.typed(run, "seed", int, "run.seed", 0)
    rkw: dict[str, Any] = {}
    for key, kind in (("budget_candidates", int), ("budget_wallclock", float), ("prompt_workers", int),
                      ("eval_workers", int), ("generation_deadline", float), ("temperature", float),
                      ("max_output", int), ("meta_every", int), ("meta_epsilon", float),
                      ("feedback", bool), ("snapshot_every", int), ("scratch_root", str)):
        v = r.typed(run, key, kind, f"run.{key}")
        if v is not None:
            rkw[key] = v
    if run.get("tier_weights") is not None:
        try:
            validate_weights(run["tier_weights"])
        except (ConfigError, TypeError, ValueError) as exc:
            raise r.error(str(exc), "run.tier_weights") from None
        rkw["tier_weights"] = {str(k): float(v) for k, v in run["tier_weights"].items()}
    if run.get("out_dir") is not None:
        rkw["out_dir"] = base / str(run["out_dir"])

    refine = r.section("refine", REFINE_KEYS)
    warm_start = None
    if refine:
        rkw["refine_rounds"] = r.typed(refine, "rounds", int, "refine.rounds")
        rkw["refine_time_budget"] = r.typed(refine, "time_budget", float, "refine.time_budget")
        if refine.get("warm_start"):
            try:
                warm_start = (base / str(refine["warm_start"])).read_text(encoding="utf-8")
            except OSError as exc:
                raise r.error(f"cannot read warm start: {exc.strerror}", "refine.warm_start") from None
    try:
        run_cfg = RunConfig(archive=archive_cfg, ablations=ablation_cfg, **rkw)
    except ValueError as exc:
        raise r.error(str(exc), "run") from None

    provider = r.section("provider", PROVIDER_KEYS)

    rewrite = doc.get("full_rewrite_blocks") or []
    task_cfg = {
        "eval_command": cmd,
        "metric_names": metric_names,
        "objective": objective,
        "cascade": stages,
        "prompt_config": prompt_cfg,
        "budget": Budget(run_cfg.budget_candidates, run_cfg.budget_wallclock),
        "abstraction_mode": doc.get("abstraction_mode", "direct-solution"),
        "full_rewrite_blocks": [int(b) for b in rewrite],
        "feedback_rubric": doc.get("feedback_rubric"),
    }
    try:
        task = parse_task(raw_files, task_cfg)
    except TaskSpecError as exc:
        raise r.error(f"{type(exc).__name__}: {exc}", "files") from None
    bad = [b for b in task.full_rewrite_blocks if not 0 <= b < task.num_blocks]
    if bad:
        raise r.error(f"block {bad[0]} does not exist", "full_rewrite_blocks")
    return LoadedConfig(task, run_cfg, dict(provider), seed, base, warm_start, source)
