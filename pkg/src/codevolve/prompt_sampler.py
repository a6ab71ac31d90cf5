"""Evolution prompt assembly and the co-evolved meta-prompt store."""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .model_provider import GenerationRequest, Provider

DEFAULT_TEMPLATE = (
    "Act as an expert {expertise}. Your task is to iteratively improve the provided "
    "codebase. {encouragement}"
)

DEFAULT_ALTERNATIVES: dict[str, list[tuple[str, float]]] = {
    "expertise": [("software developer", 0.5), ("algorithm designer", 0.5)],
    "encouragement": [
        ("Prefer small, well-reasoned changes.", 0.5),
        ("Bold restructurings are welcome when they pay off.", 0.5),
    ],
}

DIFF_RULES = """\
SEARCH/REPLACE block rules:
Every change must use this exact format:
<<<<<<< SEARCH
(exact lines copied from the current program)
=======
(the lines that replace them)
>>>>>>> REPLACE
The SEARCH text must match the current program exactly, including whitespace.
Only edit code between EVOLVE-BLOCK-START and EVOLVE-BLOCK-END markers, and never edit the marker lines.
Make sure that the changes you propose are consistent with each other.

Task
Suggest a new idea to improve the code. Describe each change with a SEARCH/REPLACE block.
"""

REWRITE_RULES = """\
Output rules:
Reply with the complete new contents of evolve block {block_id} and nothing else.
A single fenced code block is accepted.
"""

PRIOR_HEADER = "- Prior programs"
CURRENT_HEADER = "- Current program"
CONTEXT_HEADER = "- Context"
META_HEADER = "- Additional guidance"

META_REQUEST = """\
You write short instructions that help a coding model improve programs.
Here are instruction snippets used so far, best first:
{snippets}
Propose one new, improved instruction snippet of at most three sentences. Reply with the snippet only.
"""


class MissingPlaceholder(KeyError):
    pass


class UnknownMeta(KeyError):
    pass


@dataclass
class PromptConfig:
    explicit_context: list[str] = field(default_factory=list)
    template: str = DEFAULT_TEMPLATE
    placeholder_alternatives: dict[str, list[tuple[str, float]]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_ALTERNATIVES.items()}
    )
    num_inspirations: int = 2
    include_results: bool = True
    meta_prompt_enabled: bool = True
    excerpt_cap: int = 4096

    def __post_init__(self) -> None:
        if self.num_inspirations < 0:
            raise ValueError("num_inspirations must be >= 0")
        for name, alts in self.placeholder_alternatives.items():
            total = sum(p for _, p in alts)
            if not alts or abs(total - 1.0) > 1e-9:
                raise ValueError(f"alternatives for {name!r} must sum to 1, got {total}")


@dataclass
class MetaPrompt:
    text: str
    score: float = 0.0
    uses: int = 0


@dataclass
class RenderedCandidate:
    code: str
    metrics: Mapping[str, float]
    excerpt: str | None = None


def truncate_excerpt(text: str, cap: int = 4096) -> str:
    """Keep the head and tail of ``text`` so the result is at most ``cap`` bytes."""
    data = text.encode("utf-8")
    if len(data) <= cap:
        return text
    marker = b"\n[...truncated...]\n"
    keep = max(cap - len(marker), 0)
    head = data[: keep // 2].decode("utf-8", "ignore")
    tail = data[len(data) - (keep - keep // 2):].decode("utf-8", "ignore")
    return head + marker.decode() + tail


def format_metrics(metrics: Mapping[str, float], objective: float | None = None) -> str:
    parts = [f"{k}: {v:.6g}" for k, v in metrics.items()]
    if objective is not None:
        parts.append(f"average_score: {objective:.6g}")
    return "; ".join(parts)


def _sample_alternative(alts: Sequence[tuple[str, float]], rng: random.Random) -> str:
    u = rng.random()
    acc = 0.0
    for text, p in alts:
        acc += p
        if u < acc:
            return text
    return alts[-1][0]


def render_template(template: str, alternatives: Mapping[str, Sequence], rng: random.Random) -> str:
    """Fill ``{name}`` placeholders with sampled alternatives, in sorted name order."""
    names = {f for _, f, _, _ in string.Formatter().parse(template) if f}
    missing = names - set(alternatives)
    if missing:
        raise MissingPlaceholder(", ".join(sorted(missing)))
    values = {name: _sample_alternative(alternatives[name], rng) for name in sorted(names)}
    return template.format(**values)


def _render_program(cand: RenderedCandidate, include_results: bool, cap: int) -> str:
    lines = []
    if include_results:
        lines.append(format_metrics(cand.metrics))
        lines.append("")
    lines.append(cand.code.rstrip("\n"))
    if include_results and cand.excerpt:
        lines += ["", "Program output:", truncate_excerpt(cand.excerpt, cap).rstrip("\n")]
    return "\n".join(lines)


def build_prompt(
    parent: RenderedCandidate,
    inspirations: Sequence[RenderedCandidate],
    cfg: PromptConfig,
    meta: MetaPrompt | None,
    rng: random.Random,
    rewrite_block: int | None = None,
) -> str:
    """Assemble one evolution prompt; a pure function of its inputs and ``rng``."""
    if len(inspirations) > cfg.num_inspirations:
        raise ValueError("more inspirations than num_inspirations")
    sections = [render_template(cfg.template, cfg.placeholder_alternatives, rng)]
    if cfg.explicit_context:
        sections.append(CONTEXT_HEADER + "\n\n" + "\n\n".join(c.rstrip("\n") for c in cfg.explicit_context))
    if inspirations:
        body = [
            PRIOR_HEADER,
            "",
            "Previously we found that the following programs performed well on the task at hand:",
        ]
        for insp in inspirations:
            body += ["", _render_program(insp, cfg.include_results, cfg.excerpt_cap)]
        sections.append("\n".join(body))
    sections.append(
        "\n".join([
            CURRENT_HEADER,
            "",
            "Here is the current program we are trying to improve (you will need to propose a "
            "modification to it below).",
            "",
            _render_program(parent, cfg.include_results, cfg.excerpt_cap),
        ])
    )
    if rewrite_block is None:
        sections.append(DIFF_RULES.rstrip("\n"))
    else:
        sections.append(REWRITE_RULES.format(block_id=rewrite_block).rstrip("\n"))
    if meta is not None:
        sections.append(META_HEADER + "\n\n" + meta.text.strip())
    return "\n\n".join(sections) + "\n"


@dataclass
class MetaPromptStore:
    prompts: list[MetaPrompt] = field(default_factory=list)

    def find(self, text: str) -> MetaPrompt:
        for m in self.prompts:
            if m.text == text:
                return m
        raise UnknownMeta(text)

    def add(self, meta: MetaPrompt) -> None:
        if not any(m.text == meta.text for m in self.prompts):
            self.prompts.append(meta)

    def select(self, rng: random.Random, epsilon: float = 0.2) -> MetaPrompt | None:
        """Epsilon-greedy choice over running scores, uniform among ties."""
        if not self.prompts:
            return None
        if rng.random() < epsilon:
            return rng.choice(self.prompts)
        top = max(m.score for m in self.prompts)
        return rng.choice([m for m in self.prompts if m.score == top])

    def best(self, k: int = 3) -> list[MetaPrompt]:
        return sorted(self.prompts, key=lambda m: -m.score)[:k]


def update_meta(store: MetaPromptStore, used: MetaPrompt, child_improvement: float) -> MetaPromptStore:
    entry = store.find(used.text)
    entry.uses += 1
    entry.score += (child_improvement - entry.score) / entry.uses
    return store


def propose_meta(provider: Provider, current: Sequence[MetaPrompt], tier: str = "fast") -> MetaPrompt | None:
    """Ask the model for a fresh instruction snippet; None when generation fails."""
    snippets = "\n".join(f"* {m.text}" for m in current) or "* (none yet)"
    result = provider.generate(GenerationRequest(META_REQUEST.format(snippets=snippets), tier=tier))
    if result.failure is not None or not result.text.strip():
        return None
    return MetaPrompt(result.text.strip())
