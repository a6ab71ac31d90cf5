from __future__ import annotations

import random

import pytest

from codevolve.model_provider import load_stub
from codevolve.prompt_sampler import (
    CONTEXT_HEADER,
    CURRENT_HEADER,
    META_HEADER,
    PRIOR_HEADER,
    MetaPrompt,
    MetaPromptStore,
    MissingPlaceholder,
    PromptConfig,
    RenderedCandidate,
    UnknownMeta,
    build_prompt,
    format_metrics,
    propose_meta,
    render_template,
    truncate_excerpt,
    update_meta,
)

PARENT = RenderedCandidate("x = 1\n", {"score": 0.5}, "ran fine")
INSP = [RenderedCandidate("x = 2\n", {"score": 0.7}), RenderedCandidate("x = 3\n", {"score": 0.9})]


def test_section_order():
    cfg = PromptConfig(explicit_context=["Use numpy."])
    p = build_prompt(PARENT, INSP, cfg, MetaPrompt("Think harder."), random.Random(0))
    positions = [p.index(h) for h in (CONTEXT_HEADER, PRIOR_HEADER, CURRENT_HEADER, "<<<<<<< SEARCH", META_HEADER)]
    assert positions == sorted(positions)
    assert p.index("x = 2") < p.index("x = 3") < p.index("x = 1")


def test_pure_given_rng():
    cfg = PromptConfig()
    a = build_prompt(PARENT, INSP, cfg, None, random.Random(9))
    b = build_prompt(PARENT, INSP, cfg, None, random.Random(9))
    assert a == b


def test_no_context_no_meta_no_results():
    cfg = PromptConfig(include_results=False)
    p = build_prompt(PARENT, [], cfg, None, random.Random(0))
    assert CONTEXT_HEADER not in p and META_HEADER not in p and PRIOR_HEADER not in p
    assert "score" not in p and "ran fine" not in p


def test_too_many_inspirations():
    with pytest.raises(ValueError):
        build_prompt(PARENT, INSP, PromptConfig(num_inspirations=1), None, random.Random(0))


def test_rewrite_rules_replace_diff_rules():
    p = build_prompt(PARENT, [], PromptConfig(), None, random.Random(0), rewrite_block=2)
    assert "evolve block 2" in p and "<<<<<<< SEARCH" not in p


def test_template_placeholders():
    with pytest.raises(MissingPlaceholder):
        render_template("Be {mood}.", {}, random.Random(0))
    alts = {"mood": [("calm", 0.25), ("bold", 0.75)]}
    rng = random.Random(1)
    n = 4000
    bold = sum(render_template("{mood}", alts, rng) == "bold" for _ in range(n))
    # binomial sd = sqrt(4000 * 0.75 * 0.25) ~ 27.4
    assert abs(bold - 3000) < 3 * 27.4
    with pytest.raises(ValueError):
        PromptConfig(placeholder_alternatives={"mood": [("a", 0.4)]})


def test_truncate_excerpt_keeps_head_and_tail():
    text = "HEAD" + "x" * 10_000 + "TAIL"
    out = truncate_excerpt(text, 200)
    assert len(out.encode()) <= 200
    assert out.startswith("HEAD") and out.endswith("TAIL")
    assert truncate_excerpt("short", 200) == "short"


def test_format_metrics():
    assert format_metrics({"a": 0.5}, 0.513) == "a: 0.5; average_score: 0.513"


def test_meta_store_running_mean_and_select():
    store = MetaPromptStore()
    a, b = MetaPrompt("a"), MetaPrompt("b")
    store.add(a)
    store.add(b)
    store.add(MetaPrompt("a"))
    assert len(store.prompts) == 2
    update_meta(store, a, 1.0)
    update_meta(store, a, 0.0)
    assert a.score == pytest.approx(0.5) and a.uses == 2
    update_meta(store, b, 0.1)
    assert store.select(random.Random(0), epsilon=0.0) is a
    assert store.best(1) == [a]
    with pytest.raises(UnknownMeta):
        update_meta(store, MetaPrompt("zzz"), 1.0)
    assert MetaPromptStore().select(random.Random(0)) is None


def test_propose_meta():
    stub = load_stub([("instruction snippet", "  Try vectorizing.  ")])
    m = propose_meta(stub, [])
    assert m.text == "Try vectorizing."
    assert propose_meta(stub, [m]) is None
