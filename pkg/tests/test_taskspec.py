from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codevolve.taskspec import (
    ArityMismatch,
    NestedMarker,
    NoEvolveBlock,
    Objective,
    SkeletonMismatch,
    TaskSpecError,
    UnsafePath,
    UnmatchedMarker,
    assemble,
    extract_blocks,
    parse_sources,
    render_program,
)

from conftest import make_task

PY = """\
import math
# EVOLVE-BLOCK-START
x = 1
# EVOLVE-BLOCK-END
print(x)
"""


@pytest.mark.parametrize("leader", ["#", "//", ";"])
def test_marker_comment_styles(leader):
    text = f"head\n{leader} EVOLVE-BLOCK-START\nbody\n{leader} EVOLVE-BLOCK-END\ntail\n"
    (sf,) = parse_sources([("f", text.encode())])
    assert [b.text for b in sf.blocks] == ["body\n"]
    assert sf.skeleton == [f"head\n{leader} EVOLVE-BLOCK-START\n", f"{leader} EVOLVE-BLOCK-END\ntail\n"]
    assert sf.text == text


def test_block_ids_run_across_files():
    files = {
        "a.py": "# EVOLVE-BLOCK-START\na0\n# EVOLVE-BLOCK-END\n# EVOLVE-BLOCK-START\na1\n# EVOLVE-BLOCK-END\n",
        "b.c": "// EVOLVE-BLOCK-START\nb0\n// EVOLVE-BLOCK-END\n",
    }
    task = make_task(files)
    assert task.num_blocks == 3
    assert task.block_texts() == ["a0\n", "a1\n", "b0\n"]
    ids = [b.block_id for f in task.files for b in f.blocks]
    assert ids == [0, 1, 2]


def test_empty_block_allowed():
    task = make_task({"m.py": "# EVOLVE-BLOCK-START\n# EVOLVE-BLOCK-END\n"})
    assert task.block_texts() == [""]


@pytest.mark.parametrize(
    "text, error",
    [
        ("# EVOLVE-BLOCK-START\nx\n", UnmatchedMarker),
        ("x\n# EVOLVE-BLOCK-END\n", UnmatchedMarker),
        ("# EVOLVE-BLOCK-START\n# EVOLVE-BLOCK-START\n# EVOLVE-BLOCK-END\n", NestedMarker),
        ("# EVOLVE-BLOCK-START EVOLVE-BLOCK-END\n", UnmatchedMarker),
        ("no markers\n", NoEvolveBlock),
    ],
)
def test_malformed_markers(text, error):
    with pytest.raises(error):
        parse_sources([("f", text.encode())])


def test_assemble_identity_and_arity():
    task = make_task({"m.py": PY})
    assert assemble(task, task.block_texts()) == task.original_files()
    with pytest.raises(ArityMismatch):
        assemble(task, [])


def test_extract_rejects_skeleton_change():
    task = make_task({"m.py": PY})
    files = [("m.py", PY.replace("import math", "import os").encode())]
    with pytest.raises(SkeletonMismatch):
        extract_blocks(task, files)
    with pytest.raises(SkeletonMismatch):
        extract_blocks(task, [("other.py", PY.encode())])


def test_unknown_gate_metric_rejected():
    from codevolve.evaluator import CascadeStage, PassRule

    with pytest.raises(TaskSpecError):
        make_task({"m.py": PY}, cascade=[CascadeStage("s", pass_rule=(PassRule.parse("nope", 1),))])


def test_objective_weighted_mean():
    obj = Objective(("a", "b"), {"a": 3.0, "b": 1.0})
    assert obj({"a": 1.0, "b": 5.0}) == pytest.approx(2.0)
    assert Objective(("a", "b"))({"a": 1.0, "b": 2.0}) == pytest.approx(1.5)


def test_render_program_headers():
    one = [("a.py", b"x\n")]
    two = [("a.py", b"x\n"), ("b.py", b"y\n")]
    assert render_program(one) == "x\n"
    assert render_program(two) == "--- a.py\nx\n--- b.py\ny\n"


# block bodies: printable lines without marker tokens
_line = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), max_size=20).filter(
    lambda s: "EVOLVE-BLOCK" not in s
)
_body = st.lists(_line, max_size=4).map(lambda ls: "".join(l + "\n" for l in ls))


@settings(max_examples=200, deadline=None)
@given(st.lists(_body, min_size=1, max_size=4), st.lists(_body, min_size=1, max_size=4))
def test_assemble_extract_roundtrip(original, replacement):
    n = min(len(original), len(replacement))
    original, replacement = original[:n], replacement[:n]
    text = "pre\n" + "".join(f"# EVOLVE-BLOCK-START\n{b}# EVOLVE-BLOCK-END\nmid\n" for b in original)
    task = make_task({"m.py": text})
    assert task.block_texts() == original
    files = assemble(task, replacement)
    assert extract_blocks(task, files) == replacement
    skel = parse_sources(files)[0].skeleton
    assert skel == task.files[0].skeleton


@pytest.mark.parametrize("path", ["/etc/passwd", "../up.py", "a/../../b.py", "C:\\x.py", ""])
def test_unsafe_paths_rejected(path):
    with pytest.raises(UnsafePath):
        parse_sources([(path, b"# EVOLVE-BLOCK-START\nx = 1\n# EVOLVE-BLOCK-END\n")])
