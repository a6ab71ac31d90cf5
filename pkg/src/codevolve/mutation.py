"""SEARCH/REPLACE diff parsing and application under evolve-block constraints."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Collection, Sequence

from .taskspec import SkeletonMismatch, TaskSpec, assemble, extract_blocks

SEARCH_MARK = "<<<<<<< SEARCH"
DIVIDER = "======="
REPLACE_MARK = ">>>>>>> REPLACE"

NO_DIFF_FOUND = "NoDiffFound"
SKELETON_VIOLATED = "SkeletonViolated"
EMPTY_OUTPUT = "EmptyOutput"

_BLOCK_RE = re.compile(
    r"^<<<<<<< SEARCH[ \t]*\n(.*?)^=======[ \t]*\n(.*?)^>>>>>>> REPLACE[ \t]*$",
    re.MULTILINE | re.DOTALL,
)
_FENCE_RE = re.compile(r"^\s*```[^\n]*\n(.*?)^```\s*$", re.MULTILINE | re.DOTALL)


def search_not_found(index: int) -> str:
    return f"SearchNotFound({index})"


@dataclass(frozen=True)
class DiffBlock:
    search: str
    replace: str

    def __post_init__(self) -> None:
        if not self.search:
            raise ValueError("search text must be non-empty")


@dataclass
class MutationResult:
    child_files: list[tuple[str, bytes]] | None
    applied: int = 0
    mode: str = "diff"
    failure: str | None = None
    block_texts: list[str] | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def parse_diffs(model_output: str) -> list[DiffBlock]:
    """Extract SEARCH/REPLACE blocks in textual order; surrounding prose is ignored.

    Section texts keep their trailing newline, so a block of whole lines
    matches whole lines of the program. Blocks with an empty SEARCH section
    are skipped.
    """
    blocks = []
    for m in _BLOCK_RE.finditer(model_output):
        search, replace = m.group(1), m.group(2)
        if search:
            blocks.append(DiffBlock(search, replace))
    return blocks


def render_diffs(blocks: Sequence[DiffBlock]) -> str:
    """Inverse of :func:`parse_diffs` for sections that end in a newline (or are empty)."""
    return "".join(
        f"{SEARCH_MARK}\n{b.search}{DIVIDER}\n{b.replace}{REPLACE_MARK}\n" for b in blocks
    )


def _check_child(
    task: TaskSpec,
    child: list[tuple[str, bytes]],
    parent_blocks: Sequence[str],
    mutable: Collection[int] | None,
) -> list[str] | None:
    try:
        blocks = extract_blocks(task, child)
    except SkeletonMismatch:
        return None
    if mutable is not None:
        for i, (old, new) in enumerate(zip(parent_blocks, blocks)):
            if i not in mutable and old != new:
                return None
    return blocks


def apply_diffs(
    task: TaskSpec,
    parent_files: Sequence[tuple[str, bytes]],
    diffs: Sequence[DiffBlock],
    mutable_blocks: Collection[int] | None = None,
) -> MutationResult:
    """Apply ``diffs`` in order, all or nothing.

    Each search text replaces its first occurrence, looking through the files
    in order. The child must keep the parent skeleton byte-for-byte and, when
    ``mutable_blocks`` is given, leave every other block untouched.
    """
    if not diffs:
        return MutationResult(None, failure=NO_DIFF_FOUND)
    parent_blocks = extract_blocks(task, parent_files)
    texts = [(path, data.decode("utf-8")) for path, data in parent_files]
    for index, diff in enumerate(diffs):
        for j, (path, text) in enumerate(texts):
            pos = text.find(diff.search)
            if pos >= 0:
                texts[j] = (path, text[:pos] + diff.replace + text[pos + len(diff.search):])
                break
        else:
            return MutationResult(None, failure=search_not_found(index))
    child = [(path, text.encode("utf-8")) for path, text in texts]
    blocks = _check_child(task, child, parent_blocks, mutable_blocks)
    if blocks is None:
        return MutationResult(None, failure=SKELETON_VIOLATED)
    return MutationResult(child, applied=len(diffs), mode="diff", block_texts=blocks)


def strip_fence(text: str) -> str:
    m = _FENCE_RE.search(text)
    return m.group(1) if m else text


def apply_full_rewrite(
    task: TaskSpec,
    parent_files: Sequence[tuple[str, bytes]],
    model_output: str,
    block_id: int,
) -> MutationResult:
    """Replace one whole evolve block with the model output."""
    body = strip_fence(model_output or "")
    if not body.strip():
        return MutationResult(None, mode="full_rewrite", failure=EMPTY_OUTPUT)
    if not body.endswith("\n"):
        body += "\n"
    blocks = extract_blocks(task, parent_files)
    if not 0 <= block_id < len(blocks):
        raise IndexError(f"no evolve block {block_id}")
    blocks[block_id] = body
    child = assemble(task, blocks)
    checked = _check_child(task, child, extract_blocks(task, parent_files), {block_id})
    if checked is None:
        return MutationResult(None, mode="full_rewrite", failure=SKELETON_VIOLATED)
    return MutationResult(child, applied=1, mode="full_rewrite", block_texts=checked)
