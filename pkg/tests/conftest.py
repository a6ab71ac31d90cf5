from __future__ import annotations

import sys
import textwrap
from pathlib import Path

import pytest

from codevolve.taskspec import parse_task

ROOT = Path(__file__).resolve().parents[1]
TOY_DIR = ROOT / "tasks" / "toy_constant"

_acceptance: list[tuple[str, str]] = []


def make_task(files, metric_names=("score",), eval_command=None, **extra):
    """TaskSpec from ``{path: text}`` (dedented)."""
    raw = [(p, textwrap.dedent(t).encode()) for p, t in files.items()]
    cfg = {"eval_command": eval_command or [sys.executable, "{main}"], "metric_names": list(metric_names)}
    cfg.update(extra)
    return parse_task(raw, cfg)


def script_task(body: str, **extra):
    """Single-file task whose program is ``body`` (already containing an evolve block)."""
    return make_task({"main.py": body}, **extra)


@pytest.fixture
def toy_task():
    text = (TOY_DIR / "program.py").read_bytes()
    cfg = {
        "eval_command": [sys.executable, str(TOY_DIR / "evaluate.py"), "{main}"],
        "metric_names": ["score"],
    }
    return parse_task([("program.py", text)], cfg)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{outcome:<8} {name}")
