"""Text-generation backends: a remote HTTP backend and a scripted stub.

Model-side problems (timeouts, HTTP errors, an exhausted script) come back as
``GenerationResult.failure`` tags. The only exception raised here is
``ConfigError`` for a provider that cannot be built at all.
"""

from __future__ import annotations

import itertools
import os
import random
import re
import threading
import time
import concurrent.futures
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence, Union

import httpx

TIERS = ("fast", "strong")

TIMEOUT = "Timeout"
STUB_EXHAUSTED = "StubExhausted"
HTTP_ERROR = "HttpError"
MALFORMED = "MalformedOutput"


class ConfigError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelTier:
    name: str
    weight: float


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    tier: str = "fast"
    max_output: int = 16384
    temperature: float = 1.0
    request_id: str = ""

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class GenerationResult:
    text: str | None
    tier_used: str
    latency: float = 0.0
    failure: str | None = None

    def __post_init__(self) -> None:
        if (self.text is None) == (self.failure is None):
            raise ValueError("exactly one of text/failure must be set")


class Provider(Protocol):
    def generate(self, req: GenerationRequest) -> GenerationResult: ...


def validate_weights(weights: Mapping[str, float]) -> list[ModelTier]:
    tiers = [ModelTier(name, float(w)) for name, w in weights.items()]
    if not tiers:
        raise ConfigError("at least one model tier is required")
    for t in tiers:
        if t.name not in TIERS:
            raise ConfigError(f"unknown tier {t.name!r}")
        if not 0.0 <= t.weight <= 1.0:
            raise ConfigError(f"tier weight out of range: {t.weight}")
    if abs(sum(t.weight for t in tiers) - 1.0) > 1e-9:
        raise ConfigError("tier weights must sum to 1")
    return tiers


def pick_tier(weights: Mapping[str, float], rng: random.Random) -> ModelTier:
    """Sample one tier; the draw consumes exactly one ``rng.random()``."""
    tiers = validate_weights(weights)
    u = rng.random()
    acc = 0.0
    for t in tiers:
        acc += t.weight
        if u < acc:
            return t
    return next(t for t in reversed(tiers) if t.weight > 0)


# -- stub -------------------------------------------------------------------

Predicate = Union[str, Callable[[str], bool], None]


def _as_callable(pred: Predicate) -> Callable[[str], bool]:
    if pred is None or pred == "*":
        return lambda prompt: True
    if callable(pred):
        return pred
    if pred.startswith("re:"):
        pattern = re.compile(pred[3:].strip())
        return lambda prompt: pattern.search(prompt) is not None
    if pred.startswith("contains:"):
        needle = pred[len("contains:"):].strip()
    else:
        needle = pred
    return lambda prompt: needle in prompt


@dataclass
class StubRecord:
    predicate: Callable[[str], bool]
    response: str | Callable[[str], str]
    repeat: bool = False
    used: bool = False


@dataclass
class StubProvider:
    """Deterministic provider replaying a script of (predicate, response) records.

    A record is consumed when it answers a prompt, so several records sharing
    a predicate yield their responses in order. Records flagged ``repeat``
    are never consumed. ``delay`` simulates model latency.
    """

    records: list[StubRecord]
    delay: float = 0.0
    calls: list[GenerationRequest] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def generate(self, req: GenerationRequest) -> GenerationResult:
        start = time.monotonic()
        if self.delay:
            time.sleep(self.delay)
        with self._lock:
            self.calls.append(req)
            for rec in self.records:
                if rec.used or not rec.predicate(req.prompt):
                    continue
                if not rec.repeat:
                    rec.used = True
                text = rec.response(req.prompt) if callable(rec.response) else rec.response
                return GenerationResult(text, req.tier, time.monotonic() - start)
        return GenerationResult(None, req.tier, time.monotonic() - start, STUB_EXHAUSTED)


def load_stub(
    script: Sequence[tuple[Predicate, str | Callable[[str], str]]] | Sequence[tuple],
    delay: float = 0.0,
) -> StubProvider:
    """Build a stub from ``(predicate, response[, repeat])`` tuples.

    Predicates are callables, ``"*"``/``None`` (always), ``"re:<pattern>"``
    or a plain substring (optionally prefixed ``contains:``).
    """
    if not script:
        raise ConfigError("stub script is empty")
    records = []
    for entry in script:
        pred, response, *rest = entry
        records.append(StubRecord(_as_callable(pred), response, bool(rest and rest[0])))
    return StubProvider(records, delay=delay)


RECORD_HEADER = "%%% "


def parse_stub_script(text: str) -> list[tuple[str, str, bool]]:
    """Parse the plain-text stub format.

    Each record starts with a header line ``%%% <predicate> [| repeat]``; the
    following lines up to the next header are the response, verbatim.
    """
    entries: list[tuple[str, str, bool]] = []
    header: str | None = None
    body: list[str] = []

    def flush() -> None:
        if header is None:
            return
        pred, _, flags = header.partition(" | ")
        entries.append((pred.strip() or "*", "".join(body), flags.strip() == "repeat"))

    for line in text.splitlines(keepends=True):
        if line.startswith(RECORD_HEADER.strip()):
            flush()
            header = line[len(RECORD_HEADER.strip()):].strip()
            body = []
        elif header is not None:
            body.append(line)
    flush()
    if not entries:
        raise ConfigError("stub script contains no records")
    return entries


def load_stub_file(path: str | os.PathLike, delay: float = 0.0) -> StubProvider:
    with open(path, encoding="utf-8") as fh:
        return load_stub(parse_stub_script(fh.read()), delay=delay)


# -- remote -----------------------------------------------------------------


@dataclass
class HttpProvider:
    """JSON-over-HTTP backend.

    Sends ``{"model", "prompt", "temperature", "max_output", "request_id"}``
    and expects ``{"text": ...}`` back. ``models`` maps tier name to the model
    identifier sent for that tier.
    """

    endpoint: str
    models: Mapping[str, str] = field(default_factory=lambda: {t: t for t in TIERS})
    token: str | None = None
    deadline: float = 120.0
    max_in_flight: int = 16

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ConfigError("HTTP provider needs an endpoint")
        self._slots = threading.BoundedSemaphore(self.max_in_flight)

    @classmethod
    def from_env(cls, **overrides) -> HttpProvider:
        endpoint = overrides.pop("endpoint", None) or os.environ.get("CODEVOLVE_ENDPOINT")
        if not endpoint:
            raise ConfigError("set CODEVOLVE_ENDPOINT or provider.endpoint")
        token = overrides.pop("token", None) or os.environ.get("CODEVOLVE_TOKEN")
        if "deadline" not in overrides and os.environ.get("CODEVOLVE_DEADLINE"):
            overrides["deadline"] = float(os.environ["CODEVOLVE_DEADLINE"])
        return cls(endpoint=endpoint, token=token, **overrides)

    def generate(self, req: GenerationRequest) -> GenerationResult:
        start = time.monotonic()
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        payload = {
            "model": self.models.get(req.tier, req.tier),
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_output": req.max_output,
            "request_id": req.request_id,
        }
        with self._slots:
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.deadline)
                resp.raise_for_status()
                text = resp.json()["text"]
            except httpx.TimeoutException:
                return GenerationResult(None, req.tier, time.monotonic() - start, TIMEOUT)
            except httpx.HTTPError:
                return GenerationResult(None, req.tier, time.monotonic() - start, HTTP_ERROR)
            except (ValueError, KeyError, TypeError):
                return GenerationResult(None, req.tier, time.monotonic() - start, MALFORMED)
        if not isinstance(text, str):
            return GenerationResult(None, req.tier, time.monotonic() - start, MALFORMED)
        return GenerationResult(text[: req.max_output], req.tier, time.monotonic() - start)


_deadline_pool = concurrent.futures.ThreadPoolExecutor(max_workers=32, thread_name_prefix="gen")
_request_ids = itertools.count()


def generate_with_deadline(
    provider: Provider, req: GenerationRequest, deadline: float | None
) -> GenerationResult:
    """Call ``provider.generate`` but give up after ``deadline`` seconds."""
    if deadline is None:
        return provider.generate(req)
    fut = _deadline_pool.submit(provider.generate, req)
    try:
        return fut.result(timeout=deadline)
    except concurrent.futures.TimeoutError:
        return GenerationResult(None, req.tier, deadline, TIMEOUT)


def next_request_id() -> str:
    return f"req-{next(_request_ids)}"
