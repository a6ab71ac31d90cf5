"""Evolutionary program database: a MAP-elites grid per island plus ring migration."""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

SNAPSHOT_VERSION = 1


class DuplicateId(ValueError):
    pass


class EmptyIsland(LookupError):
    pass


class CorruptSnapshot(ValueError):
    pass


@dataclass
class Candidate:
    id: str
    block_texts: list[str]
    metrics: dict[str, float] = field(default_factory=dict)
    objective: float = float("-inf")
    parent_id: str | None = None
    island: int = 0
    feature_coords: tuple[int, ...] = ()
    birth_step: int = 0
    eval_excerpt: str = ""
    failure: str | None = None
    artifact: str | None = None

    @property
    def failed(self) -> bool:
        return self.failure is not None or not math.isfinite(self.objective)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["feature_coords"] = list(self.feature_coords)
        if not math.isfinite(self.objective):
            rec["objective"] = None
        return rec

    @classmethod
    def from_record(cls, rec: Mapping) -> Candidate:
        rec = dict(rec)
        rec["feature_coords"] = tuple(rec.get("feature_coords", ()))
        if rec.get("objective") is None:
            rec["objective"] = float("-inf")
        return cls(**rec)


@dataclass
class ArchiveConfig:
    num_islands: int = 4
    length_bins: int = 10
    score_bins: int = 10
    migration_period: int = 50
    migration_count: int = 2
    parent_policy: float = 0.5
    max_code_length: int = 1 << 20

    def __post_init__(self) -> None:
        if self.num_islands < 1:
            raise ValueError("num_islands must be >= 1")
        if self.length_bins < 1 or self.score_bins < 1:
            raise ValueError("bucket counts must be >= 1")
        if not 0.0 <= self.parent_policy <= 1.0:
            raise ValueError("parent_policy must lie in [0, 1]")

    @property
    def feature_dims(self) -> list[tuple[str, int]]:
        return [("code_length", self.length_bins), ("objective_quantile", self.score_bins)]


def length_bucket(length: int, bins: int, max_length: int) -> int:
    """Logarithmic bucket of ``length`` over ``[1, max_length]``."""
    if bins == 1 or length <= 1:
        return 0
    frac = math.log(min(length, max_length)) / math.log(max_length)
    return min(int(frac * bins), bins - 1)


def quantile_bucket(value: float, seen_sorted: Sequence[float], bins: int) -> int:
    """Bucket by the fraction of previously seen objectives strictly below ``value``."""
    if bins == 1 or not seen_sorted:
        return 0
    rank = bisect.bisect_left(seen_sorted, value)
    return min(int(rank / len(seen_sorted) * bins), bins - 1)


@dataclass
class Island:
    grid: dict[tuple[int, ...], str] = field(default_factory=dict)
    pinned: dict[str, str] = field(default_factory=dict)  # metric name -> candidate id


class ProgramDatabase:
    """All evaluated candidates, with per-island elites.

    Successful candidates compete for their grid cell under strict
    improvement. The best candidate per metric is additionally pinned on each
    island so programs that excel on one metric stay sampleable.
    """

    def __init__(self, config: ArchiveConfig | None = None, seed: int = 0):
        self.config = config or ArchiveConfig()
        self.islands = [Island() for _ in range(self.config.num_islands)]
        self.candidates: dict[str, Candidate] = {}
        self.failures: dict[str, int] = {}
        self.best_id: str | None = None
        self.seen_objectives: list[float] = []
        self.step = 0
        self.rng = random.Random(seed)

    # -- registration -------------------------------------------------------

    def assign_coords(self, cand: Candidate) -> tuple[int, ...]:
        cfg = self.config
        length = sum(len(t) for t in cand.block_texts)
        return (
            length_bucket(length, cfg.length_bins, cfg.max_code_length),
            quantile_bucket(cand.objective, self.seen_objectives, cfg.score_bins),
        )

    def register(self, cand: Candidate, islands: Iterable[int] | None = None) -> bool:
        """Store ``cand``; returns True when it became an elite somewhere."""
        if cand.id in self.candidates:
            raise DuplicateId(cand.id)
        self.candidates[cand.id] = cand
        self.step += 1
        if cand.failed:
            tag = cand.failure or "NonFinite"
            self.failures[tag] = self.failures.get(tag, 0) + 1
            return False
        if not cand.feature_coords:
            cand.feature_coords = self.assign_coords(cand)
        bisect.insort(self.seen_objectives, cand.objective)
        targets = [cand.island] if islands is None else list(islands)
        placed = False
        for i in targets:
            placed |= self._place(i, cand)
        best = self.best
        if best is None or cand.objective > best.objective:
            self.best_id = cand.id
        return placed

    def _place(self, island: int, cand: Candidate) -> bool:
        isl = self.islands[island]
        incumbent = isl.grid.get(cand.feature_coords)
        placed = False
        if incumbent is None or cand.objective > self.candidates[incumbent].objective:
            isl.grid[cand.feature_coords] = cand.id
            placed = True
        for name, value in cand.metrics.items():
            cur = isl.pinned.get(name)
            if cur is None or value > self.candidates[cur].metrics.get(name, -math.inf):
                isl.pinned[name] = cand.id
        return placed

    # -- queries -----------------------------------------------------------

    @property
    def best(self) -> Candidate | None:
        return self.candidates[self.best_id] if self.best_id is not None else None

    def elites(self, island: int) -> list[Candidate]:
        """Grid elites then pinned per-metric elites, without duplicates."""
        isl = self.islands[island]
        ids = [isl.grid[k] for k in sorted(isl.grid)]
        for name in sorted(isl.pinned):
            if isl.pinned[name] not in ids:
                ids.append(isl.pinned[name])
        return [self.candidates[i] for i in ids]

    def island_best(self, island: int) -> Candidate | None:
        elites = self.elites(island)
        if not elites:
            return None
        return max(elites, key=lambda c: (c.objective, -c.birth_step))

    def elite_count(self) -> int:
        return sum(len(isl.grid) for isl in self.islands)

    # -- sampling ----------------------------------------------------------

    def sample_parent(self, island: int, rng: random.Random | None = None) -> Candidate:
        rng = rng or self.rng
        elites = self.elites(island)
        if not elites:
            raise EmptyIsland(island)
        if rng.random() < self.config.parent_policy:
            return self.island_best(island)
        return rng.choice(elites)

    def sample_inspirations(
        self, island: int, k: int, exclude: str | None = None, rng: random.Random | None = None
    ) -> list[Candidate]:
        """Up to ``k`` distinct elites, drawing distinct cells before repeating any."""
        rng = rng or self.rng
        if k <= 0:
            return []
        isl = self.islands[island]
        by_cell: dict[tuple[int, ...], list[str]] = {}
        for coords in sorted(isl.grid):
            by_cell.setdefault(coords, []).append(isl.grid[coords])
        for name in sorted(isl.pinned):
            cid = isl.pinned[name]
            coords = self.candidates[cid].feature_coords
            if cid not in by_cell.get(coords, []):
                by_cell.setdefault(coords, []).append(cid)
        pools = {c: [i for i in ids if i != exclude] for c, ids in by_cell.items()}
        pools = {c: ids for c, ids in pools.items() if ids}
        picked: list[str] = []
        while len(picked) < k and pools:
            cells = sorted(pools)
            order = rng.sample(cells, len(cells))
            for cell in order:
                if len(picked) >= k:
                    break
                ids = pools[cell]
                cid = ids.pop(rng.randrange(len(ids)))
                if cid not in picked:
                    picked.append(cid)
                if not ids:
                    del pools[cell]
        return [self.candidates[i] for i in picked]

    # -- migration ---------------------------------------------------------

    def migrate(self) -> int:
        """Copy each island's top elites into the next island of the ring.

        Sources are chosen from the pre-migration state. Returns the number
        of copies that took a cell.
        """
        n = len(self.islands)
        if n == 1:
            return 0
        k = self.config.migration_count
        emigrants = []
        for i in range(n):
            top = sorted(self.elites(i), key=lambda c: (-c.objective, c.birth_step))[:k]
            emigrants.append(top)
        moved = 0
        for i, group in enumerate(emigrants):
            for cand in group:
                moved += self._place((i + 1) % n, cand)
        return moved

    # -- persistence -------------------------------------------------------

    def snapshot(self) -> bytes:
        state = self.rng.getstate()
        doc = {
            "version": SNAPSHOT_VERSION,
            "config": asdict(self.config),
            "candidates": [c.to_record() for c in self.candidates.values()],
            "islands": [
                {
                    "grid": [[list(k), v] for k, v in sorted(isl.grid.items())],
                    "pinned": dict(sorted(isl.pinned.items())),
                }
                for isl in self.islands
            ],
            "failures": self.failures,
            "best_id": self.best_id,
            "step": self.step,
            "rng": [state[0], list(state[1]), state[2]],
        }
        return json.dumps(doc, sort_keys=True).encode("utf-8")

    @classmethod
    def restore(cls, data: bytes) -> ProgramDatabase:
        try:
            doc = json.loads(data.decode("utf-8"))
            if doc.get("version") != SNAPSHOT_VERSION:
                raise CorruptSnapshot(f"unsupported snapshot version {doc.get('version')!r}")
            db = cls(ArchiveConfig(**doc["config"]))
            for rec in doc["candidates"]:
                cand = Candidate.from_record(rec)
                db.candidates[cand.id] = cand
                if not cand.failed:
                    db.seen_objectives.append(cand.objective)
            db.seen_objectives.sort()
            db.islands = [
                Island(
                    grid={tuple(k): v for k, v in isl["grid"]},
                    pinned=dict(isl["pinned"]),
                )
                for isl in doc["islands"]
            ]
            db.failures = dict(doc["failures"])
            db.best_id = doc["best_id"]
            db.step = int(doc["step"])
            version, internal, gauss = doc["rng"]
            db.rng.setstate((version, tuple(internal), gauss))
            for isl in db.islands:
                for cid in list(isl.grid.values()) + list(isl.pinned.values()):
                    if cid not in db.candidates:
                        raise CorruptSnapshot(f"elite {cid!r} has no candidate record")
        except CorruptSnapshot:
            raise
        except (ValueError, KeyError, TypeError, UnicodeDecodeError, AttributeError) as exc:
            raise CorruptSnapshot(str(exc)) from exc
        return db

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProgramDatabase):
            return NotImplemented
        return self.snapshot() == other.snapshot()

    __hash__ = None  # type: ignore[assignment]


def write_log_record(fh, cand: Candidate) -> None:
    """Append one candidate as a JSON line."""
    fh.write(json.dumps(cand.to_record(), sort_keys=True) + "\n")
