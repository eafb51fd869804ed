"""Survey backend: blind-method groove generation, ratings, aggregation.

Every interaction is appended to a newline-delimited JSON log (one groove
or rating event per line, fsynced before the call returns) and in-memory
state is rebuilt by replaying that log, so an acknowledged record survives
restarts.  Ratings are the closed poor/average/good vocabulary, numerically
0/1/2 for aggregation.  The sampling method is assigned uniformly at random
per groove and persisted, but deliberately kept out of API responses so
raters stay blind to it.

Aggregations are module-level functions over record lists:

    aggregate_by_method               raw counts and row-normalized shares
    aggregate_by_probability_bracket  mean rating per self-rating bracket
    aggregate_by_style                rating counts and poor share per style

All reported shares and means round half-up to 2 decimals, which is why a
row of shares may total 1.01.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .checkpoint import ModelBundle
from .sampling import (
    ALL_BRACKET_LABELS,
    SamplingMethod,
    generate,
    mean_selected_probability,
    probability_bracket,
)
from .tokens import (
    BARS_PER_PHRASE,
    STEPS_PER_BAR,
    Bar,
    DrumVoice,
    Phrase,
    StyleTag,
    SubdivisionToken,
    parse_phrase,
    parse_style,
    render_phrase,
)

RATING_VALUES = {"poor": 0, "average": 1, "good": 2}

_MAX_SEED = 2**63 - 1


class SurveyError(ValueError):
    pass


class UnknownGrooveError(SurveyError):
    pass


class AlreadyRatedError(SurveyError):
    pass


class InvalidRatingError(SurveyError):
    pass


class LogReplayError(SurveyError):
    """The persisted log could not be replayed into a consistent state."""


@dataclass(frozen=True)
class GrooveRecord:
    id: str
    timestamp: str
    style: StyleTag
    kick_text: str
    method: SamplingMethod
    seed: int
    output_text: str
    mean_selected_probability: float
    rating: str | None = None

    @property
    def rating_value(self) -> int | None:
        return RATING_VALUES[self.rating] if self.rating is not None else None


def kick_grid_to_phrase(style: StyleTag, grid) -> Phrase:
    """A 4x48 boolean grid (bars x steps) as a kick-only phrase."""
    if len(grid) != BARS_PER_PHRASE or any(len(bar) != STEPS_PER_BAR for bar in grid):
        raise ValueError(
            f"kick grid must be {BARS_PER_PHRASE}x{STEPS_PER_BAR} "
            f"(got {len(grid)} bars of lengths {[len(b) for b in grid]})"
        )
    kick = frozenset({DrumVoice.KICK})
    bars = tuple(
        Bar(
            tuple(
                SubdivisionToken(kick if cell else frozenset()) for cell in bar
            )
        )
        for bar in grid
    )
    return Phrase(style, bars)


def phrase_to_voice_grids(phrase: Phrase) -> dict[str, list[list[bool]]]:
    """Per-voice 4x48 boolean grids for playback (kit voices only)."""
    grids: dict[str, list[list[bool]]] = {}
    for voice in DrumVoice:
        if voice is DrumVoice.KICK:
            continue
        grids[voice.letter] = [
            [voice in tok.voices for tok in bar.steps] for bar in phrase.bars
        ]
    return grids


def choose_method(rng: np.random.Generator) -> SamplingMethod:
    """Uniform assignment among the three sampling methods."""
    return SamplingMethod(int(rng.integers(1, 4)))


def replay_log(log_path: str | Path) -> dict[str, GrooveRecord]:
    """Rebuild record state from an append-only log.

    A torn final line (interrupted append) is dropped; any other malformed
    or inconsistent event fails the replay with its line number.
    """
    records: dict[str, GrooveRecord] = {}
    lines = Path(log_path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError:
            if lineno == len(lines):
                break  # torn final line from an interrupted append
            raise LogReplayError(f"line {lineno}: invalid JSON") from None
        kind = event.get("event")
        if kind == "groove":
            record = GrooveRecord(
                id=event["id"],
                timestamp=event["timestamp"],
                style=parse_style(event["style"]),
                kick_text=event["kick"],
                method=SamplingMethod(event["method"]),
                seed=event["seed"],
                output_text=event["output"],
                mean_selected_probability=event["mean_selected_probability"],
            )
            if record.id in records:
                raise LogReplayError(f"line {lineno}: duplicate groove id")
            records[record.id] = record
        elif kind == "rating":
            existing = records.get(event["id"])
            if existing is None:
                raise LogReplayError(f"line {lineno}: rating for unknown groove")
            if existing.rating is not None:
                raise LogReplayError(f"line {lineno}: groove rated twice")
            records[event["id"]] = dataclasses.replace(
                existing, rating=event["rating"]
            )
        else:
            raise LogReplayError(f"line {lineno}: unknown event {kind!r}")
    return records


class SurveyStore:
    """Single-writer groove/rating state backed by an append-only log."""

    def __init__(
        self,
        bundle: ModelBundle,
        log_path: str | Path,
        seed: int | None = None,
    ) -> None:
        self._bundle = bundle
        self._log_path = Path(log_path)
        self._records: dict[str, GrooveRecord] = {}
        self._lock = threading.Lock()
        self._rng = (
            np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
            if seed is not None
            else np.random.default_rng()
        )
        if self._log_path.exists():
            self._records = replay_log(self._log_path)
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        self._log = open(self._log_path, "a", encoding="utf-8")

    def _append(self, event: dict) -> None:
        self._log.write(json.dumps(event, separators=(",", ":")) + "\n")
        self._log.flush()
        os.fsync(self._log.fileno())

    def close(self) -> None:
        self._log.close()

    # -- operations ----------------------------------------------------

    @property
    def bundle(self) -> ModelBundle:
        return self._bundle

    def records(self) -> list[GrooveRecord]:
        with self._lock:
            return list(self._records.values())

    def create_groove(
        self,
        style: StyleTag | str,
        kick_grid=None,
        kick_text: str | None = None,
    ) -> GrooveRecord:
        if isinstance(style, str):
            style = parse_style(style)
        if (kick_grid is None) == (kick_text is None):
            raise ValueError("provide exactly one of kick_grid or kick_text")
        if kick_grid is not None:
            kick = kick_grid_to_phrase(style, kick_grid)
        else:
            kick = parse_phrase(kick_text)
            if kick.style is not style:
                raise ValueError("kick phrase style does not match request style")
        with self._lock:
            method = choose_method(self._rng)
            seed = int(self._rng.integers(0, _MAX_SEED))
            groove_id = self._rng.bytes(16).hex()
            result = generate(self._bundle, kick, method, seed)
            record = GrooveRecord(
                id=groove_id,
                timestamp=datetime.now(timezone.utc).isoformat(),
                style=style,
                kick_text=render_phrase(kick),
                method=method,
                seed=seed,
                output_text=render_phrase(result.phrase),
                mean_selected_probability=mean_selected_probability(result),
            )
            self._append(
                {
                    "event": "groove",
                    "id": record.id,
                    "timestamp": record.timestamp,
                    "style": record.style.word,
                    "kick": record.kick_text,
                    "method": int(record.method),
                    "seed": record.seed,
                    "output": record.output_text,
                    "mean_selected_probability": record.mean_selected_probability,
                }
            )
            self._records[record.id] = record
            return record

    def submit_rating(self, groove_id: str, rating: str) -> GrooveRecord:
        if rating not in RATING_VALUES:
            raise InvalidRatingError(
                f"rating must be one of {sorted(RATING_VALUES)}, got {rating!r}"
            )
        with self._lock:
            record = self._records.get(groove_id)
            if record is None:
                raise UnknownGrooveError(f"no groove with id {groove_id}")
            if record.rating is not None:
                raise AlreadyRatedError(f"groove {groove_id} is already rated")
            updated = dataclasses.replace(record, rating=rating)
            self._append(
                {
                    "event": "rating",
                    "id": groove_id,
                    "timestamp": datetime.now(timezone.utc).isoformat(),
                    "rating": rating,
                }
            )
            self._records[groove_id] = updated
            return updated


# --- aggregation -------------------------------------------------------------


def _round2(numerator: int | float, denominator: int) -> float:
    value = Decimal(str(numerator)) / Decimal(denominator)
    return float(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MethodAggregate:
    method: SamplingMethod
    raw: dict[str, int]  # good / average / poor counts
    normalised: dict[str, float | None]

    @property
    def total(self) -> int:
        return sum(self.raw.values())


_RATING_ORDER = ("good", "average", "poor")


def aggregate_by_method(records) -> dict[int, MethodAggregate]:
    """Raw counts and row-normalized (2-decimal, half-up) shares per method."""
    out: dict[int, MethodAggregate] = {}
    rated = [r for r in records if r.rating is not None]
    for method in SamplingMethod:
        raw = {
            rating: sum(
                1 for r in rated if r.method is method and r.rating == rating
            )
            for rating in _RATING_ORDER
        }
        total = sum(raw.values())
        normalised = {
            rating: (_round2(count, total) if total else None)
            for rating, count in raw.items()
        }
        out[int(method)] = MethodAggregate(method, raw, normalised)
    return out


def aggregate_by_probability_bracket(records) -> dict[str, float | None]:
    """Mean numeric rating per mean-selected-probability bracket."""
    sums: dict[str, int] = {}
    counts: dict[str, int] = {}
    for record in records:
        if record.rating is None:
            continue
        label = probability_bracket(record.mean_selected_probability)
        sums[label] = sums.get(label, 0) + RATING_VALUES[record.rating]
        counts[label] = counts.get(label, 0) + 1
    return {
        label: (_round2(sums[label], counts[label]) if counts.get(label) else None)
        for label in ALL_BRACKET_LABELS
    }


def aggregate_by_style(records) -> dict[str, dict]:
    """Per style: rating counts and the share rated poor (2 decimals)."""
    out: dict[str, dict] = {}
    rated = [r for r in records if r.rating is not None]
    for style in StyleTag:
        counts = {
            rating: sum(
                1 for r in rated if r.style is style and r.rating == rating
            )
            for rating in _RATING_ORDER
        }
        total = sum(counts.values())
        out[style.word] = {
            "counts": counts,
            "total": total,
            "poor_share": _round2(counts["poor"], total) if total else None,
        }
    return out
