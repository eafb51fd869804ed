"""Corpus loading, sentence splitting, and synthetic style-grammar data.

The corpus text format is one phrase per line in the render_phrase word
syntax; lines starting with '#' are comments, blank lines are skipped.

Because no real score collection ships with the package, training data is
synthesized from per-style grammars kept in a versioned JSON data file
(data/style_grammars.json).  A grammar fixes mandatory hits (rock/pop/funk
backbeat, the 2-bar son-clave template for afrocuban), a per-phrase
timekeeping pulse choice, kick anchors plus optional kick coins, per-bar
extras (crashes, fills, ghost notes), and deterministic kit echoes of kick
hits, so the kit side is a learnable function of (style, kick) with modest
conditional entropy.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .tokens import (
    BARS_PER_PHRASE,
    STEPS_PER_BAR,
    Bar,
    DrumVoice,
    ParseError,
    Phrase,
    StyleTag,
    SubdivisionToken,
    parse_phrase,
    render_phrase,
    strip_kick,
)

GRAMMAR_VERSION = 1

_LETTERS = {v.letter: v for v in DrumVoice}


class CorpusError(ValueError):
    """Corpus stream failed to load; message carries the line number."""


class GrammarError(ValueError):
    """Malformed style-grammar data file."""


@dataclass(frozen=True)
class Corpus:
    phrases: tuple[Phrase, ...]
    style_counts: dict[StyleTag, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.phrases, tuple):
            object.__setattr__(self, "phrases", tuple(self.phrases))
        counts = Counter(p.style for p in self.phrases)
        object.__setattr__(self, "style_counts", dict(counts))

    def __len__(self) -> int:
        return len(self.phrases)


def load_corpus(source: IO[str] | str | Path) -> Corpus:
    """Parse a corpus stream or file path; fails atomically on first error."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_corpus(fh)
    phrases: list[Phrase] = []
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            phrases.append(parse_phrase(stripped))
        except ParseError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from None
    return Corpus(tuple(phrases))


def save_corpus(corpus: Corpus, destination: IO[str] | str | Path) -> None:
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8") as fh:
            save_corpus(corpus, fh)
        return
    for phrase in corpus.phrases:
        destination.write(render_phrase(phrase) + "\n")


def split_into_sentences(style: StyleTag, bars: Iterable[Bar]) -> list[Phrase]:
    """Cut a bar track into consecutive non-overlapping 4-bar phrases.

    The trailing remainder (N mod 4 bars) is dropped.
    """
    bars = list(bars)
    if len(bars) < BARS_PER_PHRASE:
        raise CorpusError(
            f"track has {len(bars)} bars; at least {BARS_PER_PHRASE} required"
        )
    count = len(bars) // BARS_PER_PHRASE
    return [
        Phrase(style, tuple(bars[i * 4 : i * 4 + 4])) for i in range(count)
    ]


# --- style grammars -------------------------------------------------------


@dataclass(frozen=True)
class MandatoryRule:
    voice: DrumVoice
    cycle: tuple[tuple[int, ...], ...]  # steps per bar, cycled by bar index

    def steps_for_bar(self, bar_index: int) -> tuple[int, ...]:
        return self.cycle[bar_index % len(self.cycle)]


@dataclass(frozen=True)
class PulseChoice:
    steps: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class OptionalKick:
    step: int
    prob: float


@dataclass(frozen=True)
class ExtraRule:
    bars: tuple[int, ...] | None  # None = every bar
    prob: float
    hits: tuple[tuple[DrumVoice, int], ...]

    def applies_to(self, bar_index: int) -> bool:
        return self.bars is None or bar_index in self.bars


@dataclass(frozen=True)
class EchoRule:
    voice: DrumVoice
    step: int
    when_kick_at: int


@dataclass(frozen=True)
class StyleGrammar:
    style: StyleTag
    tempo_bpm: int
    mandatory: tuple[MandatoryRule, ...]
    pulse_voice: DrumVoice
    pulse_choices: tuple[PulseChoice, ...]
    kick_anchor_cycle: tuple[tuple[int, ...], ...]  # per-bar, cycled
    kick_optional: tuple[OptionalKick, ...]
    extras: tuple[ExtraRule, ...]
    echoes: tuple[EchoRule, ...]
    seed: int = 0

    def mandatory_hits(self, bar_index: int) -> list[tuple[DrumVoice, int]]:
        """The hits every generated bar at this phrase position must carry."""
        return [
            (rule.voice, step)
            for rule in self.mandatory
            for step in rule.steps_for_bar(bar_index)
        ]

    def kick_anchors(self, bar_index: int) -> tuple[int, ...]:
        return self.kick_anchor_cycle[bar_index % len(self.kick_anchor_cycle)]


def _check_step(value: object, where: str) -> int:
    if not isinstance(value, int) or not 0 <= value < STEPS_PER_BAR:
        raise GrammarError(f"{where}: step {value!r} outside 0..{STEPS_PER_BAR - 1}")
    return value


def _check_voice(letter: object, where: str) -> DrumVoice:
    voice = _LETTERS.get(letter) if isinstance(letter, str) else None
    if voice is None:
        raise GrammarError(f"{where}: unknown voice letter {letter!r}")
    return voice


def _check_prob(value: object, where: str) -> float:
    if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
        raise GrammarError(f"{where}: probability {value!r} outside [0, 1]")
    return float(value)


def _parse_grammar(style: StyleTag, raw: dict) -> StyleGrammar:
    where = f"style {style.word}"
    mandatory = tuple(
        MandatoryRule(
            _check_voice(rule.get("voice"), where),
            tuple(
                tuple(_check_step(s, where) for s in bar_steps)
                for bar_steps in rule.get("cycle", [])
            ),
        )
        for rule in raw.get("mandatory", [])
    )
    if not mandatory or any(not r.cycle for r in mandatory):
        raise GrammarError(f"{where}: mandatory rules with a non-empty cycle required")
    pulse = raw.get("pulse", {})
    choices = tuple(
        PulseChoice(
            tuple(_check_step(s, where) for s in c.get("steps", [])),
            float(c.get("weight", 0.0)),
        )
        for c in pulse.get("choices", [])
    )
    if not choices or any(c.weight <= 0 for c in choices):
        raise GrammarError(f"{where}: pulse choices with positive weights required")
    kick = raw.get("kick", {})
    anchors = tuple(
        tuple(_check_step(s, where) for s in bar_anchors)
        for bar_anchors in kick.get("anchors", [])
    )
    if not anchors or any(not bar_anchors for bar_anchors in anchors):
        raise GrammarError(
            f"{where}: every kick anchor cycle entry needs at least one step"
        )
    optional = tuple(
        OptionalKick(_check_step(o.get("step"), where), _check_prob(o.get("prob"), where))
        for o in kick.get("optional", [])
    )
    extras = tuple(
        ExtraRule(
            None if e.get("bars") is None else tuple(int(b) for b in e["bars"]),
            _check_prob(e.get("prob"), where),
            tuple(
                (_check_voice(h.get("voice"), where), _check_step(h.get("step"), where))
                for h in e.get("hits", [])
            ),
        )
        for e in raw.get("extras", [])
    )
    echoes = tuple(
        EchoRule(
            _check_voice(e.get("voice"), where),
            _check_step(e.get("step"), where),
            _check_step(e.get("when_kick_at"), where),
        )
        for e in raw.get("echoes", [])
    )
    return StyleGrammar(
        style=style,
        tempo_bpm=int(raw.get("tempo_bpm", 110)),
        mandatory=mandatory,
        pulse_voice=_check_voice(pulse.get("voice"), where),
        pulse_choices=choices,
        kick_anchor_cycle=anchors,
        kick_optional=optional,
        extras=extras,
        echoes=echoes,
    )


def load_grammars(path: str | Path | None = None) -> dict[StyleTag, StyleGrammar]:
    """Load the grammar data file (package default when path is None)."""
    if path is None:
        data = json.loads(
            resources.files("kick2kit").joinpath("data/style_grammars.json").read_text()
        )
    else:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("version") != GRAMMAR_VERSION:
        raise GrammarError(
            f"grammar file version {data.get('version')!r}, expected {GRAMMAR_VERSION}"
        )
    grammars: dict[StyleTag, StyleGrammar] = {}
    for style in StyleTag:
        raw = data.get("styles", {}).get(style.word)
        if raw is None:
            raise GrammarError(f"grammar file missing style {style.word}")
        grammars[style] = _parse_grammar(style, raw)
    return grammars


def style_grammar(style: StyleTag) -> StyleGrammar:
    return load_grammars()[style]


def _synthesize_bar(
    grammar: StyleGrammar, bar_index: int, pulse: PulseChoice, rng: np.random.Generator
) -> Bar:
    hits: list[set[DrumVoice]] = [set() for _ in range(STEPS_PER_BAR)]
    for voice, step in grammar.mandatory_hits(bar_index):
        hits[step].add(voice)
    for step in pulse.steps:
        hits[step].add(grammar.pulse_voice)
    kick_steps = set(grammar.kick_anchors(bar_index))
    for opt in grammar.kick_optional:
        if rng.random() < opt.prob:
            kick_steps.add(opt.step)
    for step in kick_steps:
        hits[step].add(DrumVoice.KICK)
    for extra in grammar.extras:
        if extra.applies_to(bar_index) and rng.random() < extra.prob:
            for voice, step in extra.hits:
                hits[step].add(voice)
    for echo in grammar.echoes:
        if echo.when_kick_at in kick_steps:
            hits[echo.step].add(echo.voice)
    return Bar(tuple(SubdivisionToken(frozenset(h)) for h in hits))


def synthesize_phrase(grammar: StyleGrammar, rng: np.random.Generator) -> Phrase:
    weights = np.array([c.weight for c in grammar.pulse_choices], dtype=np.float64)
    pulse = grammar.pulse_choices[rng.choice(len(weights), p=weights / weights.sum())]
    bars = tuple(_synthesize_bar(grammar, b, pulse, rng) for b in range(BARS_PER_PHRASE))
    return Phrase(grammar.style, bars)


def _phrase_rng(style: StyleTag, seed: int, index: int) -> np.random.Generator:
    style_index = list(StyleTag).index(style)
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, style_index, index)))
    )


def synthesize_corpus(style: StyleTag, phrase_count: int, seed: int) -> Corpus:
    """Deterministic synthetic corpus; per-phrase streams derive from
    (seed, style, phrase index), so reruns are bit-identical."""
    if phrase_count < 1:
        raise ValueError("phrase_count must be >= 1")
    grammar = style_grammar(style)
    grammar = StyleGrammar(**{**grammar.__dict__, "seed": seed})
    phrases = tuple(
        synthesize_phrase(grammar, _phrase_rng(style, seed, i))
        for i in range(phrase_count)
    )
    return Corpus(phrases)


def synthesize_mixed_corpus(phrases_per_style: int, seed: int) -> Corpus:
    """All four styles with the same per-style count and a shared seed."""
    phrases: list[Phrase] = []
    for style in StyleTag:
        phrases.extend(synthesize_corpus(style, phrases_per_style, seed).phrases)
    return Corpus(tuple(phrases))


# --- stats ----------------------------------------------------------------


@dataclass(frozen=True)
class CorpusStats:
    phrase_counts: dict[str, int]
    bar_counts: dict[str, int]
    kick_density: dict[str, float]  # fraction of steps carrying the kick
    distinct_target_tokens: int

    def as_dict(self) -> dict:
        return {
            "phrases": self.phrase_counts,
            "bars": self.bar_counts,
            "kick_density": self.kick_density,
            "distinct_target_tokens": self.distinct_target_tokens,
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    phrase_counts: dict[str, int] = {}
    bar_counts: dict[str, int] = {}
    kick_steps: Counter[str] = Counter()
    total_steps: Counter[str] = Counter()
    target_words: set[str] = set()
    for phrase in corpus.phrases:
        word = phrase.style.word
        phrase_counts[word] = phrase_counts.get(word, 0) + 1
        bar_counts[word] = bar_counts.get(word, 0) + BARS_PER_PHRASE
        for tok in phrase.tokens():
            total_steps[word] += 1
            if DrumVoice.KICK in tok.voices:
                kick_steps[word] += 1
        for tok in strip_kick(phrase).tokens():
            target_words.add(tok.word)
    density = {
        style: (kick_steps[style] / total_steps[style]) if total_steps[style] else 0.0
        for style in phrase_counts
    }
    return CorpusStats(phrase_counts, bar_counts, density, len(target_words))
