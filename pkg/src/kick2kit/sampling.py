"""Softmax sampling strategies, full-groove generation, and self-rating.

Three selection strategies are exposed under stable numeric identifiers:

    1  greedy: the argmax token (ties to the lowest index)
    2  roulette: draw proportionally to the full distribution
    3  top-3 roulette: draw among the three most probable tokens after
       renormalizing their masses

Generation runs the decoder free-running over a 4-bar sentence.  Style
words at barline positions are forced, never sampled or scored.  At each of
the 192 subdivision positions the raw softmax output is restricted to the
subdivision words plus the end marker (style and start-marker mass is
renormalized away, since neither can occupy a grid step); the chosen
strategy samples that restricted distribution, and the probability it
assigned to the selected token is recorded.  The arithmetic mean of the 192
recorded probabilities is the model's self-rating for the groove.

Randomness comes from numpy's PCG64 generator seeded via SeedSequence, so a
logged seed replays the identical draw sequence on any build.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .checkpoint import ModelBundle
from .model import decode_step, encode
from .tokens import (
    BARS_PER_PHRASE,
    REST_WORD,
    STEPS_PER_BAR,
    WORDS_PER_BAR,
    Bar,
    Phrase,
    drum_word_indices,
    encode_for_model,
    extract_kick,
    parse_token,
    render_phrase,
)


class SamplingMethod(enum.IntEnum):
    GREEDY = 1
    ROULETTE = 2
    TOP3 = 3


def make_rng(seed: int) -> np.random.Generator:
    """The project-wide reproducible generator (PCG64 behind SeedSequence)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def greedy_select(dist: np.ndarray) -> int:
    """Index of the maximum probability; ties break to the lowest index."""
    return int(np.argmax(dist))


def roulette_select(dist: np.ndarray, rng: np.random.Generator) -> int:
    """Draw index i with probability dist[i]."""
    cumulative = np.cumsum(dist)
    draw = rng.random() * cumulative[-1]
    return int(min(np.searchsorted(cumulative, draw, side="right"), len(dist) - 1))


def topk_roulette_select(
    dist: np.ndarray, rng: np.random.Generator, k: int = 3
) -> int:
    """Roulette over the k most probable indices, renormalized.

    Cutoff ties break to the lowest index; k >= vocabulary size degenerates
    to plain roulette and k == 1 to greedy.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    top = np.argsort(-dist, kind="stable")[:k]
    masses = dist[top]
    return int(top[roulette_select(masses / masses.sum(), rng)])


def _select(method: SamplingMethod, dist: np.ndarray, rng: np.random.Generator) -> int:
    if method is SamplingMethod.GREEDY:
        return greedy_select(dist)
    if method is SamplingMethod.ROULETTE:
        return roulette_select(dist, rng)
    return topk_roulette_select(dist, rng, k=3)


@dataclass(frozen=True)
class GenerationResult:
    phrase: Phrase  # kit part only; never contains the kick voice
    kick_phrase: Phrase
    selected_probabilities: tuple[float, ...]
    method: SamplingMethod
    seed: int
    ended_early_at: int | None = None  # subdivision position of the end marker

    def log_record(self) -> dict:
        """Self-contained structured record of one generation."""
        return {
            "input_phrase": render_phrase(self.kick_phrase),
            "style": self.phrase.style.word,
            "method": int(self.method),
            "seed": self.seed,
            "output_phrase": render_phrase(self.phrase),
            "selected_probabilities": list(self.selected_probabilities),
            "mean_probability": mean_selected_probability(self),
            "ended_early_at": self.ended_early_at,
        }


def restricted_step_distribution(dist: np.ndarray, bundle: ModelBundle) -> np.ndarray:
    """The distribution a subdivision position samples from: subdivision
    words plus the end marker, renormalized."""
    vocab = bundle.target_vocab
    keep = np.zeros(len(vocab), dtype=bool)
    keep[drum_word_indices(vocab)] = True
    keep[vocab.eos_index] = True
    out = np.where(keep, dist, 0.0)
    return out / out.sum()


def _validate_kick_phrase(kick_phrase: Phrase) -> None:
    if extract_kick(kick_phrase) != kick_phrase:
        raise ValueError(
            "kick phrase may only contain K and o tokens; run extract_kick first"
        )


def _validate_bundle(bundle: ModelBundle, kick_phrase: Phrase) -> None:
    needed_source = {kick_phrase.style.word, "K", REST_WORD}
    missing = [w for w in needed_source if w not in bundle.source_vocab]
    if missing or kick_phrase.style.word not in bundle.target_vocab:
        raise ValueError(
            f"vocabulary mismatch: model bundle lacks words {missing or [kick_phrase.style.word]}"
        )


def generate(
    bundle: ModelBundle,
    kick_phrase: Phrase,
    method: SamplingMethod,
    seed: int,
) -> GenerationResult:
    """Translate a kick sentence into the other kit voices.

    Deterministic in (bundle, kick_phrase, method, seed); method 1 ignores
    the seed entirely.  If the end marker is sampled early, the remaining
    positions are silent and carry the probability the distribution gave
    the marker, and the result is flagged with the position.
    """
    _validate_kick_phrase(kick_phrase)
    _validate_bundle(bundle, kick_phrase)
    method = SamplingMethod(method)
    params = bundle.params
    vocab = bundle.target_vocab
    style = kick_phrase.style

    state = encode(params, encode_for_model(kick_phrase, bundle.source_vocab))
    rng = make_rng(seed)
    style_index = vocab.index(style.word)

    probs: list[float] = []
    step_words: list[str] = []
    previous = vocab.bos_index
    ended_early_at: int | None = None
    for position in range(BARS_PER_PHRASE * WORDS_PER_BAR):
        dist, state = decode_step(params, state, previous)
        if position % WORDS_PER_BAR == 0:
            previous = style_index  # forced barline style word, not scored
            continue
        restricted = restricted_step_distribution(dist, bundle)
        token = _select(method, restricted, rng)
        probability = float(restricted[token])
        if token == vocab.eos_index:
            ended_early_at = len(step_words)
            fill = (BARS_PER_PHRASE * STEPS_PER_BAR) - len(step_words)
            probs.extend([probability] * fill)
            step_words.extend([REST_WORD] * fill)
            break
        probs.append(probability)
        step_words.append(vocab.word(token))
        previous = token

    bars = tuple(
        Bar(tuple(parse_token(w) for w in step_words[b * 48 : (b + 1) * 48]))
        for b in range(BARS_PER_PHRASE)
    )
    return GenerationResult(
        phrase=Phrase(style, bars),
        kick_phrase=kick_phrase,
        selected_probabilities=tuple(probs),
        method=method,
        seed=seed,
        ended_early_at=ended_early_at,
    )


def mean_selected_probability(result: GenerationResult) -> float:
    """Arithmetic mean of the recorded selected probabilities."""
    if not result.selected_probabilities:
        raise ValueError("no selected probabilities recorded")
    return float(np.mean(result.selected_probabilities))


BELOW_RANGE_LABEL = "<0.2"
ABOVE_RANGE_LABEL = ">=0.9"
BRACKET_LABELS = (
    "0.2-0.3",
    "0.3-0.4",
    "0.4-0.5",
    "0.5-0.6",
    "0.6-0.7",
    "0.7-0.8",
    "0.8-0.9",
)
ALL_BRACKET_LABELS = (BELOW_RANGE_LABEL, *BRACKET_LABELS, ABOVE_RANGE_LABEL)


def probability_bracket(mean: float) -> str:
    """Half-open tenth brackets [0.2, 0.3) .. [0.8, 0.9) with out-of-range
    labels on both sides.

    Boundaries compare through the shortest decimal rendering of the float,
    so 0.30 lands in "0.3-0.4" rather than falling a few ulps short.
    """
    if not 0.0 <= mean <= 1.0:
        raise ValueError(f"mean probability {mean} outside [0, 1]")
    value = Decimal(repr(float(mean)))
    if value < Decimal("0.2"):
        return BELOW_RANGE_LABEL
    if value >= Decimal("0.9"):
        return ABOVE_RANGE_LABEL
    tenth = int(value * 10)  # 2..8
    return f"0.{tenth}-0.{tenth + 1}"
