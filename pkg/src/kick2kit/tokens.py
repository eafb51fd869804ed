"""Drum-bar word syntax and conversions to dense model inputs.

A 4/4 bar is a grid of 48 subdivisions (12 per beat), fine enough for
sixteenth notes and sixteenth-note triplets.  Each subdivision is one word:
the letters of the drums struck there, or "o" for silence.  Barlines are
replaced by a lowercase style word, so a 4-bar phrase renders as
4 x (style word + 48 tokens) = 196 space-separated words.

Letter alphabet (canonical order, case-sensitive):

    C  crash/ride cymbal
    H  hi-hat
    S  snare
    T  high tom
    t  mid tom
    F  floor tom
    K  kick

Words are emitted with letters in that order ("HK", never "KH"); parsing
accepts any order but rejects duplicates and "o" mixed with letters.

Two vocabularies cover the model's source (kick line: "K"/"o") and target
(the other six voices) sides.  Both are built closed-world from the full
voice-set enumeration, so any valid combination encodes without a corpus
scan.  Both include the style words and the <s> / </s> sequence-control
markers used to seed and terminate decoding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


class ParseError(ValueError):
    """Malformed token, word, or phrase line."""


class QuantizeError(ValueError):
    """Onset does not land on the 48-subdivision grid."""


class VocabularyError(ValueError):
    """Word not present in a vocabulary."""


class DrumVoice(enum.Enum):
    """The seven kit voices, each bound to its single-letter spelling."""

    CYMBAL = "C"
    HIHAT = "H"
    SNARE = "S"
    HIGH_TOM = "T"
    TOM = "t"
    FLOOR_TOM = "F"
    KICK = "K"

    @property
    def letter(self) -> str:
        return self.value


# Canonical intra-token letter order.
VOICE_ORDER: tuple[DrumVoice, ...] = (
    DrumVoice.CYMBAL,
    DrumVoice.HIHAT,
    DrumVoice.SNARE,
    DrumVoice.HIGH_TOM,
    DrumVoice.TOM,
    DrumVoice.FLOOR_TOM,
    DrumVoice.KICK,
)
KIT_VOICES: tuple[DrumVoice, ...] = VOICE_ORDER[:-1]  # everything except kick

_LETTER_TO_VOICE = {v.letter: v for v in VOICE_ORDER}

REST_WORD = "o"
BOS_WORD = "<s>"
EOS_WORD = "</s>"

STEPS_PER_BEAT = 12
STEPS_PER_BAR = 48
BARS_PER_PHRASE = 4
WORDS_PER_BAR = STEPS_PER_BAR + 1  # style word + 48 tokens
WORDS_PER_PHRASE = BARS_PER_PHRASE * WORDS_PER_BAR  # 196


class StyleTag(enum.Enum):
    POP = "pop"
    ROCK = "rock"
    FUNK = "funk"
    AFROCUBAN = "afrocuban"

    @property
    def word(self) -> str:
        return self.value


STYLE_WORDS = tuple(s.word for s in StyleTag)
_WORD_TO_STYLE = {s.word: s for s in StyleTag}


@dataclass(frozen=True)
class SubdivisionToken:
    """The set of voices struck on one grid subdivision (may be empty)."""

    voices: frozenset[DrumVoice]

    def __post_init__(self) -> None:
        if not isinstance(self.voices, frozenset):
            object.__setattr__(self, "voices", frozenset(self.voices))

    @property
    def word(self) -> str:
        return canonicalize_token(self.voices)

    def __str__(self) -> str:
        return self.word


REST = SubdivisionToken(frozenset())
KICK_ONLY = SubdivisionToken(frozenset({DrumVoice.KICK}))


@dataclass(frozen=True)
class Bar:
    """Exactly 48 subdivision tokens; index i covers beat position i/12."""

    steps: tuple[SubdivisionToken, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.steps, tuple):
            object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) != STEPS_PER_BAR:
            raise ParseError(
                f"a bar has exactly {STEPS_PER_BAR} steps, got {len(self.steps)}"
            )


SILENT_BAR = Bar(tuple(REST for _ in range(STEPS_PER_BAR)))


@dataclass(frozen=True)
class Phrase:
    """A 4-bar sentence: the training and inference unit."""

    style: StyleTag
    bars: tuple[Bar, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.bars, tuple):
            object.__setattr__(self, "bars", tuple(self.bars))
        if len(self.bars) != BARS_PER_PHRASE:
            raise ParseError(
                f"a phrase has exactly {BARS_PER_PHRASE} bars, got {len(self.bars)}"
            )

    def tokens(self) -> list[SubdivisionToken]:
        """All 192 subdivision tokens in playback order."""
        return [tok for bar in self.bars for tok in bar.steps]


def canonicalize_token(voices: frozenset[DrumVoice] | set[DrumVoice]) -> str:
    """Render a voice set as its word: canonical letter order, "o" if empty."""
    if not voices:
        return REST_WORD
    return "".join(v.letter for v in VOICE_ORDER if v in voices)


def parse_token(word: str) -> SubdivisionToken:
    """Parse one subdivision word.

    Letters may arrive in any order ("SH" == "HS"); duplicates and "o"
    combined with letters are rejected.
    """
    if word == REST_WORD:
        return REST
    if not word:
        raise ParseError("empty token word")
    voices: set[DrumVoice] = set()
    for ch in word:
        voice = _LETTER_TO_VOICE.get(ch)
        if voice is None:
            raise ParseError(f"unknown letter {ch!r} in token {word!r}")
        if voice in voices:
            raise ParseError(f"duplicate letter {ch!r} in token {word!r}")
        voices.add(voice)
    return SubdivisionToken(frozenset(voices))


def parse_style(word: str) -> StyleTag:
    style = _WORD_TO_STYLE.get(word)
    if style is None:
        raise ParseError(f"unknown style word {word!r}")
    return style


def _parse_bar_words(words: list[str]) -> tuple[StyleTag, Bar]:
    style = parse_style(words[0])
    steps = []
    for w in words[1:]:
        try:
            steps.append(parse_token(w))
        except ParseError as exc:
            raise ParseError(f"bad token {w!r}: {exc}") from None
    return style, Bar(tuple(steps))


def parse_bar_line(text: str) -> tuple[StyleTag, Bar]:
    """Parse a single-bar line: style word followed by 48 tokens (49 words)."""
    words = text.split()
    if len(words) != WORDS_PER_BAR:
        raise ParseError(
            f"expected {WORDS_PER_BAR} words for a single-bar line, got {len(words)}"
        )
    return _parse_bar_words(words)


def parse_phrase(text: str) -> Phrase:
    """Parse a 4-bar sentence of 196 whitespace-separated words.

    The style word opens each bar and must be identical across all four.
    """
    words = text.split()
    if len(words) != WORDS_PER_PHRASE:
        raise ParseError(
            f"expected {WORDS_PER_PHRASE} words for a 4-bar phrase, got {len(words)}"
        )
    styles: list[StyleTag] = []
    bars: list[Bar] = []
    for b in range(BARS_PER_PHRASE):
        chunk = words[b * WORDS_PER_BAR : (b + 1) * WORDS_PER_BAR]
        style, bar = _parse_bar_words(chunk)
        styles.append(style)
        bars.append(bar)
    if len(set(styles)) != 1:
        raise ParseError(
            "inconsistent style words: " + ", ".join(s.word for s in styles)
        )
    return Phrase(styles[0], tuple(bars))


def render_bar(style: StyleTag, bar: Bar) -> str:
    return " ".join([style.word] + [tok.word for tok in bar.steps])


def render_phrase(phrase: Phrase) -> str:
    """Inverse of parse_phrase: 196 space-separated words."""
    return " ".join(render_bar(phrase.style, bar) for bar in phrase.bars)


def phrase_words(phrase: Phrase) -> list[str]:
    """The phrase as a 196-word list (what render_phrase joins)."""
    return render_phrase(phrase).split()


def quantize_onset(beat_position: Fraction | int) -> int:
    """Map an exact beat position (0 <= pos < 4) to its subdivision index.

    Raises QuantizeError when position * 12 is not an integer, i.e. the
    onset is finer than the semiquaver-triplet grid.
    """
    pos = Fraction(beat_position)
    if not 0 <= pos < 4:
        raise QuantizeError(f"beat position {pos} outside [0, 4)")
    index = pos * STEPS_PER_BEAT
    if index.denominator != 1:
        raise QuantizeError(f"beat position {pos} is off the 48-subdivision grid")
    return int(index)


def _map_steps(phrase: Phrase, fn) -> Phrase:
    bars = tuple(
        Bar(tuple(SubdivisionToken(fn(tok.voices)) for tok in bar.steps))
        for bar in phrase.bars
    )
    return Phrase(phrase.style, bars)


def extract_kick(phrase: Phrase) -> Phrase:
    """Reduce every step to its kick component; tokens become "K" or "o"."""
    kick = frozenset({DrumVoice.KICK})
    return _map_steps(phrase, lambda voices: voices & kick)


def strip_kick(phrase: Phrase) -> Phrase:
    """Drop the kick from every step; the model's target side."""
    kick = frozenset({DrumVoice.KICK})
    return _map_steps(phrase, lambda voices: voices - kick)


def merge_phrases(kick: Phrase, kit: Phrase) -> Phrase:
    """Union of two phrases stepwise (recombines extract/strip output)."""
    if kick.style is not kit.style:
        raise ParseError("cannot merge phrases with different styles")
    bars = tuple(
        Bar(
            tuple(
                SubdivisionToken(a.voices | b.voices)
                for a, b in zip(bar_a.steps, bar_b.steps)
            )
        )
        for bar_a, bar_b in zip(kick.bars, kit.bars)
    )
    return Phrase(kick.style, bars)


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between words and dense indices for one model side."""

    words: tuple[str, ...]
    role: str  # "source" | "target"

    def __post_init__(self) -> None:
        if len(set(self.words)) != len(self.words):
            raise VocabularyError("vocabulary words must be distinct")
        object.__setattr__(
            self, "_index", {w: i for i, w in enumerate(self.words)}
        )

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> int:
        idx = self._index.get(word)
        if idx is None:
            raise VocabularyError(f"word {word!r} not in {self.role} vocabulary")
        return idx

    def word(self, index: int) -> str:
        return self.words[index]

    @property
    def bos_index(self) -> int:
        return self.index(BOS_WORD)

    @property
    def eos_index(self) -> int:
        return self.index(EOS_WORD)


def _kit_combination_words() -> list[str]:
    """All 64 kit words: "o" plus every non-empty combination of the six
    kit voices, enumerated by bitmask over the canonical letter order."""
    words = [REST_WORD]
    for mask in range(1, 1 << len(KIT_VOICES)):
        voices = frozenset(
            v for i, v in enumerate(KIT_VOICES) if mask & (1 << i)
        )
        words.append(canonicalize_token(voices))
    return words


@lru_cache(maxsize=None)
def source_vocabulary() -> Vocabulary:
    """Kick-line words: markers, styles, "o", "K" (8 words)."""
    words = (BOS_WORD, EOS_WORD, *STYLE_WORDS, REST_WORD, DrumVoice.KICK.letter)
    return Vocabulary(words, "source")


@lru_cache(maxsize=None)
def target_vocabulary() -> Vocabulary:
    """Kit words: markers, styles, then the closed 64-word kit enumeration
    (70 words).  No word contains the letter K."""
    words = (BOS_WORD, EOS_WORD, *STYLE_WORDS, *_kit_combination_words())
    return Vocabulary(words, "target")


def drum_word_indices(vocab: Vocabulary) -> np.ndarray:
    """Indices of the subdivision words (everything except styles/markers)."""
    skip = set(STYLE_WORDS) | {BOS_WORD, EOS_WORD}
    return np.array(
        [i for i, w in enumerate(vocab.words) if w not in skip], dtype=np.int64
    )


def encode_for_model(phrase: Phrase, vocab: Vocabulary) -> np.ndarray:
    """One-hot encode the rendered phrase, reversed, as a (196, V) array.

    Row i is the one-hot vector of the (196 - 1 - i)-th rendered word.
    """
    words = phrase_words(phrase)
    out = np.zeros((len(words), len(vocab)), dtype=np.float64)
    for row, word in enumerate(reversed(words)):
        out[row, vocab.index(word)] = 1.0
    return out


def words_to_indices(words: list[str], vocab: Vocabulary) -> np.ndarray:
    return np.array([vocab.index(w) for w in words], dtype=np.int64)


def one_hot_to_indices(seq: np.ndarray, vocab_size: int) -> np.ndarray:
    """Validate a one-hot sequence and collapse it to indices."""
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != vocab_size:
        raise ValueError(
            f"expected one-hot rows of width {vocab_size}, got shape {seq.shape}"
        )
    if not np.all((seq == 0.0) | (seq == 1.0)) or not np.all(seq.sum(axis=1) == 1.0):
        raise ValueError("rows must be one-hot (single entry 1, rest 0)")
    return seq.argmax(axis=1).astype(np.int64)
