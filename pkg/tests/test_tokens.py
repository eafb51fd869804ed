import numpy as np
import pytest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from kick2kit import tokens
from kick2kit.tokens import (
    Bar,
    DrumVoice,
    ParseError,
    Phrase,
    QuantizeError,
    StyleTag,
    SubdivisionToken,
    VocabularyError,
    canonicalize_token,
    encode_for_model,
    extract_kick,
    merge_phrases,
    parse_bar_line,
    parse_phrase,
    parse_token,
    quantize_onset,
    render_phrase,
    source_vocabulary,
    strip_kick,
    target_vocabulary,
)

# The published single-bar example: kick on each quarter-note beat, pop style.
BEAT_KICK_BAR_WORDS = ["pop"] + [
    "K" if i % 12 == 0 else "o" for i in range(48)
]
BEAT_KICK_LINE = " ".join(BEAT_KICK_BAR_WORDS)


def beat_kick_phrase(style: StyleTag = StyleTag.POP) -> Phrase:
    steps = tuple(
        tokens.KICK_ONLY if i % 12 == 0 else tokens.REST for i in range(48)
    )
    bar = Bar(steps)
    return Phrase(style, (bar,) * 4)


# --- canonicalize_token -------------------------------------------------


def test_canonicalize_kick_only():
    assert canonicalize_token({DrumVoice.KICK}) == "K"


def test_canonicalize_empty_is_rest():
    assert canonicalize_token(frozenset()) == "o"


def test_canonicalize_orders_letters():
    assert canonicalize_token({DrumVoice.SNARE, DrumVoice.HIHAT}) == "HS"


def test_canonicalize_full_kit_order():
    assert canonicalize_token(set(DrumVoice)) == "CHSTtFK"


# --- parse_token --------------------------------------------------------


def test_parse_token_accepts_any_order():
    assert parse_token("SH") == parse_token("HS")
    assert parse_token("SH").word == "HS"


def test_parse_token_rejects_duplicates():
    with pytest.raises(ParseError):
        parse_token("HH")


def test_parse_token_rejects_rest_combined():
    with pytest.raises(ParseError):
        parse_token("Ko")


def test_parse_token_rejects_unknown_letter():
    with pytest.raises(ParseError):
        parse_token("X")


def test_parse_token_case_sensitive():
    assert parse_token("T").voices == frozenset({DrumVoice.HIGH_TOM})
    assert parse_token("t").voices == frozenset({DrumVoice.TOM})
    with pytest.raises(ParseError):
        parse_token("h")


# --- parse/render phrase ------------------------------------------------


def test_parse_beat_kick_sentence():
    line = " ".join([BEAT_KICK_LINE] * 4)
    phrase = parse_phrase(line)
    assert phrase == beat_kick_phrase()
    for bar in phrase.bars:
        for i, tok in enumerate(bar.steps):
            expected = {DrumVoice.KICK} if i % 12 == 0 else set()
            assert tok.voices == frozenset(expected)


def test_parse_silent_rock_phrase():
    line = " ".join((["rock"] + ["o"] * 48) * 4)
    phrase = parse_phrase(line)
    assert phrase.style is StyleTag.ROCK
    assert all(tok.voices == frozenset() for tok in phrase.tokens())


def test_parse_rejects_wrong_word_count():
    line = " ".join([BEAT_KICK_LINE] * 4).rsplit(" ", 1)[0]  # 195 words
    with pytest.raises(ParseError, match="word"):
        parse_phrase(line)


def test_parse_rejects_inconsistent_styles():
    line = " ".join([BEAT_KICK_LINE] * 3 + [BEAT_KICK_LINE.replace("pop", "rock")])
    with pytest.raises(ParseError, match="style"):
        parse_phrase(line)


def test_parse_rejects_unknown_word():
    line = " ".join([BEAT_KICK_LINE] * 4).replace(" o ", " zap ", 1)
    with pytest.raises(ParseError):
        parse_phrase(line)


def test_parse_canonicalizes_input_order():
    base = (["funk"] + ["o"] * 48) * 4
    base[5] = "KS"  # non-canonical: K before S
    phrase = parse_phrase(" ".join(base))
    assert tokens.phrase_words(phrase)[5] == "SK"


def test_render_beat_kick_matches_published_line():
    assert render_phrase(beat_kick_phrase()) == " ".join([BEAT_KICK_LINE] * 4)


def test_render_silent_rock():
    phrase = Phrase(StyleTag.ROCK, (tokens.SILENT_BAR,) * 4)
    assert render_phrase(phrase) == " ".join((["rock"] + ["o"] * 48) * 4)


def test_render_mixed_token_word():
    steps = list(tokens.SILENT_BAR.steps)
    steps[0] = SubdivisionToken(frozenset({DrumVoice.HIHAT, DrumVoice.KICK}))
    phrase = Phrase(StyleTag.POP, (Bar(tuple(steps)),) + (tokens.SILENT_BAR,) * 3)
    assert tokens.phrase_words(phrase)[1] == "HK"


def test_parse_bar_line_roundtrip():
    style, bar = parse_bar_line(BEAT_KICK_LINE)
    assert style is StyleTag.POP
    assert tokens.render_bar(style, bar) == BEAT_KICK_LINE


def test_bar_requires_48_steps():
    with pytest.raises(ParseError):
        Bar(tuple(tokens.REST for _ in range(47)))


# --- quantize_onset -----------------------------------------------------


@pytest.mark.parametrize(
    "pos,index",
    [
        (0, 0),
        (Fraction(1, 2), 6),
        (Fraction(1, 3), 4),
        (Fraction(1, 4), 3),
        (1, 12),
        (Fraction(47, 12), 47),
    ],
)
def test_quantize_on_grid(pos, index):
    assert quantize_onset(pos) == index


def test_quantize_off_grid_names_position():
    with pytest.raises(QuantizeError, match="1/8"):
        quantize_onset(Fraction(1, 8))


def test_quantize_out_of_range():
    with pytest.raises(QuantizeError):
        quantize_onset(4)


# --- extract/strip kick -------------------------------------------------


def _phrase_with_step0(voices: set[DrumVoice]) -> Phrase:
    steps = list(tokens.SILENT_BAR.steps)
    steps[0] = SubdivisionToken(frozenset(voices))
    return Phrase(StyleTag.FUNK, (Bar(tuple(steps)),) + (tokens.SILENT_BAR,) * 3)


def test_extract_kick_reduces_mixed_token():
    phrase = _phrase_with_step0({DrumVoice.HIHAT, DrumVoice.KICK})
    kick = extract_kick(phrase)
    assert tokens.phrase_words(kick)[1] == "K"
    assert kick.style is StyleTag.FUNK


def test_extract_kick_drops_non_kick():
    phrase = _phrase_with_step0({DrumVoice.HIHAT, DrumVoice.SNARE})
    assert tokens.phrase_words(extract_kick(phrase))[1] == "o"


def test_extract_kick_idempotent():
    phrase = beat_kick_phrase()
    assert extract_kick(phrase) == phrase


def test_strip_kick_examples():
    phrase = _phrase_with_step0({DrumVoice.HIHAT, DrumVoice.KICK})
    assert tokens.phrase_words(strip_kick(phrase))[1] == "H"
    phrase = _phrase_with_step0({DrumVoice.KICK})
    assert tokens.phrase_words(strip_kick(phrase))[1] == "o"


# --- vocabularies -------------------------------------------------------


def test_source_vocabulary_contents():
    vocab = source_vocabulary()
    assert set(vocab.words) == {
        "<s>", "</s>", "pop", "rock", "funk", "afrocuban", "o", "K",
    }
    assert vocab.role == "source"


def test_target_vocabulary_size_and_no_kick():
    vocab = target_vocabulary()
    assert len(vocab) == 2 + 4 + 64
    assert all("K" not in w for w in vocab.words)


def test_vocabulary_roundtrip_every_word():
    for vocab in (source_vocabulary(), target_vocabulary()):
        for i, w in enumerate(vocab.words):
            assert vocab.index(w) == i
            assert vocab.word(i) == w


def test_vocabularies_share_styles_and_markers():
    src, tgt = source_vocabulary(), target_vocabulary()
    for w in ("pop", "rock", "funk", "afrocuban", "<s>", "</s>", "o"):
        assert w in src or w == "o"
        assert w in tgt


def test_unknown_word_errors_name_the_word():
    with pytest.raises(VocabularyError, match="zap"):
        source_vocabulary().index("zap")


# --- encode_for_model ---------------------------------------------------


def test_encode_one_hot_shape_and_reversal():
    phrase = beat_kick_phrase()
    vocab = source_vocabulary()
    enc = encode_for_model(phrase, vocab)
    words = tokens.phrase_words(phrase)
    assert enc.shape == (196, len(vocab))
    assert np.all(enc.sum(axis=1) == 1.0)
    # first row is the LAST rendered word
    assert enc[0].argmax() == vocab.index(words[-1])
    assert enc[-1].argmax() == vocab.index(words[0])


def test_encode_rejects_out_of_vocab():
    phrase = _phrase_with_step0({DrumVoice.HIHAT})
    with pytest.raises(VocabularyError, match="H"):
        encode_for_model(phrase, source_vocabulary())


def test_encode_reverse_twice_restores_order():
    phrase = beat_kick_phrase()
    vocab = source_vocabulary()
    enc = encode_for_model(phrase, vocab)
    restored = [vocab.word(i) for i in enc[::-1].argmax(axis=1)]
    assert restored == tokens.phrase_words(phrase)


# --- property tests -----------------------------------------------------

voice_sets = st.frozensets(st.sampled_from(list(DrumVoice)), max_size=7)


@st.composite
def phrases(draw):
    style = draw(st.sampled_from(list(StyleTag)))
    bars = tuple(
        Bar(tuple(SubdivisionToken(draw(voice_sets)) for _ in range(48)))
        for _ in range(4)
    )
    return Phrase(style, bars)


@given(phrases())
@settings(max_examples=60, deadline=None)
def test_property_parse_render_roundtrip(phrase):
    assert parse_phrase(render_phrase(phrase)) == phrase


@given(voice_sets)
def test_property_canonicalize_idempotent(voices):
    word = canonicalize_token(voices)
    assert parse_token(word).word == word


@given(phrases())
@settings(max_examples=40, deadline=None)
def test_property_kick_partition(phrase):
    kick, kit = extract_kick(phrase), strip_kick(phrase)
    for a, b, orig in zip(kick.tokens(), kit.tokens(), phrase.tokens()):
        assert a.voices | b.voices == orig.voices
        assert not (a.voices & b.voices)
    assert merge_phrases(kick, kit) == phrase


@given(phrases())
@settings(max_examples=20, deadline=None)
def test_property_kick_phrase_encodes(phrase):
    enc = encode_for_model(extract_kick(phrase), source_vocabulary())
    sums = enc.sum(axis=1)
    assert np.all(sums == 1.0)
    assert np.all((enc == 0.0) | (enc == 1.0))
