import numpy as np
import pytest
from scipy import stats

from kick2kit.checkpoint import ModelBundle
from kick2kit.model import ModelConfig, init_model
from kick2kit.sampling import SamplingMethod, make_rng
from kick2kit.survey import (
    AlreadyRatedError,
    GrooveRecord,
    InvalidRatingError,
    LogReplayError,
    SurveyStore,
    UnknownGrooveError,
    aggregate_by_method,
    aggregate_by_probability_bracket,
    aggregate_by_style,
    choose_method,
    kick_grid_to_phrase,
    phrase_to_voice_grids,
)
from kick2kit.tokens import StyleTag, parse_phrase, source_vocabulary, target_vocabulary


@pytest.fixture(scope="module")
def bundle():
    config = ModelConfig(
        source_vocab_size=len(source_vocabulary()),
        target_vocab_size=len(target_vocabulary()),
        hidden_size=8,
        layer_count=1,
    )
    return ModelBundle(init_model(config, 5), source_vocabulary(), target_vocabulary())


@pytest.fixture()
def store(bundle, tmp_path):
    return SurveyStore(bundle, tmp_path / "log.ndjson", seed=99)


def beat_grid():
    return [[i % 12 == 0 for i in range(48)] for _ in range(4)]


def fake_record(method=SamplingMethod.GREEDY, rating=None, mean=0.5,
                style=StyleTag.POP, rid="x"):
    return GrooveRecord(
        id=rid,
        timestamp="2026-01-01T00:00:00+00:00",
        style=style,
        kick_text="",
        method=method,
        seed=0,
        output_text="",
        mean_selected_probability=mean,
        rating=rating,
    )


# --- grid conversion ---------------------------------------------------------


def test_kick_grid_roundtrip():
    phrase = kick_grid_to_phrase(StyleTag.ROCK, beat_grid())
    words = phrase.tokens()
    assert sum(1 for t in words if t.voices) == 16


def test_kick_grid_dimension_error():
    bad = [[False] * 47 for _ in range(4)]
    with pytest.raises(ValueError, match="48"):
        kick_grid_to_phrase(StyleTag.ROCK, bad)
    with pytest.raises(ValueError):
        kick_grid_to_phrase(StyleTag.ROCK, [[False] * 48] * 3)


def test_voice_grids_cover_kit_voices(bundle, store):
    record = store.create_groove("pop", kick_grid=beat_grid())
    grids = phrase_to_voice_grids(parse_phrase(record.output_text))
    assert set(grids) == {"C", "H", "S", "T", "t", "F"}
    assert all(len(g) == 4 and all(len(b) == 48 for b in g) for g in grids.values())


# --- store behaviour ------------------------------------------------------------


def test_create_groove_contract(store):
    record = store.create_groove("pop", kick_grid=beat_grid())
    assert record.method in set(SamplingMethod)
    assert 0 < record.mean_selected_probability <= 1
    assert record.rating is None
    assert parse_phrase(record.output_text).style is StyleTag.POP


def test_create_groove_accepts_phrase_text(store):
    line = " ".join((["rock"] + ["K" if i == 0 else "o" for i in range(48)]) * 4)
    record = store.create_groove("rock", kick_text=line)
    assert record.kick_text == line


def test_create_groove_rejects_mismatched_style(store):
    line = " ".join((["rock"] + ["K" if i == 0 else "o" for i in range(48)]) * 4)
    with pytest.raises(ValueError, match="style"):
        store.create_groove("pop", kick_text=line)


def test_rating_lifecycle(store):
    record = store.create_groove("funk", kick_grid=beat_grid())
    updated = store.submit_rating(record.id, "good")
    assert updated.rating == "good"
    assert updated.rating_value == 2
    with pytest.raises(AlreadyRatedError):
        store.submit_rating(record.id, "poor")
    with pytest.raises(UnknownGrooveError):
        store.submit_rating("nope", "good")
    with pytest.raises(InvalidRatingError):
        store.submit_rating(record.id, "great")


def test_log_replay_reproduces_state(bundle, tmp_path):
    path = tmp_path / "log.ndjson"
    store = SurveyStore(bundle, path, seed=1)
    r1 = store.create_groove("pop", kick_grid=beat_grid())
    r2 = store.create_groove("afrocuban", kick_grid=beat_grid())
    store.submit_rating(r1.id, "average")
    store.close()

    replayed = SurveyStore(bundle, path, seed=1)
    records = {r.id: r for r in replayed.records()}
    assert records[r1.id].rating == "average"
    assert records[r2.id].rating is None
    assert records == {r.id: r for r in store.records()}


def test_log_replay_tolerates_torn_final_line(bundle, tmp_path):
    path = tmp_path / "log.ndjson"
    store = SurveyStore(bundle, path, seed=1)
    store.create_groove("pop", kick_grid=beat_grid())
    store.close()
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"event": "groove", "id": "trunc')
    replayed = SurveyStore(bundle, path, seed=1)
    assert len(replayed.records()) == 1


def test_log_replay_rejects_mid_file_corruption(bundle, tmp_path):
    path = tmp_path / "log.ndjson"
    store = SurveyStore(bundle, path, seed=1)
    store.create_groove("pop", kick_grid=beat_grid())
    store.close()
    good_line = path.read_text().splitlines()[0]
    path.write_text("garbage\n" + good_line + "\n")
    with pytest.raises(LogReplayError, match="line 1"):
        SurveyStore(bundle, path, seed=1)


def test_concurrent_creates_serialize_through_the_log(bundle, tmp_path):
    import threading

    path = tmp_path / "log.ndjson"
    store = SurveyStore(bundle, path, seed=3)
    results = []
    errors = []

    def worker(style):
        try:
            for _ in range(5):
                results.append(store.create_groove(style, kick_grid=beat_grid()))
        except Exception as exc:  # noqa: BLE001 - surfaced in the assertion
            errors.append(exc)

    threads = [
        threading.Thread(target=worker, args=(style,))
        for style in ("pop", "rock", "funk", "afrocuban")
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    store.close()

    assert not errors
    assert len({r.id for r in results}) == 20
    replayed = SurveyStore(bundle, path, seed=3)
    assert len(replayed.records()) == 20


def test_method_assignment_uniform_chi_square():
    rng = make_rng(123)
    draws = np.array([int(choose_method(rng)) for _ in range(10_000)])
    counts = np.bincount(draws, minlength=4)[1:]
    assert stats.chisquare(counts).pvalue > 0.01


def test_store_seeded_runs_are_reproducible(bundle, tmp_path):
    a = SurveyStore(bundle, tmp_path / "a.ndjson", seed=7)
    b = SurveyStore(bundle, tmp_path / "b.ndjson", seed=7)
    ra = a.create_groove("rock", kick_grid=beat_grid())
    rb = b.create_groove("rock", kick_grid=beat_grid())
    assert ra.method == rb.method
    assert ra.seed == rb.seed
    assert ra.output_text == rb.output_text


# --- aggregation: published-table oracle ----------------------------------------


def records_with_counts(method, good, average, poor, start=0):
    out = []
    i = start
    for rating, count in (("good", good), ("average", average), ("poor", poor)):
        for _ in range(count):
            out.append(fake_record(method=method, rating=rating, rid=f"r{i}"))
            i += 1
    return out


def test_method_aggregation_reproduces_published_normalisation():
    records = (
        records_with_counts(SamplingMethod.GREEDY, 91, 276, 30, start=0)
        + records_with_counts(SamplingMethod.ROULETTE, 100, 217, 125, start=1000)
        + records_with_counts(SamplingMethod.TOP3, 172, 183, 84, start=2000)
    )
    table = aggregate_by_method(records)
    assert table[1].raw == {"good": 91, "average": 276, "poor": 30}
    assert table[1].normalised == {"good": 0.23, "average": 0.70, "poor": 0.08}
    assert table[2].normalised == {"good": 0.23, "average": 0.49, "poor": 0.28}
    assert table[3].normalised == {"good": 0.39, "average": 0.42, "poor": 0.19}
    # the half-up rounding makes method 1's row total 1.01
    assert sum(table[1].normalised.values()) == pytest.approx(1.01)


def test_method_aggregation_empty_method_null_shares():
    records = records_with_counts(SamplingMethod.GREEDY, 1, 1, 1)
    table = aggregate_by_method(records)
    assert table[2].raw == {"good": 0, "average": 0, "poor": 0}
    assert table[2].normalised == {"good": None, "average": None, "poor": None}


def test_method_aggregation_ignores_unrated():
    records = [fake_record(rating=None, rid="u")] + records_with_counts(
        SamplingMethod.GREEDY, 1, 0, 0, start=1
    )
    table = aggregate_by_method(records)
    assert table[1].total == 1


def test_bracket_aggregation_means():
    records = [
        fake_record(rating="good", mean=0.75, rid="a"),
        fake_record(rating="average", mean=0.72, rid="b"),
        fake_record(rating="poor", mean=0.25, rid="c"),
    ]
    table = aggregate_by_probability_bracket(records)
    assert table["0.7-0.8"] == 1.50
    assert table["0.2-0.3"] == 0.00
    assert table["0.4-0.5"] is None


def test_bracket_aggregation_rounding_half_up():
    records = [
        fake_record(rating="good", mean=0.55, rid="a"),
        fake_record(rating="good", mean=0.55, rid="b"),
        fake_record(rating="average", mean=0.55, rid="c"),
        fake_record(rating="poor", mean=0.55, rid="d"),
    ]
    # mean rating (2+2+1+0)/4 = 1.25 stays 1.25; (2+1)/2 = 1.5 rounds up
    table = aggregate_by_probability_bracket(records)
    assert table["0.5-0.6"] == 1.25


def test_style_aggregation_poor_share():
    records = [
        fake_record(rating="poor", style=StyleTag.AFROCUBAN, rid="a"),
        fake_record(rating="average", style=StyleTag.AFROCUBAN, rid="b"),
        fake_record(rating="good", style=StyleTag.AFROCUBAN, rid="c"),
    ]
    table = aggregate_by_style(records)
    assert table["afrocuban"]["poor_share"] == 0.33
    assert table["rock"]["poor_share"] is None
    assert table["afrocuban"]["counts"] == {"good": 1, "average": 1, "poor": 1}
