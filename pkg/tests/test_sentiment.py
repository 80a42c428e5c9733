import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leomine.sentiment import (
    InvalidThreshold, Lexicon, LexiconProvider, LexiconScorer, PosScore, ProviderError, ScoreCache,
    SentimentScore, StrongLabel, classify_strong, default_lexicon, pos_score, score_batch, score_text,
)

LOVE = Lexicon({"love": (1, 1.0), "good": (1, 1.0), "bad": (-1, 1.0)}, frozenset({"not"}))


def test_empty_text_is_neutral():
    assert score_text("", LOVE).as_tuple() == (0.0, 0.0, 1.0)


def test_three_hits():
    assert score_text("love love love", LOVE).as_tuple() == (0.75, 0.0, 0.25)


def test_negation_flips():
    assert score_text("not good", LOVE).as_tuple() == (0.0, 0.5, 0.5)


def test_negation_window_is_two_tokens():
    assert score_text("not very good", LOVE).negative == 0.5
    assert score_text("not very very good", LOVE).positive == 0.5


def test_classify_examples():
    assert classify_strong(SentimentScore(0.75, 0, 0.25)) is StrongLabel.STRONG_POS
    assert classify_strong(SentimentScore(0.7, 0.3, 0)) is StrongLabel.STRONG_POS
    assert classify_strong(SentimentScore(0.5, 0.5, 0)) is StrongLabel.NONE
    assert classify_strong(SentimentScore(0.2, 0.8, 0)) is StrongLabel.STRONG_NEG


def test_just_below_threshold():
    assert classify_strong(SentimentScore(0.6999999, 0.3000001, 0)) is StrongLabel.NONE


@pytest.mark.parametrize("tau", [0.5, 0.3, 1.01, math.nan])
def test_invalid_threshold(tau):
    with pytest.raises(InvalidThreshold):
        classify_strong(SentimentScore(1, 0, 0), tau)


def test_hit_count_boundary():
    assert classify_strong(score_text("love love", LOVE)) is StrongLabel.NONE  # 2/3
    assert classify_strong(score_text("love love love", LOVE)) is StrongLabel.STRONG_POS  # 3/4


def test_pos_examples():
    assert pos_score([StrongLabel.STRONG_POS] * 3 + [StrongLabel.STRONG_NEG]).pos == 0.75
    assert PosScore("2021-01", 5, 0).pos == 1.0
    assert PosScore("2021-01", 0, 0).pos is None
    assert pos_score([StrongLabel.NONE]).pos is None


def test_score_batch_builtin():
    batch = score_batch(["love it", "bad day"])
    assert len(batch) == 2 and batch.errors == []
    for s in batch.scores:
        assert abs(sum(s.as_tuple()) - 1) <= 1e-9
    assert score_batch(["love it", "bad day"]).scores == batch.scores


class FlakyProvider:
    name = "flaky"

    def score_texts(self, texts):
        return [ProviderError(i, "boom") if i == 1 else score_text(t) for i, t in enumerate(texts)]


def test_score_batch_per_item_error():
    batch = score_batch(["a", "b", "c"], FlakyProvider())
    assert [s is None for s in batch.scores] == [False, True, False]
    assert [(e.index, e.reason) for e in batch.errors] == [(1, "boom")]


def test_score_batch_whole_failure():
    class Down:
        name = "down"

        def score_texts(self, texts):
            raise ConnectionError("unreachable")
    batch = score_batch(["a", "b"], Down())
    assert batch.scores == [None, None] and len(batch.errors) == 2


def test_lexicon_rejects_overlap_and_bad_terms():
    with pytest.raises(ValueError):
        Lexicon({"not": (1, 1.0)}, frozenset({"not"}))
    with pytest.raises(ValueError):
        Lexicon({"Good": (1, 1.0)})
    with pytest.raises(ValueError):
        Lexicon({"good": (2, 1.0)})


def test_default_lexicon_size():
    lex = default_lexicon()
    assert 250 <= len(lex.entries) <= 400
    assert not (lex.negators & set(lex.entries))


def test_score_cache_round_trip(tmp_path):
    cache = ScoreCache()
    s = score_text("love it")
    cache.put("p1", "love it", s)
    cache.dump(tmp_path / "scores.jsonl")
    again = ScoreCache.load(tmp_path / "scores.jsonl")
    assert again.get("p1", "love it") == s
    assert again.get("p1", "edited text") is None


def test_estimator_api():
    est = LexiconScorer()
    X = est.fit_transform(["love love love", "", "terrible awful horrible"])
    assert X.shape == (3, 3)
    np.testing.assert_allclose(X.sum(axis=1), 1.0)
    assert list(est.predict(["love love love", "ok", "terrible awful horrible"])) == \
        ["STRONG_POS", "NONE", "STRONG_NEG"]
    assert est.get_params()["threshold"] == 0.7
    with pytest.raises(InvalidThreshold):
        LexiconScorer(threshold=0.4).fit()


# -- properties ----------------------------------------------------------------

vocab = sorted(default_lexicon().entries)[:40] + ["not", "never", "dish", "sky", "the", "a"]
token_strings = st.lists(st.sampled_from(vocab), max_size=30).map(" ".join)


@given(st.one_of(token_strings, st.text(max_size=80)))
def test_components_sum_to_one(text):
    s = score_text(text)
    assert all(0 <= v <= 1 for v in s.as_tuple())
    assert abs(sum(s.as_tuple()) - 1) <= 1e-9


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.5000001, 1))
def test_at_most_one_strong_label(p, share, tau):
    n = (1 - p) * share
    s = SentimentScore(p, n, max(0.0, 1 - p - n))
    label = classify_strong(s, tau)
    assert not (s.positive >= tau and s.negative >= tau)
    assert (label is StrongLabel.STRONG_POS) == (s.positive >= tau)
    assert (label is StrongLabel.STRONG_NEG) == (s.negative >= tau)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_classify_monotone_in_positive(p, neu_share, extra):
    # start from (p, rest split), then move mass from neutral to positive
    rest = 1 - p
    neutral = rest * neu_share
    s1 = SentimentScore(p, max(0.0, 1 - p - neutral), neutral)
    shift = neutral * extra
    s2 = SentimentScore(p + shift, s1.negative, max(0.0, 1 - (p + shift) - s1.negative))
    if classify_strong(s1) is StrongLabel.STRONG_POS:
        assert classify_strong(s2) is StrongLabel.STRONG_POS


@given(st.integers(0, 500), st.integers(0, 500))
def test_pos_complement(sp, sn):
    a = PosScore("m", sp, sn).pos
    b = PosScore("m", sn, sp).pos
    if sp + sn == 0:
        assert a is None and b is None
    else:
        assert 0 <= a <= 1
        assert a == pytest.approx(1 - b, abs=1e-12)


def test_lexicon_provider_matches_score_text():
    prov = LexiconProvider()
    assert prov.score_texts(["love it"]) == [score_text("love it")]
