from collections import Counter
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from leomine.textmine import (
    EmptyDay, NGramCounts, default_stopwords, event_query, ngram_counts, tokenize_filter, word_cloud,
    write_word_cloud_csv,
)


def test_tokenize_filter_examples():
    assert tokenize_filter("Roaming was enabled!", {"was"}) == ["roaming", "enabled"]
    assert tokenize_filter("", {"was"}) == []
    assert tokenize_filter("don't stop won't stop", set()) == ["don't", "stop", "won't", "stop"]


def test_curly_apostrophe_and_short_tokens():
    assert tokenize_filter("Don’t x go", set()) == ["don't", "go"]


def test_default_stopwords_keep_outage_words():
    stop = default_stopwords()
    assert "the" in stop and "was" in stop
    for kept in ("no", "not", "down", "out", "off"):
        assert kept not in stop


def test_ngram_examples():
    assert dict(ngram_counts([["r", "e", "r", "e"]], 2).counts) == {"r e": 2, "e r": 1}
    assert dict(ngram_counts([["a"]], 2).counts) == {}
    assert dict(ngram_counts([["a", "b"], ["a", "b"]], 1).counts) == {"a": 2, "b": 2}


def test_ngrams_do_not_cross_documents():
    assert "b c" not in ngram_counts([["a", "b"], ["c", "d"]], 2).counts


def test_word_cloud_examples():
    assert word_cloud({"a": 3, "b": 3, "c": 1}, 2) == [("a", 3), ("b", 3)]
    assert word_cloud({"x": 1}, 5) == [("x", 1)]
    assert word_cloud({}, 3) == []


def test_word_cloud_csv(tmp_path):
    write_word_cloud_csv([("a", 3), ("b", 1)], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines() == ["rank,term,frequency", "1,a,3", "2,b,1"]


def test_event_query_padding_and_empty():
    q = event_query(date(2022, 2, 23), ["roaming"], default_stopwords())
    assert q.keywords == ("roaming",)
    assert q.query == "roaming Starlink 2022-02-23"
    with pytest.raises(EmptyDay):
        event_query(date(2022, 2, 23), ["the and of", "was"], default_stopwords())


def test_event_query_on_fixture_outage_day(golden_dir):
    from leomine.corpus import clean, load_comments, load_posts, utc_date
    out, truth = golden_dir
    day = date(2022, 4, 22)
    posts, _ = load_posts(out / "posts.jsonl")
    comments, _ = load_comments(out / "comments.jsonl")
    posts, comments = clean(posts, comments)
    docs = [x.text for x in [*posts, *comments] if utc_date(x.created_at) == day]
    q = event_query(day, docs, default_stopwords())
    assert list(q.keywords) == truth["peak_keywords"]["2022-04-22"] == ["outage", "starlink", "internet"]
    assert q.query == "outage starlink internet Starlink 2022-04-22"


# -- properties ----------------------------------------------------------------

words = st.sampled_from(["a", "b", "c", "d", "e", "roaming", "enabled"])
docs = st.lists(st.lists(words, max_size=20), max_size=8)


def naive(docs, n):
    c = Counter()
    for doc in docs:
        for i in range(len(doc) - n + 1):
            c[" ".join(doc[i:i + n])] += 1
    return c


@given(docs, st.integers(1, 4))
def test_ngram_brute_force(docs, n):
    assert dict(ngram_counts(docs, n).counts) == dict(naive(docs, n))


@given(st.lists(words, max_size=30))
def test_unigram_total(doc):
    assert ngram_counts([doc], 1).total() == len(doc)


@given(st.dictionaries(st.text(min_size=1, max_size=4), st.integers(1, 9), max_size=20), st.integers(1, 25))
def test_word_cloud_prefix_stable(counts, k):
    assert word_cloud(counts, k) == word_cloud(counts, k + 3)[:k]


@given(st.text(max_size=60))
def test_tokenize_filter_idempotent(text):
    stop = default_stopwords()
    once = tokenize_filter(text, stop)
    assert tokenize_filter(" ".join(once), stop) == once


def test_ngram_counts_type():
    assert isinstance(ngram_counts([["a"]], 1), NGramCounts)
