"""Monthly popular posts and per-post topic reports."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import textmine
from .corpus import Post, Thread, utc_date
from .sentiment import DEFAULT_THRESHOLD, SentimentScore, StrongLabel, classify_strong

__all__ = [
    "EmptyInput",
    "EmptyMonth",
    "MonthlyPopularity",
    "PopularityThreshold",
    "TopicReport",
    "month_key",
    "percentile",
    "popular_by_month",
    "popular_posts",
    "topic_report",
]


class EmptyInput(ValueError):
    pass


class EmptyMonth(ValueError):
    pass


def month_key(ts: int) -> str:
    return utc_date(ts).strftime("%Y-%m")


def _rank(p: float, n: int) -> int:
    # exact decimal arithmetic so p=99, n=100 gives rank 99, not 100
    r = math.ceil(Decimal(repr(float(p))) * n / 100)
    return min(max(r, 1), n)


def percentile(values: Iterable[float], p: float) -> float:
    """Nearest-rank percentile: element ``ceil(p/100 * n)`` (1-based) of the
    ascending sort; ``p=0`` gives the minimum.
    """
    ordered = sorted(values)
    if not ordered:
        raise EmptyInput("percentile of empty input")
    if not 0 <= p <= 100:
        raise ValueError(f"p must be in [0, 100], got {p}")
    return ordered[_rank(p, len(ordered)) - 1]


@dataclass(frozen=True)
class MonthlyPopularity:
    month: str
    p99_upvotes: float
    p99_comments: float
    popular: tuple[str, ...]
    total_posts: int


def popular_posts(month_posts: Sequence[Post], p: float = 99, month: str | None = None) -> MonthlyPopularity:
    """Posts at or above the ``p``-th percentile of both upvotes and comment counts.

    Popular posts are ordered by upvotes, then comments (both descending),
    then id.
    """
    if not month_posts:
        raise EmptyMonth("no posts in month")
    up = percentile([q.upvotes for q in month_posts], p)
    com = percentile([q.comment_count for q in month_posts], p)
    chosen = [q for q in month_posts if q.upvotes >= up and q.comment_count >= com]
    chosen.sort(key=lambda q: (-q.upvotes, -q.comment_count, q.id))
    if month is None:
        month = month_key(month_posts[0].created_at)
    return MonthlyPopularity(month, up, com, tuple(q.id for q in chosen), len(month_posts))


def popular_by_month(posts: Iterable[Post], p: float = 99) -> list[MonthlyPopularity]:
    groups: dict[str, list[Post]] = defaultdict(list)
    for post in posts:
        groups[month_key(post.created_at)].append(post)
    return [popular_posts(groups[m], p, m) for m in sorted(groups)]


@dataclass
class TopicReport:
    post_id: str
    unigrams: list[tuple[str, int]]
    bigrams: list[tuple[str, int]]
    sentiment: dict[str, int] = field(default_factory=dict)
    documents: int = 0

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "documents": self.documents,
            "unigrams": [[t, c] for t, c in self.unigrams],
            "bigrams": [[t, c] for t, c in self.bigrams],
            "sentiment": dict(self.sentiment),
        }


def topic_report(post: Post, thread: Thread, stopwords: Iterable[str] = (),
                 scores: Mapping[str, SentimentScore] | None = None, k: int = 10,
                 tau: float = DEFAULT_THRESHOLD) -> TopicReport:
    """Unigram and bigram rankings over the post and every comment in its thread,
    plus strong-label counts for the same items (unscored items are skipped).
    """
    if thread.root.id != post.id:
        raise ValueError(f"thread root {thread.root.id!r} is not post {post.id!r}")
    stop = frozenset(stopwords)
    items = thread.items()
    streams = [textmine.tokenize_filter(item.text, stop) for item in items]
    summary: Counter[str] = Counter({label.value: 0 for label in StrongLabel})
    if scores is not None:
        for item in items:
            score = scores.get(item.id)
            if score is not None:
                summary[classify_strong(score, tau).value] += 1
    return TopicReport(
        post_id=post.id,
        unigrams=textmine.word_cloud(textmine.ngram_counts(streams, 1), k),
        bigrams=textmine.word_cloud(textmine.ngram_counts(streams, 2), k),
        sentiment=dict(summary),
        documents=len(items),
    )


class PopularityThreshold(BaseEstimator):
    """Learn per-column nearest-rank percentile thresholds; predict membership
    in the intersection of all of them.

    ``X`` has one row per post and one column per popularity axis (e.g.
    upvotes, comment count).
    """

    def __init__(self, percentile=99):
        self.percentile = percentile

    def fit(self, X, y=None):
        if not 0 <= self.percentile <= 100:
            raise ValueError(f"percentile must be in [0, 100], got {self.percentile}")
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.thresholds_ = np.array([percentile(X[:, j].tolist(), self.percentile)
                                     for j in range(X.shape[1])])
        return self

    def predict(self, X):
        check_is_fitted(self, "thresholds_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.all(X >= self.thresholds_, axis=1)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)
