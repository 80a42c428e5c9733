"""Daily strong-sentiment series and peak selection."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

from . import textmine
from ._io import csv_text
from .corpus import utc_date
from .sentiment import StrongLabel

__all__ = [
    "DailySeries",
    "Peak",
    "Polarity",
    "ScoredItem",
    "annotate_peaks",
    "daily_strong_counts",
    "top_peaks",
]


class Polarity(str, enum.Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class ScoredItem:
    """A post or comment reduced to what the series need."""

    id: str
    created_at: int
    label: StrongLabel


@dataclass(frozen=True)
class DailySeries:
    start_date: date
    end_date: date
    pos_counts: tuple[int, ...]
    neg_counts: tuple[int, ...]

    def __post_init__(self):
        n = (self.end_date - self.start_date).days + 1
        if n < 0 or len(self.pos_counts) != n or len(self.neg_counts) != n:
            raise ValueError("series arrays must span start_date..end_date")

    def __len__(self):
        return len(self.pos_counts)

    def dates(self) -> list[date]:
        return [self.start_date + timedelta(days=i) for i in range(len(self))]

    def to_csv(self) -> str:
        return csv_text(["date", "strong_pos", "strong_neg"],
                        ([d.isoformat(), p, n] for d, p, n in
                         zip(self.dates(), self.pos_counts, self.neg_counts)))


def daily_strong_counts(items: Iterable[ScoredItem], start: date, end: date) -> DailySeries:
    """Count STRONG_POS and STRONG_NEG items per UTC day over ``start..end`` inclusive.

    Items outside the window are ignored.
    """
    n = (end - start).days + 1
    if n < 0:
        raise ValueError("end precedes start")
    pos, neg = [0] * n, [0] * n
    for item in items:
        i = (utc_date(item.created_at) - start).days
        if not 0 <= i < n:
            continue
        if item.label == StrongLabel.STRONG_POS:
            pos[i] += 1
        elif item.label == StrongLabel.STRONG_NEG:
            neg[i] += 1
    return DailySeries(start, end, tuple(pos), tuple(neg))


@dataclass(frozen=True)
class Peak:
    date: date
    polarity: Polarity
    count: int
    query: textmine.EventQuery | None = None
    cloud: tuple[tuple[str, int], ...] = field(default=())

    @property
    def annotated(self) -> bool:
        return self.query is not None

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "polarity": self.polarity.value,
            "count": self.count,
            "keywords": list(self.query.keywords) if self.query else None,
            "query": self.query.query if self.query else None,
            "cloud": [[t, f] for t, f in self.cloud],
        }


def top_peaks(series: DailySeries, k: int | None = 3, min_separation_days: int = 2) -> list[Peak]:
    """Greedy top-``k`` selection over both polarities.

    Candidates are ranked by count (descending), then earlier date, then
    POSITIVE before NEGATIVE.  A candidate is accepted only if its date is at
    least ``min_separation_days`` away from every accepted peak.  ``k=None``
    means no limit.
    """
    if k is not None and k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if min_separation_days < 0:
        raise ValueError("min_separation_days must be >= 0")
    candidates = []
    for i, d in enumerate(series.dates()):
        if series.pos_counts[i] > 0:
            candidates.append((-series.pos_counts[i], d, 0, Polarity.POSITIVE))
        if series.neg_counts[i] > 0:
            candidates.append((-series.neg_counts[i], d, 1, Polarity.NEGATIVE))
    candidates.sort(key=lambda c: c[:3])
    accepted: list[Peak] = []
    for neg_count, d, _, polarity in candidates:
        if k is not None and len(accepted) >= k:
            break
        if all(abs((d - p.date).days) >= min_separation_days for p in accepted):
            accepted.append(Peak(d, polarity, -neg_count))
    return accepted


def annotate_peaks(peaks: Sequence[Peak], day_texts: Mapping[date, Sequence[str]],
                   stopwords: Iterable[str] = (), top_k: int = 10) -> list[Peak]:
    """Attach each peak day's word cloud and search query.

    ``day_texts`` maps a UTC date to every post and comment text of that day.
    Days with no surviving tokens keep the peak without an annotation.
    """
    stop = frozenset(stopwords)
    out = []
    for peak in peaks:
        docs = list(day_texts.get(peak.date, ()))
        try:
            query = textmine.event_query(peak.date, docs, stop)
        except textmine.EmptyDay:
            out.append(replace(peak, query=None, cloud=()))
            continue
        streams = [textmine.tokenize_filter(t, stop) for t in docs]
        cloud = textmine.word_cloud(textmine.ngram_counts(streams, 1), top_k)
        out.append(replace(peak, query=query, cloud=tuple(cloud)))
    return out
