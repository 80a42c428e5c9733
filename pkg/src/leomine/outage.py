"""Two-step outage detection.

Step one builds a keyword library from threads around known outage events.
Step two keeps only items that both mention a library keyword and lean
negative, counts keyword hits per day, and flags days that spike above a
trailing baseline.
"""
from __future__ import annotations

import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from . import textmine
from ._io import csv_text
from ._validation import check_int, check_positive
from .corpus import Comment, Post, Thread, utc_date
from .sentiment import DEFAULT_THRESHOLD, SentimentScore

__all__ = [
    "EmptySeed",
    "KeywordLibrary",
    "NoValidEntries",
    "OutageSeries",
    "QualifiedThread",
    "SeriesTooShort",
    "SpikeDetector",
    "flag_spikes",
    "keyword_day_series",
    "keyword_hits",
    "load_library",
    "mine_keywords",
    "qualify_threads",
]

log = logging.getLogger(__name__)

MIN_SERIES_DAYS = 8
MIN_BASELINE_DAYS = 7


class EmptySeed(ValueError):
    pass


class NoValidEntries(ValueError):
    pass


class SeriesTooShort(ValueError):
    pass


class Source(str, enum.Enum):
    SEED_FILE = "SEED_FILE"
    MINED = "MINED"


@dataclass
class KeywordLibrary:
    unigrams: set[str] = field(default_factory=set)
    bigrams: set[str] = field(default_factory=set)
    provenance: dict[str, Source] = field(default_factory=dict)
    # mined candidates keep their lift for review
    scores: dict[str, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.unigrams) + len(self.bigrams)

    def __contains__(self, term: str) -> bool:
        return term in self.unigrams or term in self.bigrams

    def union(self, other: "KeywordLibrary") -> "KeywordLibrary":
        return KeywordLibrary(self.unigrams | other.unigrams, self.bigrams | other.bigrams,
                              {**other.provenance, **self.provenance})

    def ranked(self, n: int) -> list[tuple[str, float]]:
        terms = self.unigrams if n == 1 else self.bigrams
        return sorted(((t, self.scores.get(t, 0.0)) for t in terms), key=lambda x: (-x[1], x[0]))

    def to_text(self) -> str:
        lines = ["# keyword library"]
        lines += sorted(self.unigrams) + sorted(self.bigrams)
        return "\n".join(lines) + "\n"


def _valid_entry(line: str, stop: frozenset[str]) -> tuple[str, str] | None:
    raw = line.strip()
    tokens = textmine.tokenize(raw)
    if not 1 <= len(tokens) <= 2:
        return None
    if " ".join(tokens) != raw.lower():
        return None
    if any(t in stop for t in tokens):
        return None
    return ("uni" if len(tokens) == 1 else "bi", " ".join(tokens))


def load_library(path: str | Path, stopwords: Iterable[str] | None = None) -> KeywordLibrary:
    """Read a curated library: one uni- or bigram per line, '#' starts a comment.

    Entries that are not one or two plain tokens, or that contain a stop-word,
    are skipped with a warning.
    """
    stop = frozenset(textmine.default_stopwords() if stopwords is None else stopwords)
    lib = KeywordLibrary()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        entry = _valid_entry(line, stop)
        if entry is None:
            log.warning("%s:%d: skipping invalid keyword %r", path, lineno, line)
            continue
        kind, term = entry
        (lib.unigrams if kind == "uni" else lib.bigrams).add(term)
        lib.provenance[term] = Source.SEED_FILE
    if not len(lib):
        raise NoValidEntries(f"no valid keywords in {path}")
    return lib


def mine_keywords(seed_texts: Sequence[str], corpus_texts: Sequence[str],
                  stopwords: Iterable[str] = (), top_m: int = 30) -> KeywordLibrary:
    """Rank candidate uni/bigrams by how much more often they occur in seed items.

    Frequencies are document frequencies.  The lift of a term is
    ``seed_df / (corpus_df + 1)`` scaled by ``|corpus| / |seed|``, i.e. the
    ratio of occurrence rates with add-one smoothing on the corpus side, so a
    term as common in the corpus as in the seed scores about 1.
    """
    if not seed_texts:
        raise EmptySeed("no seed items")
    stop = frozenset(stopwords)
    n_seed, n_corpus = len(seed_texts), max(len(corpus_texts), 1)

    def doc_freq(texts, n):
        df: Counter[str] = Counter()
        for text in texts:
            tokens = textmine.tokenize_filter(text, stop)
            df.update(set(textmine.ngram_counts([tokens], n).counts))
        return df

    lib = KeywordLibrary()
    for n, bucket in ((1, lib.unigrams), (2, lib.bigrams)):
        seed_df, corpus_df = doc_freq(seed_texts, n), doc_freq(corpus_texts, n)
        lifts = {t: c / (corpus_df.get(t, 0) + 1) * (n_corpus / n_seed) for t, c in seed_df.items()}
        for term, lift in sorted(lifts.items(), key=lambda x: (-x[1], x[0]))[:top_m]:
            bucket.add(term)
            lib.provenance[term] = Source.MINED
            lib.scores[term] = lift
    return lib


def keyword_hits(tokens: Sequence[str], library: KeywordLibrary) -> Counter:
    """Occurrences of library unigrams and adjacent bigrams in a token stream."""
    hits: Counter[str] = Counter()
    for i, tok in enumerate(tokens):
        if tok in library.unigrams:
            hits[tok] += 1
        if i + 1 < len(tokens):
            pair = f"{tok} {tokens[i + 1]}"
            if pair in library.bigrams:
                hits[pair] += 1
    return hits


def _leans_negative(score: SentimentScore, strong_only: bool, tau: float) -> bool:
    if strong_only:
        return score.negative >= tau
    return score.negative > score.positive


@dataclass
class QualifiedItem:
    id: str
    created_at: int
    hits: int


@dataclass
class QualifiedThread:
    thread: Thread
    matched: set[str]
    items: list[QualifiedItem]

    @property
    def hits(self) -> int:
        return sum(i.hits for i in self.items)


def qualify_threads(threads: Iterable[Thread], library: KeywordLibrary,
                    scores: Mapping[str, SentimentScore], stopwords: Iterable[str] = (),
                    strong_only: bool = False, tau: float = DEFAULT_THRESHOLD) -> list[QualifiedThread]:
    """Keep threads with at least one item that has keyword hits and leans negative.

    An item leans negative when its negative score exceeds its positive score
    (or reaches ``tau`` with ``strong_only``).  Unscored items never qualify.
    Only the qualifying items of a thread are retained.
    """
    stop = frozenset(stopwords)
    out = []
    for thread in threads:
        items, matched = [], set()
        for item in thread.items():
            score = scores.get(item.id)
            if score is None or not _leans_negative(score, strong_only, tau):
                continue
            text = item.text if isinstance(item, (Post, Comment)) else str(item)
            hits = keyword_hits(textmine.tokenize_filter(text, stop), library)
            if hits:
                matched.update(hits)
                items.append(QualifiedItem(item.id, item.created_at, sum(hits.values())))
        if items:
            out.append(QualifiedThread(thread, matched, items))
    return out


@dataclass
class OutageSeries:
    start_date: date
    counts: list[int]
    flags: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.flags:
            self.flags = [False] * len(self.counts)

    def __len__(self):
        return len(self.counts)

    def dates(self) -> list[date]:
        return [self.start_date + timedelta(days=i) for i in range(len(self.counts))]

    def flagged_dates(self) -> list[date]:
        return [d for d, f in zip(self.dates(), self.flags) if f]

    def to_csv(self) -> str:
        return csv_text(["date", "count", "flagged"],
                        ([d.isoformat(), c, int(f)] for d, c, f in
                         zip(self.dates(), self.counts, self.flags)))


def keyword_day_series(qualified: Iterable[QualifiedThread], start: date, end: date) -> OutageSeries:
    """Sum keyword hits of qualifying items per UTC day over ``start..end``."""
    n = (end - start).days + 1
    if n < 0:
        raise ValueError("end precedes start")
    counts = [0] * n
    for qt in qualified:
        for item in qt.items:
            i = (utc_date(item.created_at) - start).days
            if 0 <= i < n:
                counts[i] += item.hits
    return OutageSeries(start, counts)


def spike_flags(counts: Sequence[float], window: int = 28, z: float = 3.0,
                min_count: float = 5) -> list[bool]:
    """Flag day ``d`` when ``count[d] >= min_count`` and it exceeds the trailing
    mean plus ``z`` population standard deviations of the previous ``window``
    days.  Days with fewer than seven prior days are never flagged.
    """
    counts = [float(c) for c in counts]
    if len(counts) < MIN_SERIES_DAYS:
        raise SeriesTooShort(f"need at least {MIN_SERIES_DAYS} days, got {len(counts)}")
    flags = [False] * len(counts)
    for d in range(MIN_BASELINE_DAYS, len(counts)):
        if counts[d] < min_count:
            continue
        base = counts[max(0, d - window):d]
        mean = math.fsum(base) / len(base)
        sd = math.sqrt(math.fsum((x - mean) ** 2 for x in base) / len(base))
        flags[d] = counts[d] > mean + z * sd
    return flags


def flag_spikes(series: OutageSeries, window: int = 28, z: float = 3.0,
                min_count: int = 5) -> OutageSeries:
    return OutageSeries(series.start_date, list(series.counts),
                        spike_flags(series.counts, window, z, min_count))


class SpikeDetector(BaseEstimator):
    """Trailing-window z-score spike detector over a daily count series.

    ``fit_predict(counts)`` returns a boolean mask of flagged days.  The
    detector is stateless across series; ``fit`` only validates parameters
    and records the last series' baseline for inspection.
    """

    def __init__(self, window=28, z=3.0, min_count=5):
        self.window = window
        self.z = z
        self.min_count = min_count

    def _validate_params(self):
        check_int(self.window, "window", minimum=1)
        check_positive(self.z, "z", allow_zero=True)
        check_positive(self.min_count, "min_count", allow_zero=True)

    def fit(self, X, y=None):
        self._validate_params()
        counts = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_min_samples=1).ravel()
        if len(counts) < MIN_SERIES_DAYS:
            raise SeriesTooShort(f"need at least {MIN_SERIES_DAYS} days, got {len(counts)}")
        self.n_days_ = len(counts)
        self.flags_ = np.array(spike_flags(counts, self.window, self.z, self.min_count))
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).flags_
