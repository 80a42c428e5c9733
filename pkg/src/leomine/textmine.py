"""Tokenization, stop-word filtering, n-gram counting and word-cloud rankings."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "EmptyDay",
    "EventQuery",
    "NGramCounts",
    "default_stopwords",
    "event_query",
    "load_stopwords",
    "ngram_counts",
    "tokenize",
    "tokenize_filter",
    "word_cloud",
    "write_word_cloud_csv",
]

# alphanumeric runs, keeping apostrophes only between word characters
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})

QUERY_ANCHOR = "Starlink"


class EmptyDay(ValueError):
    """No tokens survived filtering for the requested day."""


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stop-word file: one token per line, blank lines and '#' comments ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.add(line.translate(_APOSTROPHES))
    return frozenset(words)


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        ref = resources.files("leomine") / "data" / "stopwords.txt"
        with resources.as_file(ref) as path:
            _DEFAULT_STOPWORDS = load_stopwords(path)
    return _DEFAULT_STOPWORDS


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics; drops tokens shorter than 2."""
    if not text:
        return []
    text = text.lower().translate(_APOSTROPHES)
    return [tok for tok in _TOKEN_RE.findall(text) if len(tok) >= 2]


def tokenize_filter(text: str, stopwords: Iterable[str] = ()) -> list[str]:
    """Tokenize ``text`` and drop stop-words, preserving order.

    >>> tokenize_filter("Roaming was enabled!", {"was"})
    ['roaming', 'enabled']
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [tok for tok in tokenize(text) if tok not in stop]


@dataclass(frozen=True)
class NGramCounts:
    n: int
    counts: dict[str, int]

    def total(self) -> int:
        return sum(self.counts.values())


def _windows(tokens: Sequence[str], n: int) -> Iterable[str]:
    for i in range(len(tokens) - n + 1):
        yield " ".join(tokens[i:i + n])


def ngram_counts(docs: Iterable[Sequence[str]], n: int) -> NGramCounts:
    """Count sliding-window n-grams per document and aggregate over documents.

    Windows never cross document boundaries.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    counts: Counter[str] = Counter()
    for tokens in docs:
        counts.update(_windows(tokens, n))
    return NGramCounts(n=n, counts=dict(counts))


def word_cloud(counts: NGramCounts | dict[str, int], k: int) -> list[tuple[str, int]]:
    """Top-``k`` terms by frequency descending, ties broken lexicographically."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    mapping = counts.counts if isinstance(counts, NGramCounts) else counts
    ranked = sorted(mapping.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def write_word_cloud_csv(ranking: Sequence[tuple[str, int]], path: str | Path) -> None:
    lines = ["rank,term,frequency"]
    lines += [f"{i},{term},{freq}" for i, (term, freq) in enumerate(ranking, start=1)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class EventQuery:
    date: date
    keywords: tuple[str, ...]
    query: str

    def to_dict(self) -> dict:
        return {"date": self.date.isoformat(), "keywords": list(self.keywords), "query": self.query}


def format_query(keywords: Sequence[str], day: date) -> str:
    return " ".join([*keywords, QUERY_ANCHOR, day.isoformat()])


def event_query(day: date, day_docs: Iterable[str], stopwords: Iterable[str] = ()) -> EventQuery:
    """Build the web-search query for a day from its three most common unigrams.

    Only the query string is produced; nothing is searched.
    """
    stop = frozenset(stopwords)
    streams = [tokenize_filter(doc, stop) for doc in day_docs]
    top = word_cloud(ngram_counts(streams, 1), 3)
    if not top:
        raise EmptyDay(f"no tokens survive filtering on {day.isoformat()}")
    keywords = tuple(term for term, _ in top)
    return EventQuery(date=day, keywords=keywords, query=format_query(keywords, day))
