"""Sentiment scoring, strong-label classification and the monthly Pos score.

The built-in scorer is a deterministic lexicon model.  A matched term
contributes its weight to the positive or negative mass; a negator up to
``negation_window`` tokens before it flips the polarity.  With masses ``p``
and ``n`` and smoothing ``s`` the score is ``(p, n, s) / (p + n + s)``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import textmine
from ._io import content_hash, dumps
from ._validation import check_positive, check_threshold

__all__ = [
    "DEFAULT_THRESHOLD",
    "BatchScores",
    "InvalidThreshold",
    "Lexicon",
    "LexiconProvider",
    "LexiconScorer",
    "PosScore",
    "ProviderError",
    "ScoreCache",
    "SentimentScore",
    "StrongLabel",
    "classify_strong",
    "default_lexicon",
    "load_lexicon",
    "pos_score",
    "score_batch",
    "score_text",
]

DEFAULT_THRESHOLD = 0.7
SUM_TOLERANCE = 1e-9


class InvalidThreshold(ValueError):
    pass


class ProviderError(RuntimeError):
    """A sentiment provider failed on one item."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"item {index}: {reason}")
        self.index = index
        self.reason = reason


@dataclass(frozen=True)
class SentimentScore:
    positive: float
    negative: float
    neutral: float

    def __post_init__(self):
        for name in ("positive", "negative", "neutral"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} score must be in [0, 1], got {v}")
        total = self.positive + self.negative + self.neutral
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"scores must sum to 1, got {total}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.positive, self.negative, self.neutral)


class StrongLabel(str, enum.Enum):
    STRONG_POS = "STRONG_POS"
    STRONG_NEG = "STRONG_NEG"
    NONE = "NONE"


def classify_strong(score: SentimentScore, tau: float = DEFAULT_THRESHOLD) -> StrongLabel:
    """Inclusive threshold on either polarity; ``tau`` must be in (0.5, 1]."""
    tau = check_threshold(tau, "tau")
    if score.positive >= tau:
        return StrongLabel.STRONG_POS
    if score.negative >= tau:
        return StrongLabel.STRONG_NEG
    return StrongLabel.NONE


# -- lexicon -----------------------------------------------------------------

@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, tuple[int, float]]
    negators: frozenset[str] = frozenset()
    negation_window: int = 2
    smoothing: float = 1.0

    def __post_init__(self):
        for term, (polarity, weight) in self.entries.items():
            if term != term.lower() or textmine.tokenize(term) != [term]:
                raise ValueError(f"lexicon term must be one lowercase token: {term!r}")
            if polarity not in (1, -1):
                raise ValueError(f"polarity for {term!r} must be +1 or -1")
            if not weight > 0:
                raise ValueError(f"weight for {term!r} must be > 0")
        overlap = self.negators & set(self.entries)
        if overlap:
            raise ValueError(f"negators overlap lexicon entries: {sorted(overlap)}")
        if self.negation_window < 0:
            raise ValueError("negation_window must be >= 0")
        check_positive(self.smoothing, "smoothing")


def _read_negators(path) -> frozenset[str]:
    return textmine.load_stopwords(path)


def load_lexicon(path: str | Path, negators: Iterable[str] | None = None,
                 negation_window: int = 2, smoothing: float = 1.0) -> Lexicon:
    """Read a ``term,polarity,weight`` CSV (header optional, weight optional)."""
    entries: dict[str, tuple[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            term = row[0].strip().lower()
            if term == "term":
                continue
            polarity = int(row[1])
            weight = float(row[2]) if len(row) > 2 and row[2].strip() else 1.0
            entries[term] = (polarity, weight)
    if negators is None:
        negators = _default_negators()
    return Lexicon(entries, frozenset(negators), negation_window, smoothing)


def _data_path(name: str):
    return resources.files("leomine") / "data" / name


def _default_negators() -> frozenset[str]:
    with resources.as_file(_data_path("negators.txt")) as p:
        return _read_negators(p)


_DEFAULT_LEXICON: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        with resources.as_file(_data_path("lexicon.csv")) as p:
            _DEFAULT_LEXICON = load_lexicon(p)
    return _DEFAULT_LEXICON


def polarity_masses(tokens: Sequence[str], lexicon: Lexicon) -> tuple[float, float]:
    p = n = 0.0
    window = lexicon.negation_window
    for i, tok in enumerate(tokens):
        entry = lexicon.entries.get(tok)
        if entry is None:
            continue
        polarity, weight = entry
        if window and any(t in lexicon.negators for t in tokens[max(0, i - window):i]):
            polarity = -polarity
        if polarity > 0:
            p += weight
        else:
            n += weight
    return p, n


def score_text(text: str, lexicon: Lexicon | None = None) -> SentimentScore:
    if lexicon is None:
        lexicon = default_lexicon()
    p, n = polarity_masses(textmine.tokenize(text), lexicon)
    total = p + n + lexicon.smoothing
    pos, neg = p / total, n / total
    # derive neutral from the others so the triple sums to 1 exactly
    return SentimentScore(pos, neg, max(0.0, 1.0 - pos - neg))


# -- providers ---------------------------------------------------------------

class SentimentProvider(Protocol):
    name: str

    def score_texts(self, texts: Sequence[str]) -> list[SentimentScore | Exception]:
        ...


class LexiconProvider:
    name = "lexicon"

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon or default_lexicon()

    def score_texts(self, texts):
        return [score_text(t, self.lexicon) for t in texts]


@dataclass
class BatchScores:
    scores: list[SentimentScore | None]
    errors: list[ProviderError] = field(default_factory=list)

    def __len__(self):
        return len(self.scores)


def score_batch(texts: Sequence[str], provider: SentimentProvider | None = None) -> BatchScores:
    """Score ``texts`` in order; failed items are ``None`` with an error recorded."""
    provider = provider or LexiconProvider()
    texts = list(texts)
    try:
        results = provider.score_texts(texts)
    except Exception as exc:  # whole-batch failure: every item unscored
        errors = [ProviderError(i, str(exc)) for i in range(len(texts))]
        return BatchScores([None] * len(texts), errors)
    if len(results) != len(texts):
        raise ProviderError(-1, f"provider returned {len(results)} results for {len(texts)} texts")
    scores: list[SentimentScore | None] = []
    errors: list[ProviderError] = []
    for i, res in enumerate(results):
        if isinstance(res, SentimentScore):
            scores.append(res)
        else:
            scores.append(None)
            errors.append(res if isinstance(res, ProviderError) and res.index == i
                          else ProviderError(i, str(res)))
    return BatchScores(scores, errors)


# -- Pos score ---------------------------------------------------------------

@dataclass(frozen=True)
class PosScore:
    month: str
    strong_pos: int
    strong_neg: int

    @property
    def pos(self) -> float | None:
        denom = self.strong_pos + self.strong_neg
        if denom == 0:
            return None
        return self.strong_pos / denom


def pos_score(labels: Iterable[StrongLabel], month: str = "") -> PosScore:
    """Strong-positive share of strongly labelled items; NONE labels are ignored."""
    sp = sn = 0
    for label in labels:
        if label == StrongLabel.STRONG_POS:
            sp += 1
        elif label == StrongLabel.STRONG_NEG:
            sn += 1
    return PosScore(month, sp, sn)


# -- scored-corpus cache -----------------------------------------------------

class ScoreCache:
    """JSON-lines cache of scores keyed by item id and text hash."""

    def __init__(self, records: dict[str, dict] | None = None):
        self._records = dict(records or {})

    @classmethod
    def load(cls, path: str | Path) -> "ScoreCache":
        records = {}
        p = Path(path)
        if p.exists():
            for line in p.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    records[rec["id"]] = rec
        return cls(records)

    def get(self, item_id: str, text: str) -> SentimentScore | None:
        rec = self._records.get(item_id)
        if rec is None or rec["hash"] != content_hash(text):
            return None
        return SentimentScore(rec["positive"], rec["negative"], rec["neutral"])

    def put(self, item_id: str, text: str, score: SentimentScore) -> None:
        self._records[item_id] = {
            "id": item_id,
            "hash": content_hash(text),
            "positive": score.positive,
            "negative": score.negative,
            "neutral": score.neutral,
        }

    def __len__(self):
        return len(self._records)

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key in sorted(self._records):
                fh.write(dumps(self._records[key]) + "\n")


# -- estimator ---------------------------------------------------------------

class LexiconScorer(TransformerMixin, BaseEstimator):
    """Transform raw texts into an ``(n, 3)`` array of (positive, negative, neutral).

    Parameters
    ----------
    lexicon_path : str or None
        CSV lexicon; the shipped lexicon when None.
    negation_window : int
        Tokens before a term searched for a negator.
    smoothing : float
        Neutral mass added to the denominator.
    threshold : float
        Strong-sentiment threshold used by :meth:`predict`.
    """

    def __init__(self, lexicon_path=None, negation_window=2, smoothing=1.0,
                 threshold=DEFAULT_THRESHOLD):
        self.lexicon_path = lexicon_path
        self.negation_window = negation_window
        self.smoothing = smoothing
        self.threshold = threshold

    def fit(self, X=None, y=None):
        check_threshold(self.threshold)
        if self.lexicon_path is None:
            base = default_lexicon()
            self.lexicon_ = Lexicon(base.entries, base.negators,
                                    self.negation_window, self.smoothing)
        else:
            self.lexicon_ = load_lexicon(self.lexicon_path, None,
                                         self.negation_window, self.smoothing)
        return self

    def _texts(self, X) -> list[str]:
        if isinstance(X, str):
            raise ValueError("expected an iterable of texts, got a single string")
        return ["" if x is None or (isinstance(x, float) and math.isnan(x)) else str(x) for x in X]

    def transform(self, X):
        check_is_fitted(self, "lexicon_")
        texts = self._texts(X)
        out = np.empty((len(texts), 3), dtype=float)
        for i, text in enumerate(texts):
            out[i] = score_text(text, self.lexicon_).as_tuple()
        return out

    def predict(self, X):
        """Strong labels as a string array."""
        check_is_fitted(self, "lexicon_")
        return np.array([classify_strong(score_text(t, self.lexicon_), self.threshold).value
                         for t in self._texts(X)], dtype=object)
