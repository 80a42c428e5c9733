"""Structured speed-test measurements from OCR token layouts.

Two layout families are handled.  SIMPLE screenshots carry one report:
each metric label (DOWNLOAD, Ping, ...) is paired with the nearest numeric
token below or to its right.  TABLE screenshots carry one header row of
metric labels and several data rows; values are assigned to the column
whose span contains them.  Every geometric threshold is relative to the
token heights or the image diagonal, so extraction does not depend on
absolute pixel positions or image scale.
"""
from __future__ import annotations

import enum
import json
import logging
import math
import re
import statistics
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._io import csv_text, fmt_cell

__all__ = [
    "AmbiguousValue",
    "EmptyTable",
    "ExtractionError",
    "LabelSpec",
    "Measurement",
    "NoDownload",
    "NoHeader",
    "NoTokens",
    "NotANumber",
    "OcrDocument",
    "OcrToken",
    "PlausibilityBounds",
    "SpeedTestExtractor",
    "SpeedTestReport",
    "Template",
    "UnknownUnit",
    "classify_template",
    "cluster_rows",
    "extract",
    "extract_many",
    "extract_simple",
    "extract_table",
    "filter_false_positives",
    "load_document",
    "normalize",
    "parse_value_unit",
    "reports_csv",
]

log = logging.getLogger(__name__)


class ExtractionError(ValueError):
    pass


class NoTokens(ExtractionError):
    pass


class NoDownload(ExtractionError):
    pass


class AmbiguousValue(ExtractionError):
    pass


class NoHeader(ExtractionError):
    pass


class EmptyTable(ExtractionError):
    pass


class NotANumber(ExtractionError):
    pass


class UnknownUnit(ExtractionError):
    pass


# -- units -------------------------------------------------------------------

SPEED_UNITS = ("Mbps", "Kbps", "Gbps")
TIME_UNITS = ("ms", "s")
PERCENT = "%"

_UNIT_ALIASES = {
    "mbps": "Mbps", "mb/s": "Mbps", "mbit/s": "Mbps", "mbits/s": "Mbps",
    "kbps": "Kbps", "kb/s": "Kbps", "kbit/s": "Kbps",
    "gbps": "Gbps", "gb/s": "Gbps", "gbit/s": "Gbps",
    "ms": "ms", "msec": "ms",
    "s": "s", "sec": "s",
    "%": "%",
}
_FACTORS = {"Mbps": Decimal(1), "Kbps": Decimal("0.001"), "Gbps": Decimal(1000),
            "ms": Decimal(1), "s": Decimal(1000), "%": Decimal(1)}

_VALUE_RE = re.compile(r"^([0-9][0-9.,]*)\s*([A-Za-z%/]*)$")
_THOUSANDS_RE = re.compile(r"^\d{1,3}(,\d{3})+(\.\d+)?$")


def parse_unit(text: str) -> str:
    unit = _UNIT_ALIASES.get(text.strip().lower())
    if unit is None:
        raise UnknownUnit(f"unknown unit {text!r}")
    return unit


def _is_unit(text: str) -> bool:
    return text.strip().lower() in _UNIT_ALIASES


def _parse_number(num: str) -> float:
    if "," in num:
        if _THOUSANDS_RE.match(num):
            num = num.replace(",", "")
        elif num.count(",") == 1 and "." not in num:
            num = num.replace(",", ".")
        else:
            raise NotANumber(f"cannot read number {num!r}")
    if num.count(".") > 1 or num.endswith("."):
        raise NotANumber(f"cannot read number {num!r}")
    return float(num)


def parse_value_unit(text: str, unit_text: str | None = None) -> tuple[float, str | None]:
    """Read ``"105.4"``, ``"105,4"``, ``"28ms"`` or ``"1,024"`` into (value, unit).

    A comma followed by exactly three digits (and no period) is a thousands
    separator; any other single comma is a decimal comma.
    """
    m = _VALUE_RE.match(text.strip())
    if not m:
        raise NotANumber(f"not a number: {text!r}")
    value = _parse_number(m.group(1))
    suffix = m.group(2)
    unit = parse_unit(suffix) if suffix else None
    if unit_text is not None:
        other = parse_unit(unit_text)
        if unit is not None and unit != other:
            raise UnknownUnit(f"conflicting units {unit!r} and {other!r}")
        unit = other
    return value, unit


def normalize(value: float, unit: str) -> float:
    """Convert to Mbps (speeds) or ms (times) with decimal-exact factors."""
    return float(Decimal(repr(float(value))) * _FACTORS[unit])


def unit_kind(unit: str) -> str:
    if unit in SPEED_UNITS:
        return "speed"
    if unit in TIME_UNITS:
        return "time"
    return "percent"


# -- OCR documents -----------------------------------------------------------

@dataclass(frozen=True)
class OcrToken:
    text: str
    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"token {self.text!r} has non-positive size")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"token {self.text!r} has negative origin")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def to_dict(self) -> dict:
        return {"text": self.text, "x": self.x, "y": self.y, "w": self.w, "h": self.h,
                "confidence": self.confidence}


@dataclass(frozen=True)
class OcrDocument:
    source_id: str
    width: float
    height: float
    tokens: tuple[OcrToken, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @classmethod
    def from_dict(cls, data: Mapping) -> "OcrDocument":
        """Build from the token JSON schema, clamping boxes to the image."""
        width, height = float(data["width"]), float(data["height"])
        if width <= 0 or height <= 0:
            raise ValueError("image dimensions must be positive")
        tokens, warnings = [], []
        for i, t in enumerate(data.get("tokens", [])):
            x, y, w, h = (float(t[k]) for k in ("x", "y", "w", "h"))
            x0, y0 = min(max(x, 0.0), width), min(max(y, 0.0), height)
            x1, y1 = min(max(x + w, 0.0), width), min(max(y + h, 0.0), height)
            conf = min(max(float(t.get("confidence", 1.0)), 0.0), 1.0)
            if (x0, y0, x1, y1) == (x, y, x + w, y + h) and w > 0 and h > 0:
                tokens.append(OcrToken(str(t["text"]), x, y, w, h, conf))
                continue
            if x1 <= x0 or y1 <= y0:
                warnings.append(f"token {i} ({t.get('text')!r}) dropped: outside image")
                continue
            warnings.append(f"token {i} ({t.get('text')!r}) clamped to image bounds")
            tokens.append(OcrToken(str(t["text"]), x0, y0, x1 - x0, y1 - y0, conf))
        for msg in warnings:
            log.warning("%s: %s", data.get("source_id"), msg)
        return cls(str(data["source_id"]), width, height, tuple(tokens), tuple(warnings))

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "width": self.width, "height": self.height,
                "tokens": [t.to_dict() for t in self.tokens]}


def load_document(path: str | Path) -> OcrDocument:
    return OcrDocument.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- label specification -----------------------------------------------------

METRICS = ("download", "upload", "latency", "jitter", "packet_loss")
_METRIC_KIND = {"download": "speed", "upload": "speed", "latency": "time",
                "jitter": "time", "packet_loss": "percent"}
_DEFAULT_UNIT = {"speed": "Mbps", "time": "ms", "percent": "%"}


@dataclass(frozen=True)
class LabelSpec:
    synonyms: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: {
        "download": ("download", "down", "dl"),
        "upload": ("upload", "up", "ul"),
        "latency": ("ping", "latency", "idle latency"),
        "jitter": ("jitter",),
        "packet_loss": ("packet loss", "loss"),
    })
    beside_weight: float = 1.0
    below_weight: float = 0.8
    max_distance: float = 0.35  # fraction of the image diagonal
    row_tolerance: float = 0.6  # fraction of the median token height
    unit_distance: float = 2.0  # multiples of the value token height
    ambiguity: float = 0.05
    provider_labels: tuple[str, ...] = ("provider", "isp")
    server_labels: tuple[str, ...] = ("server",)
    known_providers: tuple[str, ...] = ("starlink", "spacex")

    def __post_init__(self):
        seen: dict[str, str] = {}
        for metric, words in self.synonyms.items():
            if metric not in METRICS:
                raise ValueError(f"unknown metric {metric!r}")
            for w in words:
                if w in seen and seen[w] != metric:
                    raise ValueError(f"synonym {w!r} used for {seen[w]} and {metric}")
                seen[w] = metric

    def phrases(self) -> list[tuple[tuple[str, ...], str]]:
        """(word tuple, metric) pairs, longest phrases first."""
        out = [(tuple(s.split()), m) for m, words in self.synonyms.items() for s in words]
        return sorted(out, key=lambda p: (-len(p[0]), p[0]))


# -- reports -----------------------------------------------------------------

class Template(str, enum.Enum):
    SIMPLE = "SIMPLE"
    TABLE = "TABLE"


@dataclass(frozen=True)
class Measurement:
    value: float
    unit: str
    low_confidence: bool = False

    @property
    def normalized(self) -> float:
        return normalize(self.value, self.unit)


@dataclass(frozen=True)
class SpeedTestReport:
    source_id: str
    download: Measurement
    template: Template
    upload: Measurement | None = None
    latency: Measurement | None = None
    jitter: Measurement | None = None
    packet_loss: Measurement | None = None
    provider: str | None = None
    server_location: str | None = None
    test_timestamp: datetime | None = None
    table_row: int | None = None

    def __post_init__(self):
        for name in METRICS:
            m = getattr(self, name)
            if m is None:
                continue
            if unit_kind(m.unit) != _METRIC_KIND[name]:
                raise ValueError(f"{name} has incompatible unit {m.unit}")
            if name == "packet_loss":
                if m.value < 0:
                    raise ValueError("packet loss must be >= 0")
            elif not m.value > 0:
                raise ValueError(f"{name} must be > 0, got {m.value}")

    @property
    def download_mbps(self) -> float:
        return self.download.normalized

    def metric(self, name: str) -> float | None:
        m = getattr(self, name)
        return None if m is None else m.normalized

    def row(self) -> list:
        ts = self.test_timestamp.isoformat(timespec="minutes") if self.test_timestamp else None
        return [self.source_id, ts, self.provider, self.template.value, self.table_row,
                self.download_mbps, self.metric("upload"), self.metric("latency"),
                self.metric("jitter"), self.metric("packet_loss"), self.server_location]


REPORT_COLUMNS = ["source_id", "timestamp", "provider", "template", "row", "download_mbps",
                  "upload_mbps", "latency_ms", "jitter_ms", "loss_pct", "server_location"]


def reports_csv(reports: Iterable[SpeedTestReport]) -> str:
    return csv_text(REPORT_COLUMNS, (r.row() for r in reports))


# -- layout analysis ---------------------------------------------------------

def _median_height(tokens: Sequence[OcrToken]) -> float:
    return statistics.median(t.h for t in tokens)


def cluster_rows(tokens: Sequence[OcrToken], tolerance: float = 0.6) -> list[list[OcrToken]]:
    """Group tokens into text rows.

    Tokens are visited by vertical center; a token joins the current row when
    its center is within ``tolerance`` x median token height of the row's mean
    center.  Rows run top to bottom, tokens left to right.
    """
    if not tokens:
        return []
    tol = tolerance * _median_height(tokens)
    rows: list[list[OcrToken]] = []
    centers: list[float] = []
    for tok in sorted(tokens, key=lambda t: (t.cy, t.x)):
        if rows and abs(tok.cy - centers[-1]) <= tol:
            rows[-1].append(tok)
            n = len(rows[-1])
            centers[-1] += (tok.cy - centers[-1]) / n
        else:
            rows.append([tok])
            centers.append(tok.cy)
    return [sorted(row, key=lambda t: (t.x, t.y)) for row in rows]


def _norm_word(text: str) -> str:
    return text.strip().lower().strip(":()[]")


@dataclass(frozen=True)
class _Label:
    metric: str
    tokens: tuple[OcrToken, ...]

    @property
    def x(self):
        return min(t.x for t in self.tokens)

    @property
    def y(self):
        return min(t.y for t in self.tokens)

    @property
    def right(self):
        return max(t.right for t in self.tokens)

    @property
    def bottom(self):
        return max(t.bottom for t in self.tokens)

    @property
    def cx(self):
        return (self.x + self.right) / 2

    @property
    def cy(self):
        return (self.y + self.bottom) / 2


def _find_labels(rows: Sequence[Sequence[OcrToken]], spec: LabelSpec) -> list[list[_Label]]:
    """Metric labels per row, matching multi-word synonyms longest-first."""
    phrases = spec.phrases()
    found = []
    for row in rows:
        words = [_norm_word(t.text) for t in row]
        labels, i = [], 0
        while i < len(row):
            for phrase, metric in phrases:
                if tuple(words[i:i + len(phrase)]) == phrase:
                    labels.append(_Label(metric, tuple(row[i:i + len(phrase)])))
                    i += len(phrase)
                    break
            else:
                i += 1
        found.append(labels)
    return found


def _numeric(tok: OcrToken) -> tuple[float, str | None] | None:
    try:
        return parse_value_unit(tok.text)
    except ExtractionError:
        return None


def classify_template(doc: OcrDocument, spec: LabelSpec | None = None) -> Template:
    """TABLE when all metric labels sit in a single header row, download is
    named at most once, and at least two label-free rows each carry two or
    more numeric values; SIMPLE otherwise.
    """
    spec = spec or LabelSpec()
    if not doc.tokens:
        raise NoTokens(f"{doc.source_id}: no tokens")
    rows = cluster_rows(doc.tokens, spec.row_tolerance)
    labels = _find_labels(rows, spec)
    label_rows = sum(1 for ls in labels if ls)
    downloads = sum(1 for ls in labels for lab in ls if lab.metric == "download")
    numeric_rows = sum(
        1 for row, ls in zip(rows, labels)
        if not ls and sum(1 for t in row if _numeric(t) is not None) >= 2
    )
    if label_rows == 1 and downloads <= 1 and numeric_rows >= 2:
        return Template.TABLE
    return Template.SIMPLE


# -- metadata (provider, server, timestamp) ----------------------------------

_TS_PATTERNS = [
    (re.compile(r"\b(\d{4}-\d{2}-\d{2})[ T](\d{1,2}:\d{2})\b"), "%Y-%m-%d %H:%M"),
    (re.compile(r"\b(\d{1,2}/\d{1,2}/\d{4}) (\d{1,2}:\d{2} ?[AaPp][Mm])"), "%m/%d/%Y %I:%M%p"),
    (re.compile(r"\b(\d{1,2}/\d{1,2}/\d{4}) (\d{1,2}:\d{2})\b"), "%m/%d/%Y %H:%M"),
    (re.compile(r"\b(\d{4}-\d{2}-\d{2})\b"), "%Y-%m-%d"),
    (re.compile(r"\b(\d{1,2}/\d{1,2}/\d{4})\b"), "%m/%d/%Y"),
]


def find_timestamp(text: str) -> datetime | None:
    for pattern, fmt in _TS_PATTERNS:
        m = pattern.search(text)
        if not m:
            continue
        raw = " ".join(g.replace(" ", "") for g in m.groups())
        try:
            return datetime.strptime(raw, fmt)
        except ValueError:
            continue
    return None


def _row_text(row: Sequence[OcrToken]) -> str:
    return " ".join(t.text for t in row)


def _anchored_text(rows, labels: Sequence[str], used: set[int]) -> str | None:
    """Text following a label word in the same row, or the row below it."""
    for r, row in enumerate(rows):
        for i, tok in enumerate(row):
            if _norm_word(tok.text) not in labels:
                continue
            rest = [t for t in row[i + 1:] if id(t) not in used]
            if rest:
                return _row_text(rest).strip()
            if r + 1 < len(rows):
                below = [t for t in rows[r + 1]
                         if id(t) not in used and t.right >= tok.x and t.x <= tok.right + tok.w]
                if below:
                    return _row_text(below).strip()
    return None


def _metadata(rows, spec: LabelSpec, used: set[int]):
    provider = _anchored_text(rows, spec.provider_labels, used)
    if provider is None:
        for row in rows:
            for tok in row:
                if id(tok) not in used and _norm_word(tok.text) in spec.known_providers:
                    provider = tok.text.strip()
                    break
            if provider:
                break
    server = _anchored_text(rows, spec.server_labels, used)
    timestamp = None
    for row in rows:
        timestamp = find_timestamp(_row_text(row))
        if timestamp:
            break
    return provider, server, timestamp


# -- SIMPLE ------------------------------------------------------------------

def _compatible(parsed: tuple[float, str | None], metric: str) -> bool:
    unit = parsed[1]
    return unit is None or unit_kind(unit) == _METRIC_KIND[metric]


def _rect_gap(a: OcrToken, b: OcrToken) -> float:
    dx = max(b.x - a.right, a.x - b.right, 0.0)
    dy = max(b.y - a.bottom, a.y - b.bottom, 0.0)
    return math.hypot(dx, dy)


def _attach_unit(value_tok: OcrToken, parsed, metric: str, unit_tokens: Sequence[OcrToken],
                 spec: LabelSpec) -> Measurement:
    value, unit = parsed
    kind = _METRIC_KIND[metric]
    if unit is not None:
        return Measurement(value, unit)
    limit = spec.unit_distance * value_tok.h
    best = None
    for ut in unit_tokens:
        u = parse_unit(ut.text)
        if unit_kind(u) != kind:
            continue
        gap = _rect_gap(value_tok, ut)
        if gap <= limit and (best is None or gap < best[0]):
            best = (gap, u)
    if best is not None:
        return Measurement(value, best[1])
    return Measurement(value, _DEFAULT_UNIT[kind], low_confidence=True)


def extract_simple(doc: OcrDocument, spec: LabelSpec | None = None) -> SpeedTestReport:
    """Pair each metric label with its nearest admissible numeric token.

    A numeric token is admissible for a label when its center lies below the
    label's top edge or right of its right edge, within ``max_distance`` of
    the image diagonal.  Candidates are ranked by ``|dx| * beside_weight +
    |dy| * below_weight``; if the runner-up is within ``ambiguity`` of the
    best, or one token wins two metrics, :class:`AmbiguousValue` is raised.
    """
    spec = spec or LabelSpec()
    if not doc.tokens:
        raise NoTokens(f"{doc.source_id}: no tokens")
    rows = cluster_rows(doc.tokens, spec.row_tolerance)
    labels_by_row = _find_labels(rows, spec)
    label_ids = {id(t) for ls in labels_by_row for lab in ls for t in lab.tokens}

    first_label: dict[str, _Label] = {}
    for ls in labels_by_row:
        for lab in ls:
            first_label.setdefault(lab.metric, lab)
    if "download" not in first_label:
        raise NoDownload(f"{doc.source_id}: no download label")

    numerics = [(t, p) for t in doc.tokens if id(t) not in label_ids
                for p in [_numeric(t)] if p is not None]
    unit_tokens = [t for t in doc.tokens if id(t) not in label_ids and _is_unit(t.text)]
    radius = spec.max_distance * doc.diagonal

    chosen: dict[str, tuple[OcrToken, tuple]] = {}
    for metric in METRICS:
        lab = first_label.get(metric)
        if lab is None:
            continue
        scored = []
        for tok, parsed in numerics:
            if not _compatible(parsed, metric):
                continue
            if not (tok.cy >= lab.y or tok.cx >= lab.right):
                continue
            dx, dy = tok.cx - lab.cx, tok.cy - lab.cy
            if math.hypot(dx, dy) > radius:
                continue
            scored.append((abs(dx) * spec.beside_weight + abs(dy) * spec.below_weight, tok, parsed))
        if not scored:
            continue
        scored.sort(key=lambda s: s[0])
        if len(scored) > 1 and scored[1][0] - scored[0][0] <= spec.ambiguity * scored[0][0]:
            raise AmbiguousValue(
                f"{doc.source_id}: {metric} candidates {scored[0][1].text!r} and "
                f"{scored[1][1].text!r} are equally close")
        chosen[metric] = (scored[0][1], scored[0][2])

    owners: dict[int, str] = {}
    for metric, (tok, _) in chosen.items():
        if id(tok) in owners:
            raise AmbiguousValue(
                f"{doc.source_id}: {tok.text!r} is nearest to both {owners[id(tok)]} and {metric}")
        owners[id(tok)] = metric
    if "download" not in chosen:
        raise NoDownload(f"{doc.source_id}: no value near the download label")

    values = {m: _attach_unit(tok, parsed, m, unit_tokens, spec) for m, (tok, parsed) in chosen.items()}
    for m, meas in values.items():
        if m != "packet_loss" and not meas.value > 0:
            raise NotANumber(f"{doc.source_id}: {m} value {meas.value} is not positive")
    used = label_ids | {id(tok) for tok, _ in chosen.values()} | {id(t) for t in unit_tokens}
    provider, server, timestamp = _metadata(rows, spec, used)
    return SpeedTestReport(doc.source_id, values["download"], Template.SIMPLE,
                           upload=values.get("upload"), latency=values.get("latency"),
                           jitter=values.get("jitter"), packet_loss=values.get("packet_loss"),
                           provider=provider, server_location=server, test_timestamp=timestamp)


# -- TABLE -------------------------------------------------------------------

def extract_table(doc: OcrDocument, spec: LabelSpec | None = None) -> list[SpeedTestReport]:
    """One report per data row of a tabular layout.

    The header is the topmost row with two or more metric labels.  Each
    column spans its header label widened by half the median gap between
    header labels.  A row made only of unit tokens directly below the header
    sets the column units.  Numeric tokens outside every column are ignored;
    rows without a download value are skipped with a warning.
    """
    spec = spec or LabelSpec()
    if not doc.tokens:
        raise NoTokens(f"{doc.source_id}: no tokens")
    rows = cluster_rows(doc.tokens, spec.row_tolerance)
    labels_by_row = _find_labels(rows, spec)
    header_idx = next((i for i, ls in enumerate(labels_by_row) if len(ls) >= 2), None)
    if header_idx is None:
        raise NoHeader(f"{doc.source_id}: no header row")
    header = sorted(labels_by_row[header_idx], key=lambda lab: lab.x)
    gaps = [max(b.x - a.right, 0.0) for a, b in zip(header, header[1:])]
    pad = statistics.median(gaps) / 2 if gaps else 0.0
    columns = []
    for lab in header:
        if any(c[0] == lab.metric for c in columns):
            raise AmbiguousValue(f"{doc.source_id}: duplicate {lab.metric} column")
        columns.append((lab.metric, lab.x - pad, lab.right + pad))
    if "download" not in {c[0] for c in columns}:
        raise NoDownload(f"{doc.source_id}: no download column")

    def column_of(tok: OcrToken) -> str | None:
        hits = [m for m, lo, hi in columns if lo <= tok.cx <= hi]
        if len(hits) > 1:
            raise AmbiguousValue(f"{doc.source_id}: {tok.text!r} falls in columns {hits}")
        return hits[0] if hits else None

    units: dict[str, str] = {}
    data_start = header_idx + 1
    if data_start < len(rows) and all(_is_unit(t.text) for t in rows[data_start]):
        for tok in rows[data_start]:
            metric = column_of(tok)
            if metric is not None:
                u = parse_unit(tok.text)
                if unit_kind(u) == _METRIC_KIND[metric]:
                    units[metric] = u
        data_start += 1

    # doc-level provider/server apply to every row
    meta_rows = [row for i, row in enumerate(rows) if i < header_idx]
    provider, server, _ = _metadata(meta_rows, spec, set())

    reports, data_rows = [], 0
    for r, row in enumerate(rows[data_start:]):
        cells: dict[str, tuple[float, str | None]] = {}
        numeric_seen = False
        for tok in row:
            parsed = _numeric(tok)
            if parsed is None:
                continue
            numeric_seen = True
            metric = column_of(tok)
            if metric is None:
                log.warning("%s: row %d: %r outside all columns, ignored", doc.source_id, r, tok.text)
                continue
            if not _compatible(parsed, metric):
                continue
            if metric in cells:
                raise AmbiguousValue(f"{doc.source_id}: row {r} has two {metric} values")
            cells[metric] = parsed
        if not numeric_seen:
            continue
        data_rows += 1
        if "download" not in cells:
            log.warning("%s: row %d has no download value, skipped", doc.source_id, r)
            continue
        values = {}
        for metric, (value, unit) in cells.items():
            if unit is None and metric in units:
                values[metric] = Measurement(value, units[metric])
            elif unit is None:
                values[metric] = Measurement(value, _DEFAULT_UNIT[_METRIC_KIND[metric]], True)
            else:
                values[metric] = Measurement(value, unit)
        if any(m != "packet_loss" and not v.value > 0 for m, v in values.items()):
            log.warning("%s: row %d has a non-positive value, skipped", doc.source_id, r)
            continue
        timestamp = find_timestamp(_row_text(row))
        reports.append(SpeedTestReport(
            doc.source_id, values["download"], Template.TABLE,
            upload=values.get("upload"), latency=values.get("latency"),
            jitter=values.get("jitter"), packet_loss=values.get("packet_loss"),
            provider=provider, server_location=server, test_timestamp=timestamp,
            table_row=len(reports),
        ))
    if not reports:
        raise EmptyTable(f"{doc.source_id}: no data rows with a download value")
    return reports


def extract(doc: OcrDocument, spec: LabelSpec | None = None) -> list[SpeedTestReport]:
    spec = spec or LabelSpec()
    if classify_template(doc, spec) is Template.TABLE:
        return extract_table(doc, spec)
    return [extract_simple(doc, spec)]


def extract_many(docs: Iterable[OcrDocument], spec: LabelSpec | None = None):
    """Extract every document; returns ``(reports, [(source_id, error), ...])``."""
    reports, errors = [], []
    for doc in docs:
        try:
            reports.extend(extract(doc, spec))
        except ExtractionError as exc:
            errors.append((doc.source_id, exc))
    return reports, errors


# -- plausibility filter -----------------------------------------------------

@dataclass(frozen=True)
class PlausibilityBounds:
    download_mbps: tuple[float, float] = (0.1, 2000.0)
    upload_mbps: tuple[float, float] = (0.1, 500.0)
    latency_ms: tuple[float, float] = (1.0, 5000.0)


def filter_false_positives(reports: Iterable[SpeedTestReport],
                           bounds: PlausibilityBounds | None = None,
                           provider_filter: str | None = None,
                           post_texts: Mapping[str, str] | None = None):
    """Split reports into kept and rejected ``(report, reason)`` pairs.

    Values are unit-normalized before the bounds check.  With
    ``provider_filter`` set, a report survives only if its provider or the
    text of its originating post mentions that name (case-insensitive).
    """
    bounds = bounds or PlausibilityBounds()
    post_texts = post_texts or {}
    kept, rejected = [], []
    checks = (("download", bounds.download_mbps), ("upload", bounds.upload_mbps),
              ("latency", bounds.latency_ms))
    for rep in reports:
        reason = None
        for name, (lo, hi) in checks:
            v = rep.metric(name)
            if v is not None and not (lo <= v <= hi):
                reason = f"{name} {fmt_cell(v)} outside [{fmt_cell(lo)}, {fmt_cell(hi)}]"
                break
        if reason is None and provider_filter:
            target = provider_filter.lower()
            in_provider = rep.provider is not None and target in rep.provider.lower()
            in_post = target in post_texts.get(rep.source_id, "").lower()
            if not (in_provider or in_post):
                reason = f"provider is not {provider_filter}"
        if reason is None:
            kept.append(rep)
        else:
            rejected.append((rep, reason))
    return kept, rejected


# -- estimator ---------------------------------------------------------------

class SpeedTestExtractor(TransformerMixin, BaseEstimator):
    """Transform OCR documents into speed-test reports.

    ``transform`` returns the flat list of reports; documents that fail
    extraction are skipped and listed by :meth:`extract_with_errors`.
    """

    def __init__(self, beside_weight=1.0, below_weight=0.8, max_distance=0.35,
                 row_tolerance=0.6, unit_distance=2.0, ambiguity=0.05):
        self.beside_weight = beside_weight
        self.below_weight = below_weight
        self.max_distance = max_distance
        self.row_tolerance = row_tolerance
        self.unit_distance = unit_distance
        self.ambiguity = ambiguity

    def fit(self, X=None, y=None):
        for name in ("beside_weight", "below_weight", "max_distance", "row_tolerance",
                     "unit_distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.ambiguity >= 0:
            raise ValueError("ambiguity must be >= 0")
        self.spec_ = LabelSpec(beside_weight=self.beside_weight, below_weight=self.below_weight,
                               max_distance=self.max_distance, row_tolerance=self.row_tolerance,
                               unit_distance=self.unit_distance, ambiguity=self.ambiguity)
        return self

    def extract_with_errors(self, docs):
        check_is_fitted(self, "spec_")
        return extract_many(docs, self.spec_)

    def transform(self, X):
        return self.extract_with_errors(X)[0]
