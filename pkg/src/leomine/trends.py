"""Monthly median downlink series, subsample stability and annotation joins."""
from __future__ import annotations

import csv
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._io import csv_text
from ._validation import check_fractions
from .corpus import utc_date
from .sentiment import PosScore
from .speedtest import SpeedTestReport

__all__ = [
    "DEFAULT_FRACTIONS",
    "AnnotationTable",
    "DuplicateMonth",
    "EmptyInput",
    "MonthlyPoint",
    "join_annotations",
    "load_annotations",
    "median",
    "monthly_median_series",
    "subsample_medians",
    "trend_csv",
    "trend_svg",
]

DEFAULT_FRACTIONS = (0.95, 0.90)


class EmptyInput(ValueError):
    pass


class DuplicateMonth(ValueError):
    pass


def median(values: Iterable[float]) -> float:
    """Middle of the ascending sort; mean of the two middles for even counts."""
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise EmptyInput("median of empty input")
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def _rng(seed: int, month: str | None, fraction: float) -> np.random.Generator:
    # one stream per (month, fraction) so adding a fraction never shifts another's draw
    year, mon = (int(p) for p in month.split("-")) if month else (0, 0)
    return np.random.default_rng([seed, year, mon, round(fraction * 10**6)])


def subsample_medians(values: Sequence[float], fractions: Sequence[float] = DEFAULT_FRACTIONS,
                      seed: int = 0, month: str | None = None) -> dict[float, float]:
    """Median of a uniform draw without replacement of ``ceil(f * n)`` values
    for each fraction ``f``.  The draw is a pure function of ``seed``,
    ``month`` and the fraction.
    """
    values = list(values)
    if not values:
        raise EmptyInput("subsample of empty input")
    out = {}
    for f in check_fractions(fractions):
        size = min(len(values), math.ceil(round(f * len(values), 9)))
        idx = _rng(seed, month, f).choice(len(values), size=size, replace=False)
        out[f] = median(values[i] for i in idx)
    return out


@dataclass
class MonthlyPoint:
    month: str
    median_download: float | None = None
    sample_count: int = 0
    subsample_medians: dict[float, float] = field(default_factory=dict)
    pos: PosScore | None = None
    launches: int | None = None
    reported_users: int | None = None

    @property
    def pos_value(self) -> float | None:
        return None if self.pos is None else self.pos.pos


def _month(d: date) -> str:
    return d.strftime("%Y-%m")


def _months_between(first: str, last: str) -> list[str]:
    y, m = (int(p) for p in first.split("-"))
    ly, lm = (int(p) for p in last.split("-"))
    out = []
    while (y, m) <= (ly, lm):
        out.append(f"{y:04d}-{m:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def report_month(report: SpeedTestReport, post_created: Mapping[str, int]) -> str | None:
    """Screenshot timestamp month if readable, else the originating post's month."""
    if report.test_timestamp is not None:
        return _month(report.test_timestamp.date())
    ts = post_created.get(report.source_id)
    return None if ts is None else _month(utc_date(ts))


def monthly_median_series(reports: Iterable[SpeedTestReport], post_created: Mapping[str, int],
                          window: tuple[date, date] | None = None,
                          fractions: Sequence[float] = DEFAULT_FRACTIONS,
                          seed: int = 0) -> list[MonthlyPoint]:
    """Median download (Mbps) per calendar month.

    Months in the window without reports are kept as points with no median.
    Reports whose month cannot be determined are dropped.
    """
    groups: dict[str, list[float]] = defaultdict(list)
    for rep in reports:
        month = report_month(rep, post_created)
        if month is not None:
            groups[month].append(rep.download_mbps)
    if window is not None:
        months = _months_between(_month(window[0]), _month(window[1]))
    elif groups:
        months = _months_between(min(groups), max(groups))
    else:
        months = []
    points = []
    for month in months:
        vals = groups.get(month, [])
        if not vals:
            points.append(MonthlyPoint(month))
            continue
        points.append(MonthlyPoint(month, median(vals), len(vals),
                                   subsample_medians(vals, fractions, seed, month)))
    return points


@dataclass
class AnnotationTable:
    launches: dict[str, int] = field(default_factory=dict)
    users: list[tuple[date, int]] = field(default_factory=list)


def _read_rows(path: str | Path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and not rows[0][0][:1].isdigit():
        rows = rows[1:]
    return rows


def load_annotations(launches_path: str | Path | None = None,
                     users_path: str | Path | None = None) -> AnnotationTable:
    """Read ``month,count`` launches and ``date,count`` user-report CSVs."""
    table = AnnotationTable()
    if launches_path is not None:
        for month, count in _read_rows(launches_path):
            month = month.strip()[:7]
            if month in table.launches:
                raise DuplicateMonth(f"launches table lists {month} twice")
            table.launches[month] = int(count)
    if users_path is not None:
        table.users = sorted((date.fromisoformat(d.strip()), int(c)) for d, c in _read_rows(users_path))
    return table


def _month_end(month: str) -> date:
    y, m = (int(p) for p in month.split("-"))
    nxt = date(y + 1, 1, 1) if m == 12 else date(y, m + 1, 1)
    return date.fromordinal(nxt.toordinal() - 1)


def join_annotations(series: Sequence[MonthlyPoint], table: AnnotationTable) -> list[MonthlyPoint]:
    """Attach launches by month and the latest user count reported by month end."""
    dates = [d for d, _ in table.users]
    out = []
    for point in series:
        i = bisect_right(dates, _month_end(point.month))
        users = table.users[i - 1][1] if i else None
        out.append(replace(point, launches=table.launches.get(point.month), reported_users=users))
    return out


def attach_pos(series: Sequence[MonthlyPoint], pos: Mapping[str, PosScore]) -> list[MonthlyPoint]:
    return [replace(p, pos=pos.get(p.month)) for p in series]


TREND_COLUMNS = ["month", "median_mbps", "median_p95", "median_p90", "pos", "launches", "users"]


def trend_rows(series: Sequence[MonthlyPoint], fractions: Sequence[float] = DEFAULT_FRACTIONS):
    for p in series:
        yield [p.month, p.median_download,
               *[p.subsample_medians.get(f) for f in fractions],
               p.pos_value, p.launches, p.reported_users]


def trend_csv(series: Sequence[MonthlyPoint], fractions: Sequence[float] = DEFAULT_FRACTIONS) -> str:
    header = ["month", "median_mbps"] + [f"median_p{round(f * 100):d}" for f in fractions] \
        + ["pos", "launches", "users"]
    return csv_text(header, trend_rows(series, fractions))


def trend_svg(series: Sequence[MonthlyPoint], width: int = 720, height: int = 360) -> str:
    """Line chart of monthly medians (left axis) and Pos (right axis, 0..1)."""
    margin = 40
    n = len(series)
    medians = [p.median_download for p in series]
    top = max((m for m in medians if m is not None), default=1.0) or 1.0

    def x(i):
        return margin + (width - 2 * margin) * (i / (n - 1) if n > 1 else 0.5)

    def y(frac):
        return height - margin - (height - 2 * margin) * frac

    def path(values, scale):
        parts, pen_down = [], False
        for i, v in enumerate(values):
            if v is None:
                pen_down = False
                continue
            parts.append(f"{'L' if pen_down else 'M'}{x(i):.2f},{y(v / scale):.2f}")
            pen_down = True
        return " ".join(parts)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<path d="{path(medians, top)}" fill="none" stroke="black" stroke-width="2"/>',
        f'<path d="{path([p.pos_value for p in series], 1.0)}" fill="none" stroke="green" '
        'stroke-dasharray="6,4" stroke-width="2"/>',
    ]
    for i, p in enumerate(series):
        lines.append(f'<text x="{x(i):.2f}" y="{height - margin / 3:.2f}" font-size="8" '
                     f'text-anchor="middle">{p.month}</text>')
    lines.append(f'<text x="{margin}" y="{margin / 2:.2f}" font-size="10">median downlink '
                 f'(max {top:g} Mbps), Pos dashed</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
