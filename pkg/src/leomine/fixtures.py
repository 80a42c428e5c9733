"""Deterministic synthetic corpus with planted events and a ground-truth manifest.

The generated corpus realizes a :class:`FixtureSpec` exactly: planted
sentiment peaks, outage days, one popular post with known top terms and
monthly download distributions with known medians.  Every planted text is
checked against the shipped lexicon while generating, so the manifest
states what the pipeline must find rather than what it happens to find.
"""
from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from decimal import Decimal
from pathlib import Path

from . import textmine
from ._io import write_json, write_jsonl
from .layouts import PlantedReport, render_simple, render_table
from .sentiment import DEFAULT_THRESHOLD, Lexicon, StrongLabel, classify_strong, default_lexicon, score_text

__all__ = ["FixtureSpec", "OutageSpec", "PeakSpec", "PopularSpec", "SpecInfeasible",
           "generate_fixture", "golden_spec"]


class SpecInfeasible(ValueError):
    pass


NEUTRAL = """dish router mount roof cable kit app weather tree view beta terminal order speed test
satellite launch coverage area install power wifi mesh pole snow rain firmware obstruction sky cell
account support price month rural farm cabin camping travel adapter ethernet bracket ridge chimney
antenna heater mode plan region county signal orbit shell laser gateway ground station map queue
deposit box tracking photo screenshot result stream video gaming zoom call work home school neighbor
town valley mountain forest lake boat truck van generator solar battery inverter watts usage data cap
night morning evening week season summer winter spring autumn question update tilt motor yard field
barn garage attic conduit drill sealant tripod bucket mast clearance horizon azimuth elevation""".split()
POSITIVE = ["love", "great", "awesome", "amazing", "excellent", "fantastic", "happy", "impressed",
            "perfect", "reliable", "smooth", "stable", "solid", "brilliant", "superb"]
NEGATIVE = ["terrible", "awful", "horrible", "frustrating", "disappointed", "annoying", "useless",
            "broken", "unreliable", "unstable", "pathetic", "miserable", "unacceptable", "dreadful"]
OUTAGE_TERMS = ["outage", "offline", "disconnected"]
KEYWORDS = ["outage", "outages", "offline", "down", "disconnected", "no service", "no internet",
            "connection lost"]


@dataclass
class PeakSpec:
    date: str
    polarity: str  # POSITIVE | NEGATIVE
    count: int
    term: str
    hits: int = 3
    co_terms: list[str] = field(default_factory=list)  # words repeated once per planted post


@dataclass
class OutageSpec:
    date: str
    items: int
    hits_per_item: int = 2


@dataclass
class PopularSpec:
    date: str
    upvotes: int = 650
    comments: int = 140
    unigram: str = "roaming"
    bigram: str = "roaming enabled"


@dataclass
class FixtureSpec:
    start: str = "2021-01-01"
    end: str = "2022-12-31"
    background_posts: int = 4500
    comments_per_post: float = 4.7
    peaks: list[PeakSpec] = field(default_factory=list)
    outages: list[OutageSpec] = field(default_factory=list)
    popular: PopularSpec | None = None
    medians: list[float] = field(default_factory=list)  # one per month from start
    simple_docs_per_month: int = 11
    table_docs_per_month: int = 5
    table_rows: int = 4
    junk_docs: int = 16
    pos_plan: list[tuple[int, int]] = field(default_factory=list)  # (SP, SN) per month
    launches: dict[str, int] = field(default_factory=dict)
    users: list[tuple[str, int]] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "FixtureSpec":
        data = dict(data)
        data["peaks"] = [PeakSpec(**p) for p in data.get("peaks", [])]
        data["outages"] = [OutageSpec(**o) for o in data.get("outages", [])]
        if data.get("popular"):
            data["popular"] = PopularSpec(**data["popular"])
        data["pos_plan"] = [tuple(x) for x in data.get("pos_plan", [])]
        data["users"] = [tuple(x) for x in data.get("users", [])]
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def golden_spec() -> FixtureSpec:
    """The 24-month scenario used by the end-to-end tests."""
    medians = [62.4, 71.8, 88.0, 97.3, 104.6, 121.5, 112.2, 98.9, 139.1, 131.0, 124.7, 118.3,
               126.9, 110.4, 104.0, 97.6, 92.1, 88.8, 84.5, 80.2, 76.9, 71.3, 66.0, 62.7]
    pos_plan = [(6, 2), (5, 1), (7, 1), (8, 0), (6, 2), (7, 1), (3, 5), (2, 4), (8, 1), (0, 0),
                (4, 4), (3, 3), (5, 2), (4, 3), (3, 2), (2, 3), (2, 2), (0, 0), (1, 4), (2, 5),
                (1, 3), (2, 4), (1, 5), (2, 3)]
    return FixtureSpec(
        peaks=[
            PeakSpec("2021-02-09", "POSITIVE", 40, "preorder"),
            PeakSpec("2021-11-24", "NEGATIVE", 32, "delay"),
            PeakSpec("2022-04-22", "NEGATIVE", 26, "outage", co_terms=["starlink", "internet"]),
        ],
        outages=[
            OutageSpec("2021-03-10", 30, 2),
            OutageSpec("2021-06-18", 6, 1),
            OutageSpec("2021-09-02", 9, 1),
            OutageSpec("2022-01-07", 40, 2),
            OutageSpec("2022-04-22", 12, 2),
            OutageSpec("2022-08-30", 45, 2),
            OutageSpec("2022-11-15", 7, 1),
        ],
        popular=PopularSpec("2022-02-23"),
        medians=medians,
        pos_plan=pos_plan,
        launches={"2021-01": 3, "2021-02": 3, "2021-03": 4, "2021-04": 3, "2021-05": 4,
                  "2021-09": 1, "2021-11": 2, "2021-12": 2, "2022-01": 3, "2022-02": 4,
                  "2022-03": 3, "2022-05": 5, "2022-07": 4, "2022-09": 3, "2022-12": 2},
        users=[("2021-02-04", 10000), ("2021-06-03", 69000), ("2021-08-03", 90000),
               ("2021-11-30", 140000), ("2022-02-15", 250000), ("2022-05-25", 400000),
               ("2022-09-19", 700000), ("2022-12-19", 1000000)],
    )


# -- helpers -----------------------------------------------------------------

def _ts(day: date, rng: random.Random, lo: int = 0, hi: int = 86399) -> int:
    base = datetime.combine(day, time(0), tzinfo=timezone.utc)
    return int(base.timestamp()) + rng.randint(lo, hi)


def _words(rng: random.Random, n: int) -> list[str]:
    return [rng.choice(NEUTRAL) for _ in range(n)]


def _sentence(rng, n_neutral, extra=(), lead=()) -> str:
    words = _words(rng, n_neutral)
    for w in extra:
        words.insert(rng.randint(0, len(words)), w)
    return " ".join([*lead, *words])


class _Gen:
    def __init__(self, spec: FixtureSpec, seed: int, lexicon: Lexicon, tau: float):
        self.spec = spec
        self.rng = random.Random(seed)
        self.lexicon = lexicon
        self.tau = tau
        self.start = date.fromisoformat(spec.start)
        self.end = date.fromisoformat(spec.end)
        self.posts: list[dict] = []
        self.comments: list[dict] = []
        self.n_post = 0
        self.n_comment = 0
        self.expected_labels: dict[str, str] = {}
        self._check_vocab()

    def _check_vocab(self):
        stop = textmine.default_stopwords()
        for w in NEUTRAL:
            if w in self.lexicon.entries or w in self.lexicon.negators or w in stop or w in KEYWORDS:
                raise SpecInfeasible(f"neutral word {w!r} is not neutral")

    def check(self, text: str, want: StrongLabel | None = None, negative_lean: bool | None = None):
        score = score_text(text, self.lexicon)
        label = classify_strong(score, self.tau)
        if want is not None and label != want:
            raise SpecInfeasible(f"text {text!r} scores {label.value}, wanted {want.value}")
        if negative_lean is not None and (score.negative > score.positive) != negative_lean:
            raise SpecInfeasible(f"text {text!r} has the wrong lean")
        return label

    def strong_text(self, polarity: str, hits: int, n_neutral: int, lead=()) -> str:
        p, s = hits, self.lexicon.smoothing
        if p / (p + s) < self.tau:
            raise SpecInfeasible(
                f"{hits} unopposed hits give {p / (p + s):.3f} < {self.tau}; strong text impossible")
        pool = POSITIVE if polarity == "POSITIVE" else NEGATIVE
        text = _sentence(self.rng, n_neutral, self.rng.sample(pool, hits), lead)
        self.check(text, StrongLabel.STRONG_POS if polarity == "POSITIVE" else StrongLabel.STRONG_NEG)
        return text

    def post(self, day: date, title: str, body: str, upvotes: int | None = None, ts: int | None = None,
             **extra) -> dict:
        self.n_post += 1
        rec = {
            "id": f"p{self.n_post:05d}",
            "created_utc": ts if ts is not None else _ts(day, self.rng, 0, 72000),
            "title": title,
            "selftext": body,
            "score": upvotes if upvotes is not None else self._upvotes(),
            "num_comments": 0,
            "url": "",
            "author": f"user{self.rng.randint(1, 3000)}",
        }
        rec.update(extra)
        self.posts.append(rec)
        self.expected_labels[rec["id"]] = self.check(f"{title} {body}".strip()).value
        return rec

    def _upvotes(self) -> int:
        v = int(self.rng.lognormvariate(2.5, 1.1))
        if self.rng.random() < 0.03:
            v = -self.rng.randint(1, 5)
        return min(v, 480)

    def comment(self, post: dict, body: str, ts: int | None = None, parent: str | None = None) -> dict:
        self.n_comment += 1
        created = ts if ts is not None else post["created_utc"] + self.rng.randint(60, 3000)
        rec = {
            "id": f"c{self.n_comment:06d}",
            "parent_id": f"t1_{parent}" if parent else f"t3_{post['id']}",
            "link_id": f"t3_{post['id']}",
            "body": body,
            "created_utc": created,
            "score": self.rng.randint(-2, 40),
            "author": f"user{self.rng.randint(1, 3000)}",
        }
        post["num_comments"] += 1
        self.comments.append(rec)
        self.expected_labels[rec["id"]] = self.check(body).value
        return rec

    def background_text(self) -> tuple[str, str]:
        r = self.rng.random()
        title = _sentence(self.rng, self.rng.randint(3, 6))
        if r < 0.06:
            return title, self.strong_text("POSITIVE", 3, self.rng.randint(4, 10))
        if r < 0.10:
            return title, self.strong_text("NEGATIVE", 3, self.rng.randint(4, 10))
        if r < 0.20:
            extra = self.rng.sample(POSITIVE, 2) + self.rng.sample(NEGATIVE, 1)
            return title, _sentence(self.rng, self.rng.randint(4, 10), extra)
        if r < 0.55:
            extra = [self.rng.choice(POSITIVE + NEGATIVE)]
            return title, _sentence(self.rng, self.rng.randint(4, 12), extra)
        return title, _sentence(self.rng, self.rng.randint(5, 14))

    def background_comment_text(self) -> str:
        r = self.rng.random()
        if r < 0.3:
            return _sentence(self.rng, self.rng.randint(3, 10), [self.rng.choice(POSITIVE + NEGATIVE)])
        return _sentence(self.rng, self.rng.randint(3, 12))

    def add_comments(self, post: dict, n: int):
        ids = []
        for _ in range(n):
            parent = self.rng.choice(ids) if ids and self.rng.random() < 0.4 else None
            ids.append(self.comment(post, self.background_comment_text(), parent=parent)["id"])


def _months(start: date, count: int) -> list[tuple[int, int]]:
    out, y, m = [], start.year, start.month
    for _ in range(count):
        out.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def _days_in(y: int, m: int) -> int:
    nxt = date(y + 1, 1, 1) if m == 12 else date(y, m + 1, 1)
    return (nxt - date(y, m, 1)).days


def _month_values(rng: random.Random, median: float, n: int) -> list[str]:
    """``n`` (odd) one-decimal values whose median is exactly ``median``;
    the rest lie within +-12% so the interquartile range stays narrow.
    """
    m = Decimal(f"{median:.1f}")
    half = n // 2
    vals = [m]
    for sign in (-1, 1):
        for _ in range(half):
            frac = Decimal(rng.randint(5, 120)) / 1000
            v = (m * (1 + sign * frac)).quantize(Decimal("0.1"))
            if v == m:
                v = m + sign * Decimal("0.1")
            vals.append(v)
    rng.shuffle(vals)
    return [str(v) for v in vals]


def generate_fixture(spec: FixtureSpec, seed: int, out_dir: str | Path,
                     lexicon: Lexicon | None = None, tau: float = DEFAULT_THRESHOLD) -> dict:
    """Write posts.jsonl, comments.jsonl, ocr/*.json, keywords.txt, launches.csv,
    users.csv, config.json and truth.json under ``out_dir``; returns the truth.
    """
    out = Path(out_dir)
    g = _Gen(spec, seed, lexicon or default_lexicon(), tau)
    rng = g.rng
    for pk in spec.peaks:
        if pk.polarity not in ("POSITIVE", "NEGATIVE"):
            raise SpecInfeasible(f"bad polarity {pk.polarity!r}")
        g.strong_text(pk.polarity, pk.hits, 0)  # feasibility check before any output

    n_days = (g.end - g.start).days + 1
    days = [g.start + timedelta(days=i) for i in range(n_days)]
    by_day: dict[date, list[dict]] = defaultdict(list)

    # background posts and their comments
    for _ in range(spec.background_posts):
        day = rng.choice(days)
        title, body = g.background_text()
        p = g.post(day, title, body)
        by_day[day].append(p)
        n = min(int(rng.expovariate(1 / spec.comments_per_post)), 60)
        g.add_comments(p, n)

    # planted sentiment peaks
    for pk in spec.peaks:
        day = date.fromisoformat(pk.date)
        for _ in range(pk.count):
            body = g.strong_text(pk.polarity, pk.hits, rng.randint(1, 4),
                                 lead=(pk.term, pk.term, *pk.co_terms))
            second = pk.co_terms[0] if pk.co_terms else rng.choice(NEUTRAL)
            p = g.post(day, f"{pk.term} {second}", body)
            by_day[day].append(p)
            for _ in range(rng.randint(1, 3)):
                g.comment(p, _sentence(rng, rng.randint(2, 6), [pk.term]),
                          ts=_ts(day, rng, 73000, 86000))

    # planted outages: negative keyword-heavy comments under a few posts of the day
    outage_days = {date.fromisoformat(o.date) for o in spec.outages}
    for o in spec.outages:
        day = date.fromisoformat(o.date)
        hosts = [g.post(day, f"{rng.choice(OUTAGE_TERMS)} {rng.choice(NEUTRAL)}",
                        _sentence(rng, rng.randint(3, 8)), ts=_ts(day, rng, 0, 40000))
                 for _ in range(3)]
        for i in range(o.items):
            neg = rng.sample(NEGATIVE, 2)
            if o.hits_per_item >= 2:
                body = f"{neg[0]} {neg[1]} {rng.choice(OUTAGE_TERMS)} again no service " \
                       + " ".join(_words(rng, 2))
            else:
                body = f"{neg[0]} {neg[1]} {rng.choice(OUTAGE_TERMS)} " + " ".join(_words(rng, 3))
            g.check(body, negative_lean=True)
            g.comment(hosts[i % 3], body, ts=_ts(day, rng, 40001, 86399))
        # keyword chatter that must not count: positive or neutral
        for host in hosts:
            g.comment(host, f"{rng.choice(OUTAGE_TERMS)} resolved love it great",
                      ts=_ts(day, rng, 40001, 86399))
            g.comment(host, f"dish down {' '.join(_words(rng, 3))}", ts=_ts(day, rng, 40001, 86399))

    # quiet-day keyword noise: at most two single-hit negative items per day
    quiet_hits: dict[str, int] = {}
    for day in days:
        if day in outage_days or not by_day[day]:
            continue
        k = rng.choice((0, 0, 1, 1, 2))
        for _ in range(k):
            host = rng.choice(by_day[day])
            body = f"{rng.choice(NEGATIVE)} {rng.choice(OUTAGE_TERMS)} " + " ".join(_words(rng, 3))
            g.check(body, negative_lean=True)
            lo = max(0, host["created_utc"] - int(datetime.combine(day, time(0), tzinfo=timezone.utc).timestamp()))
            g.comment(host, body, ts=_ts(day, rng, lo, 86399))
        if k:
            quiet_hits[day.isoformat()] = k
        if rng.random() < 0.2:
            host = rng.choice(by_day[day])
            g.comment(host, f"{rng.choice(OUTAGE_TERMS)} fixed quickly great support love",
                      ts=_ts(day, rng, 86000, 86399))

    # popular post with planted top terms
    popular_truth = None
    if spec.popular is not None:
        pp = spec.popular
        day = date.fromisoformat(pp.date)
        uni, bi = pp.unigram, pp.bigram
        bi_words = bi.split()
        post = g.post(day, f"{bi} while camping", f"{bi} on my dish love it great news",
                      upvotes=pp.upvotes, ts=_ts(day, rng, 0, 3600))
        n_bi = int(pp.comments * 0.45)
        n_uni = int(pp.comments * 0.3)
        ids = []
        for i in range(pp.comments):
            if i < n_bi:
                body = f"{bi} {' '.join(_words(rng, 3))} great"
            elif i < n_bi + n_uni:
                body = f"{uni} {' '.join(_words(rng, 3))} {rng.choice(POSITIVE)}"
            else:
                body = _sentence(rng, rng.randint(3, 8))
            parent = rng.choice(ids) if ids and rng.random() < 0.3 else None
            ids.append(g.comment(post, body, ts=post["created_utc"] + 60 * (i + 1), parent=parent)["id"])
        if bi_words[0] != uni:
            raise SpecInfeasible("planted bigram must start with the planted unigram")
        popular_truth = {"id": post["id"], "month": pp.date[:7], "unigram": uni, "bigram": bi}

    # speed-test posts with OCR documents
    ocr_dir = out / "ocr"
    ocr_dir.mkdir(parents=True, exist_ok=True)
    months = _months(g.start, len(spec.medians))
    truth_medians, truth_pos, truth_counts = {}, {}, {}
    docs = []
    for mi, ((y, m), med) in enumerate(zip(months, spec.medians)):
        month = f"{y:04d}-{m:02d}"
        n_simple, n_table = spec.simple_docs_per_month, spec.table_docs_per_month
        n_reports = n_simple + n_table * spec.table_rows
        if n_reports % 2 == 0:
            raise SpecInfeasible("reports per month must be odd for an exact planted median")
        values = _month_values(rng, med, n_reports)
        sp, sn = spec.pos_plan[mi] if mi < len(spec.pos_plan) else (0, 0)
        n_posts = n_simple + n_table
        if sp + sn > n_posts:
            raise SpecInfeasible(f"{month}: {sp + sn} strong posts but only {n_posts} speed-test posts")
        labels = ["POSITIVE"] * sp + ["NEGATIVE"] * sn + [None] * (n_posts - sp - sn)
        rng.shuffle(labels)
        dim = _days_in(y, m)
        vi = 0
        counted = {"STRONG_POS": 0, "STRONG_NEG": 0}
        for k in range(n_posts):
            is_table = k >= n_simple
            shot_day = date(y, m, rng.randint(1, dim))
            shot = datetime.combine(shot_day, time(rng.randint(0, 23), rng.randint(0, 59)))
            has_ts = is_table or rng.random() < 0.8
            post_day = shot_day
            if has_ts and not is_table and shot_day.day == dim and mi + 1 < len(months):
                post_day = shot_day + timedelta(days=1)  # shared the next morning
            label = labels[k]
            lead = ("starlink", "speed", "test")
            if label:
                body = g.strong_text(label, 3, rng.randint(1, 4), lead=lead)
            else:
                body = _sentence(rng, rng.randint(2, 6), lead=lead)
            post = g.post(post_day, f"speed test {rng.choice(NEUTRAL)}", body,
                          ts=_ts(post_day, rng, 0, 3600 if post_day != shot_day else 86399),
                          media_refs=[])
            if post_day.strftime("%Y-%m") == month:
                lab = g.expected_labels[post["id"]]
                if lab in counted:
                    counted[lab] += 1
            else:
                nxt = post_day.strftime("%Y-%m")
                truth_pos.setdefault(nxt, {"STRONG_POS": 0, "STRONG_NEG": 0})
                lab = g.expected_labels[post["id"]]
                if lab in truth_pos[nxt]:
                    truth_pos[nxt][lab] += 1
            post["media_refs"] = [f"{post['id']}.png"]
            if is_table:
                rows = []
                for _ in range(spec.table_rows):
                    row_day = date(y, m, rng.randint(1, dim))
                    rows.append(PlantedReport(download=values[vi], upload=f"{rng.uniform(5, 25):.1f}",
                                              latency=str(rng.randint(25, 70)),
                                              timestamp=datetime.combine(row_day, time(12, 0))))
                    vi += 1
                doc = render_table(post["id"], rows, rng, jitter=0.1)
            else:
                text, unit = values[vi], "Mbps"
                r = rng.random()
                if r < 0.08:
                    text, unit = str(Decimal(text) / 1000), "Gbps"
                elif r < 0.13:
                    text, unit = str((Decimal(text) * 1000).quantize(Decimal(1))), "Kbps"
                rep = PlantedReport(download=text, download_unit=unit,
                                    upload=f"{rng.uniform(5, 25):.1f}", latency=str(rng.randint(25, 70)),
                                    jitter=str(rng.randint(2, 30)) if rng.random() < 0.5 else None,
                                    timestamp=shot if has_ts else None, provider="Starlink",
                                    server=rng.choice(["Seattle, WA", "Denver, CO", "Chicago, IL"]))
                vi += 1
                doc = render_simple(post["id"], rep, rng, jitter=0.1)
            docs.append(doc)
        truth_medians[month] = float(Decimal(f"{med:.1f}"))
        truth_counts[month] = n_reports
        cur = truth_pos.setdefault(month, {"STRONG_POS": 0, "STRONG_NEG": 0})
        cur["STRONG_POS"] += counted["STRONG_POS"]
        cur["STRONG_NEG"] += counted["STRONG_NEG"]

    # implausible or off-network screenshots the filter must drop
    for j in range(spec.junk_docs):
        y, m = months[j % len(months)]
        day = date(y, m, rng.randint(1, _days_in(y, m)))
        if j % 2:
            post = g.post(day, "fiber speed test", "fiber speed test result " + " ".join(_words(rng, 3)))
            rep = PlantedReport(download=f"{rng.uniform(200, 900):.1f}", upload="50.0", latency="9",
                                provider="FiberCo", timestamp=datetime.combine(day, time(9, 0)))
        else:
            post = g.post(day, "starlink speed test weird", "starlink speed test " + " ".join(_words(rng, 3)))
            rep = PlantedReport(download=rng.choice(["0.05", "3500.0", "4800.0"]), upload="10.0",
                                latency="40", provider="Starlink",
                                timestamp=datetime.combine(day, time(9, 0)))
        post["media_refs"] = [f"{post['id']}.png"]
        docs.append(render_simple(post["id"], rep, rng, jitter=0.1))

    # records the cleaner must drop, orphans the thread builder must keep
    host = rng.choice(g.posts) if g.posts else g.post(g.start, "placeholder dish", "")
    for sentinel in ("[deleted]", "[removed]"):
        g.n_post += 1
        g.posts.append({"id": f"p{g.n_post:05d}", "created_utc": host["created_utc"], "title": "x",
                        "selftext": sentinel, "score": 1, "num_comments": 0, "author": "u0"})
        g.comment(host, sentinel)
    g.comment(host, "orphan reply dish", parent="cmissing")

    posts = sorted(g.posts, key=lambda r: (r["created_utc"], r["id"]))
    comments = sorted(g.comments, key=lambda r: (r["created_utc"], r["id"]))
    write_jsonl(out / "posts.jsonl", posts)
    write_jsonl(out / "comments.jsonl", comments)
    for doc in docs:
        (ocr_dir / f"{doc.source_id}.json").write_text(
            json.dumps(doc.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    (out / "keywords.txt").write_text("# curated outage keywords\n" + "\n".join(KEYWORDS) + "\n",
                                      encoding="utf-8")
    (out / "launches.csv").write_text(
        "month,count\n" + "".join(f"{k},{v}\n" for k, v in sorted(spec.launches.items())), encoding="utf-8")
    (out / "users.csv").write_text(
        "date,count\n" + "".join(f"{d},{c}\n" for d, c in spec.users), encoding="utf-8")
    config = {
        "posts": "posts.jsonl",
        "comments": "comments.jsonl",
        "window": {"start": spec.start, "end": spec.end},
        "keywords": "keywords.txt",
        "launches": "launches.csv",
        "users": "users.csv",
        "ocr_dir": "ocr",
        "seed": seed,
    }
    write_json(out / "config.json", config)

    truth = {
        "seed": seed,
        "posts": len(posts),
        "comments": len(comments),
        "ocr_docs": len(docs),
        "peaks": [{"date": p.date, "polarity": p.polarity} for p in spec.peaks],
        "peak_terms": {p.date: p.term for p in spec.peaks},
        "peak_keywords": {p.date: [p.term, *p.co_terms] for p in spec.peaks if p.co_terms},
        "outage_days": sorted(o.date for o in spec.outages),
        "quiet_keyword_days": quiet_hits,
        "popular": popular_truth,
        "medians": truth_medians,
        "report_counts": truth_counts,
        "pos_counts": {k: truth_pos[k] for k in sorted(truth_pos)},
        "expected_labels": {k: g.expected_labels[k] for k in sorted(g.expected_labels)},
    }
    write_json(out / "truth.json", truth)
    return truth
