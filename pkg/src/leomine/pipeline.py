"""Run configuration and the stages behind each CLI command.

Every stage is a pure function of the config and the input files, so a
command run alone writes the same bytes as the same command inside
``report``.
"""
from __future__ import annotations

import json
import platform
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from datetime import date, datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Any

from . import __version__, corpus, outage, peaks, popularity, sentiment, speedtest, textmine, trends
from ._io import file_hash, write_json, write_jsonl
from ._validation import check_threshold

COMMANDS = ("ingest", "sentiment", "peaks", "outages", "popular", "speedtest", "trends", "report")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Thresholds:
    tau: float = sentiment.DEFAULT_THRESHOLD
    peak_k: int = 3
    peak_separation_days: int = 2
    word_cloud_k: int = 10
    spike_window: int = 28
    spike_z: float = 3.0
    spike_min_count: int = 5
    outage_strong_only: bool = False
    percentile: float = 99.0
    topic_k: int = 10
    fractions: tuple[float, ...] = trends.DEFAULT_FRACTIONS
    download_mbps: tuple[float, float] = (0.1, 2000.0)
    upload_mbps: tuple[float, float] = (0.1, 500.0)
    latency_ms: tuple[float, float] = (1.0, 5000.0)
    provider_filter: str | None = "starlink"
    include_comments: bool = False


@dataclass
class ProviderChoice:
    kind: str = "lexicon"  # lexicon | replay | remote
    lexicon: str | None = None
    fixture_dir: str | None = None
    endpoint: str | None = None
    credential_env: str | None = None
    cache_dir: str | None = None
    max_rps: float = 5.0


@dataclass
class RunConfig:
    posts: Path
    comments: Path
    start: date
    end: date
    out: Path = Path("out")
    seed: int = 0
    stopwords: Path | None = None
    keywords: Path | None = None
    launches: Path | None = None
    users: Path | None = None
    ocr_dir: Path | None = None
    sentiment: ProviderChoice = field(default_factory=ProviderChoice)
    ocr: ProviderChoice = field(default_factory=lambda: ProviderChoice(kind="fixture"))
    thresholds: Thresholds = field(default_factory=Thresholds)

    def snapshot(self) -> dict:
        def plain(v):
            if isinstance(v, Path):
                return str(v)
            if isinstance(v, date):
                return v.isoformat()
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [plain(x) for x in v]
            return v
        return plain(asdict(self))

    def input_files(self) -> dict[str, Path]:
        files = {name: getattr(self, name) for name in
                 ("posts", "comments", "stopwords", "keywords", "launches", "users")}
        if self.sentiment.lexicon:
            files["lexicon"] = Path(self.sentiment.lexicon)
        return {k: v for k, v in files.items() if v is not None}


def _date(value: Any, name: str) -> date:
    try:
        return value if isinstance(value, date) else date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(name, f"not an ISO date: {value!r}") from None


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(name, "must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown field")
    return cls(**data)


def config_from_dict(data: dict, base: Path = Path("."), overrides: dict | None = None) -> RunConfig:
    """Build and validate a :class:`RunConfig`; relative paths resolve against ``base``."""
    data = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}

    def path(name, required=False):
        v = data.get(name)
        if v is None:
            if required:
                raise ConfigError(name, "required")
            return None
        p = Path(v)
        return p if p.is_absolute() else base / p

    window = data.get("window") or {}
    thresholds = dict(data.get("thresholds") or {})
    for key in ("fractions", "download_mbps", "upload_mbps", "latency_ms"):
        if key in thresholds:
            thresholds[key] = tuple(thresholds[key])
    sent = dict(data.get("sentiment") or {})
    ocr = {"kind": "fixture", **(data.get("ocr") or {})}
    for section in (sent, ocr):
        for key in ("lexicon", "fixture_dir", "cache_dir"):
            if section.get(key) and not Path(section[key]).is_absolute():
                section[key] = str(base / section[key])
    try:
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError):
        raise ConfigError("seed", "must be an integer") from None
    cfg = RunConfig(
        posts=path("posts", True),
        comments=path("comments", True),
        start=_date(window.get("start"), "window.start"),
        end=_date(window.get("end"), "window.end"),
        out=path("out") or base / "out",
        seed=seed,
        stopwords=path("stopwords"),
        keywords=path("keywords"),
        launches=path("launches"),
        users=path("users"),
        ocr_dir=path("ocr_dir"),
        sentiment=_section(ProviderChoice, sent, "sentiment"),
        ocr=_section(ProviderChoice, ocr, "ocr"),
        thresholds=_section(Thresholds, thresholds, "thresholds"),
    )
    validate(cfg)
    return cfg


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config", f"no such file: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    return config_from_dict(data, p.parent, overrides)


def validate(cfg: RunConfig) -> None:
    if not cfg.start < cfg.end:
        raise ConfigError("window", f"start {cfg.start} must precede end {cfg.end}")
    try:
        check_threshold(cfg.thresholds.tau)
    except sentiment.InvalidThreshold as exc:
        raise ConfigError("thresholds.tau", str(exc)) from None
    for name, p in cfg.input_files().items():
        if not Path(p).is_file():
            raise ConfigError(name, f"no such file: {p}")
    if cfg.ocr.kind == "fixture" and cfg.ocr_dir is not None and not cfg.ocr_dir.is_dir():
        raise ConfigError("ocr_dir", f"no such directory: {cfg.ocr_dir}")
    if cfg.sentiment.kind not in ("lexicon", "replay", "remote"):
        raise ConfigError("sentiment.kind", f"unknown provider {cfg.sentiment.kind!r}")
    if cfg.ocr.kind not in ("fixture", "replay", "remote"):
        raise ConfigError("ocr.kind", f"unknown provider {cfg.ocr.kind!r}")
    for section, name in ((cfg.sentiment, "sentiment"), (cfg.ocr, "ocr")):
        if section.kind == "replay" and not section.fixture_dir:
            raise ConfigError(f"{name}.fixture_dir", "required for the replay provider")
        if section.kind == "remote" and not (section.endpoint and section.credential_env):
            raise ConfigError(f"{name}.endpoint", "remote provider needs endpoint and credential_env")
    t = cfg.thresholds
    if t.peak_k < 1:
        raise ConfigError("thresholds.peak_k", "must be >= 1")
    if not 0 < t.percentile <= 100:
        raise ConfigError("thresholds.percentile", "must be in (0, 100]")


# -- stages ------------------------------------------------------------------

@dataclass
class StageResult:
    artifacts: list[Path] = field(default_factory=list)
    errors: dict[Path, int] = field(default_factory=dict)  # sidecar path -> error count


def _error_record(**kw) -> dict:
    return {k: v for k, v in kw.items() if v is not None}


class Pipeline:
    """Lazily computed stages over one config; each command writes its artifacts."""

    def __init__(self, cfg: RunConfig, sentiment_provider=None, ocr_provider=None):
        self.cfg = cfg
        self._sentiment_provider = sentiment_provider
        self._ocr_provider = ocr_provider

    # inputs

    @cached_property
    def stopwords(self) -> frozenset[str]:
        if self.cfg.stopwords:
            return textmine.load_stopwords(self.cfg.stopwords)
        return textmine.default_stopwords()

    @cached_property
    def loaded(self):
        window = (self.cfg.start, self.cfg.end)
        posts, post_errors = corpus.load_posts(self.cfg.posts, window)
        comments, comment_errors = corpus.load_comments(self.cfg.comments, window)
        return posts, comments, post_errors, comment_errors

    @cached_property
    def cleaned(self) -> corpus.CleanResult:
        posts, comments, _, _ = self.loaded
        return corpus.clean(posts, comments)

    @cached_property
    def threads(self) -> corpus.ThreadIndex:
        return corpus.build_threads(self.cleaned.posts, self.cleaned.comments)

    # sentiment

    def _make_sentiment_provider(self):
        if self._sentiment_provider is not None:
            return self._sentiment_provider
        choice = self.cfg.sentiment
        if choice.kind == "lexicon":
            lex = sentiment.load_lexicon(choice.lexicon) if choice.lexicon else sentiment.default_lexicon()
            return sentiment.LexiconProvider(lex)
        from . import clients
        if choice.kind == "replay":
            return clients.ReplayProvider(choice.fixture_dir)
        return clients.RemoteSentimentClient(clients.ProviderConfig(
            endpoint=choice.endpoint, credential_env=choice.credential_env,
            cache_dir=choice.cache_dir, max_rps=choice.max_rps))

    @cached_property
    def scored(self) -> tuple[dict[str, sentiment.SentimentScore], list[dict]]:
        items = [*self.cleaned.posts, *self.cleaned.comments]
        batch = sentiment.score_batch([i.text for i in items], self._make_sentiment_provider())
        scores = {item.id: s for item, s in zip(items, batch.scores) if s is not None}
        errors = [_error_record(stage="sentiment", id=items[e.index].id, reason=e.reason)
                  for e in batch.errors]
        return scores, errors

    @property
    def scores(self) -> dict[str, sentiment.SentimentScore]:
        return self.scored[0]

    def labels(self) -> dict[str, sentiment.StrongLabel]:
        tau = self.cfg.thresholds.tau
        return {k: sentiment.classify_strong(s, tau) for k, s in self.scores.items()}

    # peaks

    @cached_property
    def daily(self) -> peaks.DailySeries:
        labels = self.labels()
        units = list(self.cleaned.posts)
        if self.cfg.thresholds.include_comments:
            units += self.cleaned.comments
        items = [peaks.ScoredItem(u.id, u.created_at, labels[u.id]) for u in units if u.id in labels]
        return peaks.daily_strong_counts(items, self.cfg.start, self.cfg.end)

    @cached_property
    def peaks(self) -> list[peaks.Peak]:
        t = self.cfg.thresholds
        found = peaks.top_peaks(self.daily, t.peak_k, t.peak_separation_days)
        day_texts: dict[date, list[str]] = defaultdict(list)
        wanted = {p.date for p in found}
        for unit in [*self.cleaned.posts, *self.cleaned.comments]:
            d = corpus.utc_date(unit.created_at)
            if d in wanted:
                day_texts[d].append(unit.text)
        return peaks.annotate_peaks(found, day_texts, self.stopwords, t.word_cloud_k)

    # outages

    @cached_property
    def library(self) -> outage.KeywordLibrary:
        if self.cfg.keywords is None:
            raise ConfigError("keywords", "required for outage detection")
        return outage.load_library(self.cfg.keywords, self.stopwords)

    @cached_property
    def outages(self) -> outage.OutageSeries:
        t = self.cfg.thresholds
        qualified = outage.qualify_threads(self.threads, self.library, self.scores, self.stopwords,
                                           t.outage_strong_only, t.tau)
        series = outage.keyword_day_series(qualified, self.cfg.start, self.cfg.end)
        return outage.flag_spikes(series, t.spike_window, t.spike_z, t.spike_min_count)

    # popularity

    @cached_property
    def popular(self) -> dict:
        t = self.cfg.thresholds
        by_id = {th.root.id: th for th in self.threads}
        months = []
        for mp in popularity.popular_by_month(self.cleaned.posts, t.percentile):
            reports = [popularity.topic_report(by_id[pid].root, by_id[pid], self.stopwords,
                                               self.scores, t.topic_k, t.tau).to_dict()
                       for pid in mp.popular]
            months.append({"month": mp.month, "posts": mp.total_posts,
                           "upvote_threshold": mp.p99_upvotes,
                           "comment_threshold": mp.p99_comments, "popular": reports})
        return {"percentile": t.percentile, "months": months}

    # speed tests

    def _documents(self) -> tuple[list[speedtest.OcrDocument], list[dict]]:
        docs, errors = [], []
        if self.cfg.ocr.kind == "fixture" and self._ocr_provider is None:
            if self.cfg.ocr_dir is None:
                return docs, errors
            for p in sorted(self.cfg.ocr_dir.glob("*.json")):
                try:
                    docs.append(speedtest.load_document(p))
                except (ValueError, KeyError, TypeError) as exc:
                    errors.append(_error_record(stage="ocr", id=p.stem, reason=str(exc)))
            return docs, errors
        from . import clients
        provider = self._ocr_provider
        if provider is None:
            choice = self.cfg.ocr
            if choice.kind == "replay":
                provider = clients.ReplayProvider(choice.fixture_dir)
            else:
                provider = clients.RemoteOcrClient(clients.ProviderConfig(
                    endpoint=choice.endpoint, credential_env=choice.credential_env,
                    cache_dir=choice.cache_dir, max_rps=choice.max_rps))
        media_root = self.cfg.ocr_dir or self.cfg.posts.parent
        for post in self.cleaned.posts:
            for ref in post.media_refs:
                target = ref if ref.startswith(("http://", "https://")) else str(media_root / ref)
                try:
                    docs.append(provider.ocr(target, post.id))
                except clients.ClientError as exc:
                    errors.append(_error_record(stage="ocr", id=post.id, ref=ref,
                                                kind=type(exc).__name__, reason=str(exc)))
        return docs, errors

    @cached_property
    def speedtests(self):
        t = self.cfg.thresholds
        docs, errors = self._documents()
        reports, failures = speedtest.extract_many(docs)
        errors += [_error_record(stage="extract", id=sid, kind=type(exc).__name__, reason=str(exc))
                   for sid, exc in failures]
        bounds = speedtest.PlausibilityBounds(t.download_mbps, t.upload_mbps, t.latency_ms)
        texts = {p.id: p.text for p in self.cleaned.posts}
        kept, rejected = speedtest.filter_false_positives(reports, bounds, t.provider_filter, texts)
        return kept, rejected, errors

    # trends

    @cached_property
    def trend(self) -> list[trends.MonthlyPoint]:
        t = self.cfg.thresholds
        kept, _, _ = self.speedtests
        created = {p.id: p.created_at for p in self.cleaned.posts}
        series = trends.monthly_median_series(kept, created, (self.cfg.start, self.cfg.end),
                                              t.fractions, self.cfg.seed)
        if self.cfg.launches or self.cfg.users:
            series = trends.join_annotations(series, trends.load_annotations(self.cfg.launches,
                                                                             self.cfg.users))
        return trends.attach_pos(series, self.speedtest_pos())

    def speedtest_pos(self) -> dict[str, sentiment.PosScore]:
        """Pos per month over posts that contributed at least one kept report."""
        kept, _, _ = self.speedtests
        labels = self.labels()
        by_month: dict[str, list[sentiment.StrongLabel]] = defaultdict(list)
        posts = {p.id: p for p in self.cleaned.posts}
        for pid in sorted({r.source_id for r in kept}):
            post = posts.get(pid)
            if post is not None and pid in labels:
                by_month[popularity.month_key(post.created_at)].append(labels[pid])
        return {m: sentiment.pos_score(v, m) for m, v in by_month.items()}


# -- writers -----------------------------------------------------------------

def _write_errors(path: Path, errors: list[dict], out: StageResult) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(path, errors)
    out.artifacts.append(path)
    out.errors[path] = len(errors)


def write_ingest(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "ingest"
    d.mkdir(parents=True, exist_ok=True)
    cleaned = pipe.cleaned
    (d / "posts.clean.jsonl").write_text(corpus.serialize_posts(cleaned.posts), encoding="utf-8")
    (d / "comments.clean.jsonl").write_text(corpus.serialize_comments(cleaned.comments), encoding="utf-8")
    (d / "weekly_activity.csv").write_text(
        corpus.weekly_activity_csv(corpus.weekly_activity(cleaned.posts, (pipe.cfg.start, pipe.cfg.end))),
        encoding="utf-8")
    summary = {**pipe.threads.summary(), "posts": len(cleaned.posts), "comments": len(cleaned.comments),
               "dropped_posts": cleaned.dropped_posts, "dropped_comments": cleaned.dropped_comments,
               "negative_score_posts": len(cleaned.negative_score_ids)}
    write_json(d / "summary.json", summary)
    res.artifacts += [d / n for n in ("posts.clean.jsonl", "comments.clean.jsonl",
                                      "weekly_activity.csv", "summary.json")]
    _, _, post_errors, comment_errors = pipe.loaded
    errors = [_error_record(stage="ingest", file=src, line=e.line, kind=e.kind, reason=e.reason)
              for src, errs in (("posts", post_errors), ("comments", comment_errors)) for e in errs]
    _write_errors(d / "errors.jsonl", errors, res)
    return res


def write_sentiment(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "sentiment"
    d.mkdir(parents=True, exist_ok=True)
    cache = sentiment.ScoreCache()
    texts = {i.id: i.text for i in [*pipe.cleaned.posts, *pipe.cleaned.comments]}
    for item_id, score in pipe.scores.items():
        cache.put(item_id, texts[item_id], score)
    cache.dump(d / "scores.jsonl")
    res.artifacts.append(d / "scores.jsonl")
    _write_errors(d / "errors.jsonl", pipe.scored[1], res)
    return res


def write_peaks(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "peaks"
    d.mkdir(parents=True, exist_ok=True)
    (d / "daily_series.csv").write_text(pipe.daily.to_csv(), encoding="utf-8")
    write_json(d / "peaks.json", [p.to_dict() for p in pipe.peaks])
    res.artifacts += [d / "daily_series.csv", d / "peaks.json"]
    _write_errors(out / "sentiment" / "errors.jsonl", pipe.scored[1], res)
    return res


def write_outages(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "outages"
    d.mkdir(parents=True, exist_ok=True)
    series = pipe.outages
    (d / "outage_series.csv").write_text(series.to_csv(), encoding="utf-8")
    write_json(d / "flagged.json", [x.isoformat() for x in series.flagged_dates()])
    res.artifacts += [d / "outage_series.csv", d / "flagged.json"]
    _write_errors(out / "sentiment" / "errors.jsonl", pipe.scored[1], res)
    return res


def write_popular(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "popular"
    d.mkdir(parents=True, exist_ok=True)
    write_json(d / "popular.json", pipe.popular)
    res.artifacts.append(d / "popular.json")
    _write_errors(out / "sentiment" / "errors.jsonl", pipe.scored[1], res)
    return res


def write_speedtest(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "speedtest"
    d.mkdir(parents=True, exist_ok=True)
    kept, rejected, errors = pipe.speedtests
    (d / "reports.csv").write_text(speedtest.reports_csv(kept), encoding="utf-8")
    write_jsonl(d / "rejected.jsonl", [{"source_id": r.source_id, "table_row": r.table_row,
                                        "download_mbps": r.download_mbps, "reason": why}
                                       for r, why in rejected])
    res.artifacts += [d / "reports.csv", d / "rejected.jsonl"]
    _write_errors(d / "errors.jsonl", errors, res)
    return res


def write_trends(pipe: Pipeline, out: Path) -> StageResult:
    res = StageResult()
    d = out / "trends"
    d.mkdir(parents=True, exist_ok=True)
    series = pipe.trend
    (d / "trends.csv").write_text(trends.trend_csv(series, pipe.cfg.thresholds.fractions), encoding="utf-8")
    (d / "trends.svg").write_text(trends.trend_svg(series), encoding="utf-8")
    res.artifacts += [d / "trends.csv", d / "trends.svg"]
    _write_errors(out / "speedtest" / "errors.jsonl", pipe.speedtests[2], res)
    return res


WRITERS = {
    "ingest": write_ingest,
    "sentiment": write_sentiment,
    "peaks": write_peaks,
    "outages": write_outages,
    "popular": write_popular,
    "speedtest": write_speedtest,
    "trends": write_trends,
}


def write_manifest(cfg: RunConfig, command: str, artifacts: list[Path], errors: int,
                   now: datetime | None = None) -> Path:
    import numpy
    import sklearn
    out = cfg.out
    manifest = {
        "command": command,
        "config": cfg.snapshot(),
        "inputs": {name: file_hash(p) for name, p in sorted(cfg.input_files().items())},
        "artifacts": {str(p.relative_to(out)): file_hash(p) for p in sorted(artifacts)},
        "errors": errors,
        "versions": {"leomine": __version__, "python": platform.python_version(),
                     "numpy": numpy.__version__, "scikit-learn": sklearn.__version__},
        "generated_at": (now or datetime.now(timezone.utc)).isoformat(timespec="seconds"),
    }
    path = out / "manifest.json"
    write_json(path, manifest)
    return path


def run(command: str, cfg: RunConfig, sentiment_provider=None, ocr_provider=None) -> int:
    """Execute ``command``; returns 0 on success, 1 when some items failed."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    pipe = Pipeline(cfg, sentiment_provider, ocr_provider)
    names = list(WRITERS) if command == "report" else [command]
    artifacts: set[Path] = set()
    sidecars: dict[Path, int] = {}
    for name in names:
        res = WRITERS[name](pipe, cfg.out)
        artifacts.update(res.artifacts)
        sidecars.update(res.errors)
    errors = sum(sidecars.values())
    write_manifest(cfg, command, sorted(artifacts), errors)
    return 1 if errors else 0


__all__ = ["COMMANDS", "ConfigError", "Pipeline", "ProviderChoice", "RunConfig", "Thresholds",
           "config_from_dict", "load_config", "run", "validate"]
