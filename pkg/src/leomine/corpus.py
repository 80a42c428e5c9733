"""Ingest, clean and structure a newline-delimited forum dump."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from ._io import csv_text, dumps

__all__ = [
    "DEFAULT_SENTINELS",
    "ActivityStats",
    "CleanResult",
    "Comment",
    "CommentNode",
    "IngestError",
    "Post",
    "Thread",
    "ThreadIndex",
    "build_threads",
    "clean",
    "load_comments",
    "load_posts",
    "serialize_comments",
    "serialize_posts",
    "utc_date",
    "weekly_activity",
    "weekly_activity_csv",
]

DEFAULT_SENTINELS = frozenset({"[removed]", "[deleted]"})
# raw keys that identify a user; stripped by clean()
USER_KEYS = frozenset({"author", "user", "user_id", "username", "user_name"})

_KIND_PREFIX = re.compile(r"^t[0-9]_")

_POST_FIELDS = {"id", "created_utc", "title", "selftext", "score", "num_comments",
                "url", "urls", "media_refs", "removed"}
_COMMENT_FIELDS = {"id", "parent_id", "link_id", "body", "score", "created_utc", "removed"}


def utc_date(ts: int | float) -> date:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date()


@dataclass(frozen=True)
class IngestError:
    line: int
    kind: str  # MissingField | BadTimestamp | DuplicateId | Malformed | OutOfWindow
    reason: str

    def to_dict(self) -> dict:
        return {"line": self.line, "kind": self.kind, "reason": self.reason}


@dataclass(frozen=True)
class Post:
    id: str
    created_at: int
    title: str = ""
    body: str = ""
    upvotes: int = 0
    comment_count: int = 0
    urls: tuple[str, ...] = ()
    media_refs: tuple[str, ...] = ()
    removed: bool = False
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def text(self) -> str:
        """Title and body joined with a space, the unit scored for sentiment."""
        return f"{self.title} {self.body}".strip()

    @property
    def negative_score(self) -> bool:
        return self.upvotes < 0


@dataclass(frozen=True)
class Comment:
    id: str
    parent_id: str
    post_id: str
    created_at: int
    body: str = ""
    upvotes: int = 0
    removed: bool = False
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def text(self) -> str:
        return self.body

    @property
    def negative_score(self) -> bool:
        return self.upvotes < 0


class _RecordError(Exception):
    def __init__(self, kind: str, reason: str):
        super().__init__(reason)
        self.kind = kind
        self.reason = reason


def _strip_kind(ref: str) -> str:
    return _KIND_PREFIX.sub("", ref)


def _require(rec: dict, name: str):
    value = rec.get(name)
    if value is None or value == "":
        raise _RecordError("MissingField", f"missing field {name!r}")
    return value


def _timestamp(rec: dict) -> int:
    raw = _require(rec, "created_utc")
    try:
        ts = float(raw)
    except (TypeError, ValueError):
        raise _RecordError("BadTimestamp", f"created_utc not numeric: {raw!r}") from None
    if not math.isfinite(ts) or ts < 0 or ts != int(ts):
        raise _RecordError("BadTimestamp", f"created_utc not a whole non-negative second: {raw!r}")
    return int(ts)


def _int(rec: dict, name: str) -> int:
    raw = rec.get(name, 0)
    if raw is None:
        return 0
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise _RecordError("Malformed", f"{name} not an integer: {raw!r}") from None
    if value != raw and not isinstance(raw, str):
        raise _RecordError("Malformed", f"{name} not an integer: {raw!r}")
    return value


def _str_list(value) -> tuple[str, ...]:
    if value is None or value == "":
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(str(v) for v in value)


def _parse_post(rec: dict) -> Post:
    pid = str(_require(rec, "id"))
    urls = _str_list(rec.get("urls", rec.get("url")))
    return Post(
        id=pid,
        created_at=_timestamp(rec),
        title=str(rec.get("title") or ""),
        body=str(rec.get("selftext") or ""),
        upvotes=_int(rec, "score"),
        comment_count=max(0, _int(rec, "num_comments")),
        urls=urls,
        media_refs=_str_list(rec.get("media_refs")),
        removed=bool(rec.get("removed", False)),
        extra={k: v for k, v in rec.items() if k not in _POST_FIELDS},
    )


def _parse_comment(rec: dict) -> Comment:
    cid = str(_require(rec, "id"))
    parent = _strip_kind(str(_require(rec, "parent_id")))
    post = _strip_kind(str(_require(rec, "link_id")))
    return Comment(
        id=cid,
        parent_id=parent,
        post_id=post,
        created_at=_timestamp(rec),
        body=str(rec.get("body") or ""),
        upvotes=_int(rec, "score"),
        removed=bool(rec.get("removed", False)),
        extra={k: v for k, v in rec.items() if k not in _COMMENT_FIELDS},
    )


def _lines(stream: IO[str] | Iterable[str] | str | Path) -> Iterator[str]:
    if isinstance(stream, (str, Path)):
        with open(stream, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from stream


def _load(stream, parse, window):
    records, errors, seen = [], [], set()
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise _RecordError("Malformed", f"invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise _RecordError("Malformed", "record is not a JSON object")
            item = parse(rec)
            if window is not None:
                start, end = window
                if not (start <= utc_date(item.created_at) <= end):
                    raise _RecordError("OutOfWindow", f"{item.id} outside corpus window")
            if item.id in seen:
                raise _RecordError("DuplicateId", f"duplicate id {item.id!r}")
        except _RecordError as exc:
            errors.append(IngestError(lineno, exc.kind, exc.reason))
            continue
        seen.add(item.id)
        records.append(item)
    return records, errors


def load_posts(stream, window: tuple[date, date] | None = None) -> tuple[list[Post], list[IngestError]]:
    """Parse one post per line. ``stream`` is a path or an iterable of lines.

    Malformed lines become :class:`IngestError` entries carrying the 1-based
    line number; later duplicates of an id are rejected.
    """
    return _load(stream, _parse_post, window)


def load_comments(stream, window: tuple[date, date] | None = None) -> tuple[list[Comment], list[IngestError]]:
    return _load(stream, _parse_comment, window)


def _post_record(p: Post) -> dict:
    rec = dict(p.extra)
    rec.update({
        "id": p.id,
        "created_utc": p.created_at,
        "title": p.title,
        "selftext": p.body,
        "score": p.upvotes,
        "num_comments": p.comment_count,
        "urls": list(p.urls),
        "media_refs": list(p.media_refs),
    })
    if p.removed:
        rec["removed"] = True
    return rec


def _comment_record(c: Comment) -> dict:
    rec = dict(c.extra)
    rec.update({
        "id": c.id,
        "parent_id": c.parent_id,
        "link_id": c.post_id,
        "created_utc": c.created_at,
        "body": c.body,
        "score": c.upvotes,
    })
    if c.removed:
        rec["removed"] = True
    return rec


def serialize_posts(posts: Iterable[Post]) -> str:
    return "".join(dumps(_post_record(p)) + "\n" for p in posts)


def serialize_comments(comments: Iterable[Comment]) -> str:
    return "".join(dumps(_comment_record(c)) + "\n" for c in comments)


# -- cleaning ----------------------------------------------------------------

@dataclass
class CleanResult:
    """Cleaned records plus counters; unpacks as ``posts, comments``."""

    posts: list[Post]
    comments: list[Comment]
    dropped_posts: int = 0
    dropped_comments: int = 0
    negative_score_ids: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter((self.posts, self.comments))


def _strip_users(extra: dict) -> dict:
    return {k: v for k, v in extra.items()
            if k not in USER_KEYS and not k.startswith("author")}


def _is_removed(texts: Sequence[str], sentinels: frozenset[str]) -> bool:
    return any(t.strip() in sentinels for t in texts if t)


def clean(posts: Iterable[Post], comments: Iterable[Comment],
          sentinels: Iterable[str] = DEFAULT_SENTINELS) -> CleanResult:
    """Drop removed content and strip user identifiers.

    Negative upvote counts are kept but their ids are listed in
    ``negative_score_ids``.
    """
    sentinels = frozenset(sentinels)
    result = CleanResult([], [])
    for p in posts:
        if _is_removed((p.title, p.body), sentinels):
            result.dropped_posts += 1
            continue
        if p.negative_score:
            result.negative_score_ids.append(p.id)
        result.posts.append(replace(p, extra=_strip_users(p.extra)))
    for c in comments:
        if _is_removed((c.body,), sentinels):
            result.dropped_comments += 1
            continue
        if c.negative_score:
            result.negative_score_ids.append(c.id)
        result.comments.append(replace(c, extra=_strip_users(c.extra)))
    return result


# -- threads -----------------------------------------------------------------

@dataclass
class CommentNode:
    comment: Comment
    children: list["CommentNode"] = field(default_factory=list)

    def walk(self) -> Iterator[Comment]:
        yield self.comment
        for child in self.children:
            yield from child.walk()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)


@dataclass
class Thread:
    root: Post
    children: list[CommentNode] = field(default_factory=list)
    orphan_comments: list[Comment] = field(default_factory=list)

    def comments(self) -> list[Comment]:
        """Tree comments in depth-first order."""
        return [c for node in self.children for c in node.walk()]

    def depth(self) -> int:
        return max((node.depth() for node in self.children), default=0)

    def size(self) -> int:
        return sum(1 for _ in self.comments())

    def items(self) -> list[Post | Comment]:
        """Root post, tree comments and orphans: every text unit in the thread."""
        return [self.root, *self.comments(), *self.orphan_comments]


class ThreadIndex(list):
    """List of threads, one per post, plus comments no thread could claim."""

    def __init__(self, threads=(), global_orphans=()):
        super().__init__(threads)
        self.global_orphans: list[Comment] = list(global_orphans)

    def summary(self) -> dict:
        return {
            "threads": len(self),
            "tree_comments": sum(t.size() for t in self),
            "thread_orphans": sum(len(t.orphan_comments) for t in self),
            "global_orphans": len(self.global_orphans),
        }


def _order(c: Comment):
    return (c.created_at, c.id)


def build_threads(posts: Sequence[Post], comments: Sequence[Comment]) -> ThreadIndex:
    """Reconstruct one reply tree per post.

    A comment is attached only when its ancestor chain reaches a post, so the
    trees are acyclic.  Comments that cannot be attached go to the orphan list
    of the thread named by their ``post_id``, or to ``global_orphans`` if that
    post is unknown too.
    """
    post_ids = {p.id for p in posts}
    by_id = {c.id: c for c in comments}
    root_of: dict[str, str | None] = {}

    def resolve(cid: str) -> str | None:
        # walk up iteratively; memoize every visited node
        path, seen, cur = [], set(), cid
        result: str | None = None
        while True:
            if cur in root_of:
                result = root_of[cur]
                break
            if cur in seen:
                result = None  # cycle
                break
            seen.add(cur)
            path.append(cur)
            parent = by_id[cur].parent_id
            if parent in post_ids and parent not in by_id:
                result = parent
                break
            if parent not in by_id:
                result = None
                break
            cur = parent
        for node in path:
            root_of[node] = result
        return result

    threads = {p.id: Thread(root=p) for p in posts}
    nodes = {c.id: CommentNode(c) for c in comments}
    global_orphans = []
    for c in sorted(comments, key=_order):
        root = resolve(c.id)
        if root is not None:
            if c.parent_id == root:
                threads[root].children.append(nodes[c.id])
            else:
                nodes[c.parent_id].children.append(nodes[c.id])
        elif c.post_id in threads:
            threads[c.post_id].orphan_comments.append(c)
        else:
            global_orphans.append(c)
    return ThreadIndex([threads[p.id] for p in posts], global_orphans)


# -- weekly activity ---------------------------------------------------------

@dataclass(frozen=True)
class ActivityStats:
    week_start: date
    posts: int = 0
    upvotes: int = 0
    comments: int = 0


def iso_week_start(d: date) -> date:
    return d - timedelta(days=d.weekday())


def weekly_activity(posts: Iterable[Post], window: tuple[date, date] | None = None) -> list[ActivityStats]:
    """Per-ISO-week post, upvote and comment totals, zero-filled across the window."""
    posts = list(posts)
    if window is None:
        if not posts:
            return []
        days = [utc_date(p.created_at) for p in posts]
        window = (min(days), max(days))
    first, last = iso_week_start(window[0]), iso_week_start(window[1])
    rows: dict[date, list[int]] = {}
    week = first
    while week <= last:
        rows[week] = [0, 0, 0]
        week += timedelta(days=7)
    for p in posts:
        key = iso_week_start(utc_date(p.created_at))
        if key not in rows:
            continue
        acc = rows[key]
        acc[0] += 1
        acc[1] += p.upvotes
        acc[2] += p.comment_count
    return [ActivityStats(w, *v) for w, v in rows.items()]


def weekly_activity_csv(stats: Iterable[ActivityStats]) -> str:
    return csv_text(["week_start", "posts", "upvotes", "comments"],
                    ([s.week_start.isoformat(), s.posts, s.upvotes, s.comments] for s in stats))
