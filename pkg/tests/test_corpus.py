import io
import json
from datetime import date

from hypothesis import given, settings
from hypothesis import strategies as st

from leomine.corpus import (
    Comment, Post, build_threads, clean, load_comments, load_posts, serialize_comments,
    serialize_posts, weekly_activity, weekly_activity_csv,
)


def lines(*records):
    return io.StringIO("".join(json.dumps(r) + "\n" for r in records))


def test_load_post_maps_fields():
    posts, errors = load_posts(lines({"id": "p1", "created_utc": 1612137600, "title": "hello",
                                      "score": 5, "num_comments": 0}))
    assert errors == []
    assert len(posts) == 1
    assert posts[0].id == "p1" and posts[0].upvotes == 5 and posts[0].title == "hello"
    assert posts[0].created_at == 1612137600


def test_empty_stream():
    assert load_posts(io.StringIO("")) == ([], [])


def test_missing_timestamp_is_an_error():
    posts, errors = load_posts(lines({"id": "p1", "title": "x", "score": 1, "num_comments": 0}))
    assert posts == []
    assert [e.kind for e in errors] == ["MissingField"]
    assert errors[0].line == 1


def test_malformed_and_bad_timestamp_lines():
    stream = io.StringIO('{"id": "p1", "created_utc": "yesterday", "score": 1, "num_comments": 0}\n'
                         "not json\n")
    posts, errors = load_posts(stream)
    assert posts == []
    assert [(e.line, e.kind) for e in errors] == [(1, "BadTimestamp"), (2, "Malformed")]


def test_out_of_window_records_are_reported():
    posts, errors = load_posts(lines({"id": "p1", "created_utc": 1612137600, "score": 1, "num_comments": 0}),
                               window=(date(2022, 1, 1), date(2022, 12, 31)))
    assert posts == [] and errors[0].kind == "OutOfWindow"


def test_load_comment():
    comments, errors = load_comments(lines({"id": "c1", "parent_id": "p1", "link_id": "p1",
                                            "body": "nice", "created_utc": 1612137700}))
    assert errors == []
    assert comments[0].id == "c1" and comments[0].parent_id == "p1" and comments[0].post_id == "p1"


def test_comment_kind_prefixes_are_stripped():
    comments, _ = load_comments(lines({"id": "c1", "parent_id": "t1_c0", "link_id": "t3_p1",
                                       "body": "x", "created_utc": 1}))
    assert (comments[0].parent_id, comments[0].post_id) == ("c0", "p1")


def test_comment_without_parent():
    comments, errors = load_comments(lines({"id": "c1", "link_id": "p1", "body": "x", "created_utc": 1}))
    assert comments == [] and errors[0].kind == "MissingField"


def test_duplicate_comment_id():
    rec = {"id": "c1", "parent_id": "p1", "link_id": "p1", "body": "x", "created_utc": 1}
    comments, errors = load_comments(lines(rec, rec))
    assert len(comments) == 1
    assert [(e.line, e.kind) for e in errors] == [(2, "DuplicateId")]


def _post(pid, body="", ts=1612137600, upvotes=1, comments=0, **extra):
    return Post(pid, ts, "", body, upvotes, comments, extra=extra)


def _comment(cid, parent, post="P", ts=1612137700, body="x", **extra):
    return Comment(cid, parent, post, ts, body, 0, extra=extra)


def test_clean_drops_removed_posts():
    res = clean([_post("p1", "[deleted]"), _post("p2", "great service")], [])
    assert [p.id for p in res.posts] == ["p2"]
    assert res.posts[0].body == "great service"
    assert res.dropped_posts == 1


def test_clean_strips_author():
    res = clean([], [_comment("c1", "P", author="someone", author_flair="x", gilded=1)])
    assert res.comments[0].extra == {"gilded": 1}


def test_clean_flags_negative_scores():
    res = clean([_post("p1", upvotes=-3)], [])
    assert res.posts[0].upvotes == -3
    assert res.negative_score_ids == ["p1"]


def test_thread_depth_two():
    idx = build_threads([_post("P")], [_comment("c1", "P"), _comment("c2", "c1", ts=1612137800)])
    (t,) = idx
    assert t.depth() == 2 and t.orphan_comments == []
    assert [c.id for c in t.comments()] == ["c1", "c2"]


def test_thread_orphan():
    idx = build_threads([_post("P")], [_comment("c3", "missing")])
    assert [c.id for c in idx[0].orphan_comments] == ["c3"]
    assert idx[0].size() == 0


def test_thread_without_comments():
    idx = build_threads([_post("P")], [])
    assert idx[0].root.id == "P" and idx[0].children == [] and idx[0].depth() == 0


def test_cycle_and_unknown_post_become_orphans():
    comments = [_comment("a", "b"), _comment("b", "a"), _comment("z", "P", post="Q")]
    idx = build_threads([_post("P")], comments)
    assert sorted(c.id for c in idx[0].orphan_comments) == ["a", "b"]
    # "z" replies directly to P, so it belongs to P's tree regardless of its link id
    assert [c.id for c in idx[0].comments()] == ["z"]
    idx = build_threads([_post("P")], [_comment("y", "nowhere", post="Q")])
    assert [c.id for c in idx.global_orphans] == ["y"]


def test_weekly_activity_hand_sum():
    ts = 1612137600  # Monday 2021-02-01
    posts = [_post("a", ts=ts, upvotes=2, comments=1), _post("b", ts=ts + 86400, upvotes=3, comments=0),
             _post("c", ts=ts + 5 * 86400, upvotes=5, comments=4)]
    stats = weekly_activity(posts, (date(2021, 1, 25), date(2021, 2, 14)))
    by_week = {s.week_start: s for s in stats}
    week = by_week[date(2021, 2, 1)]
    assert (week.posts, week.upvotes, week.comments) == (3, 10, 5)
    empty = by_week[date(2021, 1, 25)]
    assert (empty.posts, empty.upvotes, empty.comments) == (0, 0, 0)
    assert weekly_activity_csv(stats).splitlines()[0] == "week_start,posts,upvotes,comments"


def test_fixture_weekly_rows_sum_to_post_count(golden_dir):
    out, _ = golden_dir
    posts, errors = load_posts(out / "posts.jsonl")
    assert errors == []
    cleaned = clean(posts, [])
    stats = weekly_activity(cleaned.posts, (date(2021, 1, 1), date(2022, 12, 31)))
    assert len(stats) == 105  # 2021-01-01 is a Friday, so the window touches 105 ISO weeks
    assert sum(s.posts for s in stats) == len(cleaned.posts)


# -- properties ----------------------------------------------------------------

text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30)
post_records = st.lists(
    st.fixed_dictionaries({
        "created_utc": st.integers(0, 2_000_000_000),
        "title": text,
        "selftext": st.one_of(text, st.sampled_from(["[deleted]", "[removed]"])),
        "score": st.integers(-50, 5000),
        "num_comments": st.integers(0, 500),
        "media_refs": st.lists(st.text(min_size=1, max_size=8), max_size=2),
        "flair": st.one_of(st.none(), text),
    }),
    max_size=25,
)


def _with_ids(records):
    return [{"id": f"p{i}", **r} for i, r in enumerate(records)]


@given(post_records)
def test_serialize_round_trip(records):
    posts, errors = load_posts(lines(*_with_ids(records)))
    assert errors == []
    again, errors = load_posts(io.StringIO(serialize_posts(posts)))
    assert errors == [] and again == posts


@given(post_records)
def test_clean_is_idempotent_and_weekly_sums(records):
    posts, _ = load_posts(lines(*_with_ids(records)))
    once = clean(posts, [])
    twice = clean(once.posts, once.comments)
    assert twice.posts == once.posts and twice.dropped_posts == 0
    assert sum(s.posts for s in weekly_activity(once.posts)) == len(once.posts)


@settings(max_examples=60)
@given(st.data())
def test_every_comment_placed_exactly_once(data):
    n_posts = data.draw(st.integers(1, 4))
    n_comments = data.draw(st.integers(0, 30))
    posts = [_post(f"P{i}") for i in range(n_posts)]
    ids = [f"c{i}" for i in range(n_comments)]
    targets = [p.id for p in posts] + ids + ["ghost"]
    comments = [
        _comment(cid, data.draw(st.sampled_from(targets)),
                 post=data.draw(st.sampled_from([p.id for p in posts] + ["Q"])),
                 ts=data.draw(st.integers(0, 100)))
        for cid in ids
    ]
    idx = build_threads(posts, comments)
    placed = [c.id for t in idx for c in t.comments()]
    placed += [c.id for t in idx for c in t.orphan_comments]
    placed += [c.id for c in idx.global_orphans]
    assert sorted(placed) == sorted(ids)
    s = idx.summary()
    assert s["tree_comments"] + s["thread_orphans"] + s["global_orphans"] == n_comments


def test_comment_serialize_round_trip():
    comments = [_comment("c1", "P", body="hi", flair="x")]
    again, errors = load_comments(io.StringIO(serialize_comments(comments)))
    assert errors == [] and again == comments
