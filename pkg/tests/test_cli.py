import json
import shutil
from datetime import date
from pathlib import Path

import pytest

from leomine import pipeline
from leomine.cli import main
from leomine.corpus import load_posts, utc_date
from leomine.fixtures import FixtureSpec, PeakSpec, SpecInfeasible, generate_fixture

GOLDEN = Path(__file__).parent / "golden"


def artifact_bytes(out: Path) -> dict[str, bytes]:
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def test_peaks_match_golden_file(golden_dir, tmp_path):
    src, truth = golden_dir
    assert main(["peaks", "--config", str(src / "config.json"), "--out", str(tmp_path)]) == 0
    got = (tmp_path / "peaks" / "peaks.json").read_text()
    assert got == (GOLDEN / "peaks.json").read_text()
    found = [(p["date"], p["polarity"]) for p in json.loads(got)]
    assert found == [(p["date"], p["polarity"]) for p in truth["peaks"]]


def test_missing_posts_file(golden_dir, tmp_path, capsys):
    src, _ = golden_dir
    cfg = json.loads((src / "config.json").read_text())
    cfg["posts"] = str(tmp_path / "nope.jsonl")
    # relative paths resolve against the config's own directory
    for key in ("comments", "keywords", "launches", "users", "ocr_dir"):
        cfg[key] = str(src / cfg[key])
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["ingest", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 2
    assert "posts: no such file" in capsys.readouterr().err
    with pytest.raises(pipeline.ConfigError) as info:
        pipeline.load_config(tmp_path / "c.json")
    assert info.value.field == "posts"


def test_missing_config_and_bad_fields(tmp_path, golden_dir):
    assert main(["report", "--config", str(tmp_path / "none.json")]) == 2
    src, _ = golden_dir
    base = json.loads((src / "config.json").read_text())
    for patch, field in [({"window": {"start": "2022-01-01", "end": "2021-01-01"}}, "window"),
                         ({"thresholds": {"tau": 0.5}}, "thresholds.tau"),
                         ({"thresholds": {"bogus": 1}}, "thresholds.bogus"),
                         ({"sentiment": {"kind": "magic"}}, "sentiment.kind")]:
        with pytest.raises(pipeline.ConfigError) as info:
            pipeline.config_from_dict({**base, **patch}, src)
        assert info.value.field == field


def test_report_is_deterministic_and_composed(golden_dir, tmp_path):
    src, _ = golden_dir
    cfg = str(src / "config.json")
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["report", "--config", cfg, "--out", str(a)]) == 0
    assert main(["report", "--config", cfg, "--out", str(b)]) == 0
    assert artifact_bytes(a) == artifact_bytes(b)
    for command in pipeline.COMMANDS[:-1]:
        assert main([command, "--config", cfg, "--out", str(c)]) == 0
    assert artifact_bytes(c) == artifact_bytes(a)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["command"] == "report" and manifest["errors"] == 0
    assert set(manifest["inputs"]) >= {"posts", "comments", "keywords"}
    assert "trends/trends.csv" in manifest["artifacts"]
    assert {"leomine", "python", "numpy"} <= set(manifest["versions"])


def test_partial_failure_writes_sidecar(golden_dir, tmp_path):
    src, _ = golden_dir
    work = tmp_path / "fx"
    shutil.copytree(src, work)
    (work / "ocr" / "broken.json").write_text(json.dumps({"source_id": "broken", "width": 10,
                                                          "height": 10, "tokens": []}))
    assert main(["speedtest", "--config", str(work / "config.json"), "--out", str(tmp_path / "o")]) == 1
    errors = [json.loads(x) for x in (tmp_path / "o" / "speedtest" / "errors.jsonl").read_text().splitlines()]
    assert [(e["id"], e["kind"]) for e in errors] == [("broken", "NoTokens")]


def test_overrides(golden_dir, tmp_path):
    src, _ = golden_dir
    out = tmp_path / "o"
    assert main(["peaks", "--config", str(src / "config.json"), "--out", str(out), "--peak-k", "1"]) == 0
    assert len(json.loads((out / "peaks" / "peaks.json").read_text())) == 1
    assert main(["peaks", "--config", str(src / "config.json"), "--out", str(out), "--tau", "0.4"]) == 2


# -- fixture generator -------------------------------------------------------------

def small_spec(**kw):
    base = dict(start="2021-01-01", end="2021-01-20", background_posts=0, comments_per_post=0,
                medians=[], junk_docs=0)
    base.update(kw)
    return FixtureSpec(**base)


def test_generated_negative_peak(tmp_path):
    spec = small_spec(peaks=[PeakSpec("2021-01-11", "NEGATIVE", 9, "delay")])
    generate_fixture(spec, 1, tmp_path)
    cfg = pipeline.load_config(tmp_path / "config.json", {"out": str(tmp_path / "o")})
    series = pipeline.Pipeline(cfg).daily
    assert series.neg_counts[10] == 9
    assert sum(series.neg_counts) == 9


def test_generated_medians(tmp_path):
    spec = small_spec(end="2021-03-31", medians=[100, 80, 60], pos_plan=[(1, 0), (0, 0), (0, 2)])
    truth = generate_fixture(spec, 2, tmp_path)
    cfg = pipeline.load_config(tmp_path / "config.json", {"out": str(tmp_path / "o")})
    trend = pipeline.Pipeline(cfg).trend
    assert [p.median_download for p in trend] == [100.0, 80.0, 60.0]
    assert [p.pos_value for p in trend] == [1.0, None, 0.0]
    assert truth["medians"] == {"2021-01": 100.0, "2021-02": 80.0, "2021-03": 60.0}


def test_infeasible_strong_text(tmp_path):
    spec = small_spec(peaks=[PeakSpec("2021-01-11", "POSITIVE", 3, "preorder", hits=1)])
    with pytest.raises(SpecInfeasible):
        generate_fixture(spec, 1, tmp_path)


def test_fixture_is_deterministic(tmp_path):
    spec = small_spec(peaks=[PeakSpec("2021-01-11", "NEGATIVE", 4, "delay")], background_posts=50,
                      comments_per_post=2)
    generate_fixture(spec, 5, tmp_path / "a")
    generate_fixture(spec, 5, tmp_path / "b")
    assert artifact_bytes(tmp_path / "a") == artifact_bytes(tmp_path / "b")


def test_generate_fixture_command(tmp_path, capsys):
    spec = small_spec(peaks=[PeakSpec("2021-01-11", "NEGATIVE", 4, "delay")])
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert main(["generate-fixture", "--out", str(tmp_path / "fx"), "--spec", str(tmp_path / "spec.json")]) == 0
    posts, errors = load_posts(tmp_path / "fx" / "posts.jsonl")
    assert errors == [] and sum(utc_date(p.created_at) == date(2021, 1, 11) for p in posts) >= 4
