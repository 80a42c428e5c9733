"""``leomine`` command line: one subcommand per pipeline stage plus ``report``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fixtures, pipeline

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2

_OVERRIDES = (
    # flag, config key, type, section
    ("--posts", "posts", str, None),
    ("--comments", "comments", str, None),
    ("--keywords", "keywords", str, None),
    ("--stopwords", "stopwords", str, None),
    ("--ocr-dir", "ocr_dir", str, None),
    ("--tau", "tau", float, "thresholds"),
    ("--peak-k", "peak_k", int, "thresholds"),
    ("--separation", "peak_separation_days", int, "thresholds"),
    ("--spike-window", "spike_window", int, "thresholds"),
    ("--spike-z", "spike_z", float, "thresholds"),
    ("--spike-min-count", "spike_min_count", int, "thresholds"),
    ("--percentile", "percentile", float, "thresholds"),
    ("--provider-filter", "provider_filter", str, "thresholds"),
)


_HELP = {
    "ingest": "clean the corpus and rebuild comment threads",
    "sentiment": "score every post and comment",
    "peaks": "daily strong-sentiment series and top peaks",
    "outages": "keyword series of negative threads and flagged spikes",
    "popular": "popular posts per month with their top terms",
    "speedtest": "extract speed-test reports from OCR documents",
    "trends": "monthly median downlink with subsamples and Pos",
    "report": "run every stage",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leomine", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in pipeline.COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int)
        for flag, key, typ, _ in _OVERRIDES:
            p.add_argument(flag, dest=key, type=typ)
        p.add_argument("--include-comments", action="store_true", default=None,
                       help="count comments in the daily strong-sentiment series")
    g = sub.add_parser("generate-fixture", help="write the synthetic golden corpus")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--spec", help="fixture spec JSON (default: built-in golden scenario)")
    return parser


def _overrides(args: argparse.Namespace) -> tuple[dict, dict]:
    top: dict = {"out": args.out, "seed": args.seed}
    thresholds = {}
    for _, key, _, section in _OVERRIDES:
        value = getattr(args, key)
        if value is None:
            continue
        if section == "thresholds":
            thresholds[key] = value
        else:
            top[key] = str(Path(value).resolve())
    if args.include_comments:
        thresholds["include_comments"] = True
    if top["out"] is not None:
        top["out"] = str(Path(top["out"]).resolve())
    return top, thresholds


def _load(args) -> pipeline.RunConfig:
    top, thresholds = _overrides(args)
    path = Path(args.config)
    if not path.is_file():
        raise pipeline.ConfigError("config", f"no such file: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise pipeline.ConfigError("config", f"invalid JSON: {exc}") from None
    if thresholds:
        data["thresholds"] = {**(data.get("thresholds") or {}), **thresholds}
    return pipeline.config_from_dict(data, path.parent, top)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "generate-fixture":
        try:
            spec = (fixtures.FixtureSpec.from_dict(json.loads(Path(args.spec).read_text()))
                    if args.spec else fixtures.golden_spec())
            truth = fixtures.generate_fixture(spec, args.seed, args.out)
        except (OSError, ValueError, TypeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FATAL
        print(f"wrote {truth['posts']} posts, {truth['comments']} comments, "
              f"{truth['ocr_docs']} OCR documents to {args.out}")
        return EXIT_OK
    try:
        cfg = _load(args)
        status = pipeline.run(args.command, cfg)
    except pipeline.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    if status:
        print(f"{args.command}: completed with per-item errors; see error sidecars under {cfg.out}",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
