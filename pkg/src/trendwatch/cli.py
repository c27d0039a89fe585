"""Command-line entry points for offline runs and the API server.

The store path comes from --store or the TW_STORE environment variable;
the serve command reads its bearer token from TW_TOKEN.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

from .ingest import DEFAULT_KEYWORDS, KeywordFilter, ingest_file
from .pipeline import run_pipeline
from .store import RunConfig, Store
from .trends import records_to_json


def _store_path(args: argparse.Namespace) -> Path:
    path = args.store or os.environ.get("TW_STORE")
    if not path:
        raise SystemExit("no store given: pass --store or set TW_STORE")
    return Path(path)


def _add_store_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", help="event log path (default: $TW_STORE)")


def _emit(data, out: str | None) -> None:
    text = data if isinstance(data, str) else json.dumps(data, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.jaccard is not None:
        overrides["jaccard_threshold"] = args.jaccard
    if args.warmup_days is not None:
        overrides["warmup_days"] = args.warmup_days
    if args.sample_n is not None:
        overrides["sample_n"] = args.sample_n
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.keywords:
        overrides["keywords"] = frozenset(args.keywords)
    if args.extractor is not None:
        overrides["extractor"] = args.extractor
    return RunConfig(**overrides)


def cmd_ingest(args: argparse.Namespace) -> int:
    keywords = frozenset(args.keywords) if args.keywords else DEFAULT_KEYWORDS
    result = ingest_file(args.corpus, KeywordFilter(keywords), workers=args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            for post in result.posts:
                handle.write(
                    json.dumps(
                        {
                            "post_id": post.post_id,
                            "text": post.text,
                            "created_at": post.created_at.isoformat().replace("+00:00", "Z"),
                            "author_id": post.author_id,
                        }
                    )
                    + "\n"
                )
    _emit(result.report, None)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    store = Store(_store_path(args))
    report = run_pipeline(args.corpus, store, _config_from_args(args), workers=args.workers)
    if args.csv_out:
        Path(args.csv_out).write_text(store.trend_csv(), encoding="utf-8")
    _emit(report.to_dict(), None)
    return 0


def cmd_trends(args: argparse.Namespace) -> int:
    store = Store(_store_path(args))
    day = date.fromisoformat(args.date) if args.date else store.latest_day()
    if day is None:
        _emit({"date": None, "records": []}, args.out)
        return 0
    records = store.trends_for(day, args.top)
    if args.format == "csv":
        from .trends import records_to_csv

        _emit(records_to_csv(records), args.out)
    else:
        _emit({"date": day.isoformat(), "records": records_to_json(records)}, args.out)
    return 0


def cmd_review_export(args: argparse.Namespace) -> int:
    store = Store(_store_path(args))
    _emit(store.export_reviews(), args.out)
    return 0


def cmd_review_import(args: argparse.Namespace) -> int:
    store = Store(_store_path(args))
    data = json.loads(Path(args.file).read_text(encoding="utf-8"))
    _emit(store.import_reviews(data), None)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    store = Store(_store_path(args))
    report = store.metrics_report()
    _emit(report, args.out)
    if args.series_out:
        lines = ["date,potential,actual"]
        for point in report["cumulative_trends"]:
            lines.append(f"{point['date']},{point['potential']},{point['actual']}")
        Path(args.series_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    store = Store(_store_path(args), snapshot_every=args.snapshot_every)
    app = create_app(store, token=args.token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendwatch",
        description="Early detection and human review of trending treatment claims.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and keyword-filter a JSONL corpus")
    p.add_argument("corpus")
    p.add_argument("--keywords", nargs="+")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write matched posts as JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="run (or resume) the full pipeline on a corpus")
    p.add_argument("corpus")
    _add_store_arg(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--jaccard", type=float)
    p.add_argument("--warmup-days", type=int, dest="warmup_days")
    p.add_argument("--sample-n", type=int, dest="sample_n")
    p.add_argument("--seed")
    p.add_argument("--keywords", nargs="+")
    p.add_argument("--extractor", help='"pattern" or an extractor service base URL')
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv-out", dest="csv_out", help="also write the full trend CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("trends", help="show one day's ranked trend records")
    _add_store_arg(p)
    p.add_argument("--date", help="UTC day (default: latest rolled-up day)")
    p.add_argument("--top", type=int)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trends)

    p = sub.add_parser("review", help="move decisions and reviews in or out")
    review_sub = p.add_subparsers(dest="review_command", required=True)
    pe = review_sub.add_parser("export", help="dump decisions and reviews as JSON")
    _add_store_arg(pe)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_review_export)
    pi = review_sub.add_parser("import", help="load decisions and reviews from JSON")
    _add_store_arg(pi)
    pi.add_argument("file")
    pi.set_defaults(func=cmd_review_import)

    p = sub.add_parser("metrics", help="write the metrics report")
    _add_store_arg(p)
    p.add_argument("--out")
    p.add_argument("--series-out", dest="series_out", help="cumulative trend series CSV")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="serve the HTTP API")
    _add_store_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", help="bearer token (default: $TW_TOKEN)")
    p.add_argument("--snapshot-every", type=int, default=500, dest="snapshot_every")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
