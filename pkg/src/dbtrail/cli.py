"""dbtrail command line: index | query | serve | eval | convert-dblp."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path


def _cmd_index(args) -> int:
    from .pipeline import build_index_dir

    info = build_index_dir(args.data, args.out)
    print(
        f"indexed {info['nodes']} rows: {info['terms']} terms, "
        f"{info['pairs']} pairs, {info['directed_edges']} directed links -> {info['index_dir']}"
    )
    return 0


def _load_engine(args):
    from .pipeline import SearchEngine

    index_dir = args.index or os.environ.get("DBTRAIL_INDEX_DIR")
    if not index_dir:
        print("error: --index or $DBTRAIL_INDEX_DIR is required", file=sys.stderr)
        raise SystemExit(2)
    config = getattr(args, "config", None)
    return SearchEngine.load(index_dir, config_path=config)


def _cmd_query(args) -> int:
    from .query import QueryError

    engine = _load_engine(args)
    try:
        response = engine.search(args.query, k=args.k, seed=args.seed)
    except QueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(response, indent=2))
        return 0
    trails = response["trails"]
    print(f"{len(trails)} trails for {response['normalized_query']!r}")
    for trail in trails:
        hops = " -> ".join(f"{n['table']}:{n['title']}" for n in trail["nodes"])
        terms = ",".join(trail["terms_matched"])
        print(f"{trail['rank']:3d}. [{trail['trail_score']:.4f}] ({terms}) {hops}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .pipeline import SearchEngine
    from .service import create_app

    engine = _load_engine(args)
    app = create_app(engine, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _cmd_eval(args) -> int:
    from .evaluate import format_report_table, load_query_file, report_to_json, run_eval

    engine = _load_engine(args)
    queries = load_query_file(args.queries)
    report = run_eval(engine, queries, seed=args.seed, page_size=args.page_size)
    print(format_report_table(report))
    if args.report:
        Path(args.report).write_text(report_to_json(report), encoding="utf-8")
        print(f"report written to {args.report}")
    return 0


def _cmd_convert_dblp(args) -> int:
    from .dblp import convert_dblp_xml

    convert_dblp_xml(args.infile, args.out)
    print(f"converted {args.infile} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbtrail",
                                     description="Keyword search and trail navigation "
                                                 "over relational data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index from a dataset directory")
    p.add_argument("--data", required=True, help="directory with schema.json + CSVs")
    p.add_argument("--out", required=True, help="index output directory")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("query", help="run one query against an index")
    p.add_argument("query")
    p.add_argument("--index", help="index directory (or $DBTRAIL_INDEX_DIR)")
    p.add_argument("--config", help="engine config file")
    p.add_argument("--k", type=int, default=None, help="starting points")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true", help="emit the raw search response")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--index", help="index directory (or $DBTRAIL_INDEX_DIR)")
    p.add_argument("--config", help="engine config file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui", default=None, help="static UI directory to mount at /ui")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("eval", help="reciprocal-rank evaluation over a query file")
    p.add_argument("--index", help="index directory (or $DBTRAIL_INDEX_DIR)")
    p.add_argument("--config", help="engine config file")
    p.add_argument("--queries", required=True, help="TSV: query<TAB>table<TAB>pk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--page-size", type=int, default=10, help="first-page size for RR")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("convert-dblp", help="convert a DBLP XML dump to the dataset format")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert_dblp)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
