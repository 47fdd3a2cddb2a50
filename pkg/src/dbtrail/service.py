"""HTTP API: /search, /row, /backlinks, /stats.

Row addresses are ``/row/<table>/<pk>`` where <pk> is the primary key's
components percent-encoded and joined with "/". Because an encoded component
may itself contain %2F, the handlers parse the *raw* request path instead of
letting the router decode it.

JSON everywhere; /row also answers ``Accept: application/xml`` with the
virtual-document serialization. The UI (if any) is mounted at /ui.
"""

from __future__ import annotations

import os
from pathlib import Path
from urllib.parse import unquote

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, RedirectResponse

from .pipeline import SearchEngine
from .query import QueryError

INDEX_DIR_ENV = "DBTRAIL_INDEX_DIR"


def _raw_tail(request: Request, prefix: str) -> list[str] | None:
    """Percent-decoded path components after ``prefix``, from the raw path."""
    raw = request.scope.get("raw_path", b"").decode("latin-1") or request.url.path
    if not raw.startswith(prefix):
        return None
    tail = raw[len(prefix):]
    if not tail:
        return None
    return [unquote(part) for part in tail.split("/")]


def create_app(engine: SearchEngine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="dbtrail", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.get("/search")
    def search(q: str = "", k: int | None = None, seed: int | None = None):
        if not q.strip():
            return JSONResponse({"error": "empty query"}, status_code=400)
        try:
            return engine.search(q, k=k, seed=seed)
        except QueryError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)

    @app.get("/row/{rest:path}")
    def row(request: Request):
        parts = _raw_tail(request, "/row/")
        if not parts or len(parts) < 2:
            return JSONResponse({"error": "expected /row/<table>/<pk>"}, status_code=400)
        table, pk_values = parts[0], tuple(parts[1:])
        try:
            engine.schema.table(table)
        except KeyError:
            return JSONResponse({"error": f"unknown table {table!r}"}, status_code=404)
        wants_xml = "application/xml" in request.headers.get("accept", "")
        if wants_xml:
            xml = engine.row_xml(table, pk_values)
            if xml is None:
                return JSONResponse({"error": "row not found"}, status_code=404)
            return Response(content=xml, media_type="application/xml")
        view = engine.row_view(table, pk_values)
        if view is None:
            return JSONResponse({"error": "row not found"}, status_code=404)
        return view

    @app.get("/backlinks/{rest:path}")
    def backlinks(request: Request):
        parts = _raw_tail(request, "/backlinks/")
        if not parts or len(parts) < 2:
            return JSONResponse({"error": "expected /backlinks/<table>/<pk>"}, status_code=400)
        table, pk_values = parts[0], tuple(parts[1:])
        view = engine.backlinks_view(table, pk_values)
        if view is None:
            return JSONResponse({"error": "row not found"}, status_code=404)
        return view

    @app.get("/stats")
    def stats():
        return engine.stats_view()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse("/ui/")

    return app


def main(argv: list[str] | None = None) -> None:
    """Standalone entry point; `dbtrail serve` wraps this."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Serve a dbtrail index over HTTP")
    parser.add_argument("--index", default=os.environ.get(INDEX_DIR_ENV),
                        help=f"index directory (or ${INDEX_DIR_ENV})")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--ui", default=None, help="directory with the static UI")
    args = parser.parse_args(argv)
    if not args.index:
        parser.error(f"--index or ${INDEX_DIR_ENV} is required")
    engine = SearchEngine.load(args.index)
    uvicorn.run(create_app(engine, ui_dir=args.ui), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
