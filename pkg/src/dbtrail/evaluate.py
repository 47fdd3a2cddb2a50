"""Known-item evaluation: reciprocal rank over a query file.

Query files are TSV: ``query<TAB>table<TAB>pk`` (pk components slash
separated and percent encoded when composite). For each query, reciprocal
rank is 1/rank of the first trail on the first result page that contains the
target row's node, or 0 when no page-one trail contains it.

Reports carry wall-clock stage timings; everything else is a pure function
of (index, queries, seed), so a report generated with an injected clock is
byte reproducible.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

from .index import decode_pk
from .ingest import RowKey
from .pipeline import SearchEngine

STAGES = ("score", "trail", "filter", "summarize")


@dataclass(frozen=True)
class EvalQuery:
    query: str
    target: RowKey


def load_query_file(path: str | Path) -> list[EvalQuery]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected query<TAB>table<TAB>pk")
        query, table, pk = parts
        out.append(EvalQuery(query=query, target=RowKey(table=table, pk_values=decode_pk(pk))))
    return out


def run_eval(engine: SearchEngine, queries: list[EvalQuery], *, seed: int = 0,
             page_size: int = 10, clock=time.perf_counter) -> dict:
    per_query = []
    for item in queries:
        target_node = engine.registry.node_for(item.target)
        if target_node is None:
            raise ValueError(f"unknown target row: {item.target.render()}")
        response = engine.search(item.query, seed=seed, page_size=page_size, clock=clock)
        rank = 0
        for trail in response["trails"]:
            if any(n["node_id"] == target_node for n in trail["nodes"]):
                rank = trail["rank"]
                break
        per_query.append({
            "query": item.query,
            "target": item.target.render(),
            "rank": rank,
            "reciprocal_rank": 0.0 if rank == 0 else 1.0 / rank,
            "total_ms": response["total_ms"],
            "stage_ms": response["timings"],
        })

    n = len(per_query)
    stage_totals = {s: sum(q["stage_ms"].get(s, 0.0) for q in per_query) for s in STAGES}
    time_total = sum(q["total_ms"] for q in per_query)
    return {
        "queries": per_query,
        "aggregate": {
            "count": n,
            "mean_reciprocal_rank": round(sum(q["reciprocal_rank"] for q in per_query) / n, 4)
            if n else 0.0,
            "mean_total_ms": round(time_total / n, 3) if n else 0.0,
            "stage_share_pct": {
                s: round(100.0 * stage_totals[s] / time_total, 2) if time_total else 0.0
                for s in STAGES
            },
        },
        "seed": seed,
        "page_size": page_size,
    }


def format_report_table(report: dict) -> str:
    lines = [f"{'query':40s} {'rank':>4s} {'1/rank':>7s} {'ms':>9s}"]
    for q in report["queries"]:
        lines.append(
            f"{q['query'][:40]:40s} {q['rank']:4d} {q['reciprocal_rank']:7.2f} "
            f"{q['total_ms']:9.2f}"
        )
    agg = report["aggregate"]
    lines.append("-" * 63)
    lines.append(
        f"{'mean':40s}      {agg['mean_reciprocal_rank']:7.2f} {agg['mean_total_ms']:9.2f}"
    )
    shares = " ".join(f"{s}={v:.1f}%" for s, v in agg["stage_share_pct"].items())
    lines.append(f"stage shares: {shares}")
    return "\n".join(lines)


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
