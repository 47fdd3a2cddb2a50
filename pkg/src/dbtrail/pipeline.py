"""End-to-end search pipeline over a built index directory.

Stages (and the timing buckets reported to clients):

    score      parse the query, walk posting lists, pick starting points
    trail      grow navigation trees, collect candidate trails
    filter     redundancy filtering, required-term enforcement, ranking
    summarize  titles and snippets for the returned page

Trail computation never touches dataset rows; only the summarize stage does,
and only through keyed lookups. The per-stage row-access deltas are recorded
so tests can prove it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import EngineConfig, load_config, with_overrides
from .index import InvertedIndex, NodeRegistry, encode_pk, load_index
from .ingest import Dataset, SchemaDescriptor, load_dataset, load_schema
from .linkgraph import LinkGraph
from .query import Query, QueryError, parse_query
from .trailengine import (
    Trail,
    enforce_required_terms,
    evaluate_query,
    filter_trails,
    rank_trails,
    run_best_trail,
    select_starting_points,
    summarize_node,
)


def row_link(table: str, pk_values: tuple[str, ...]) -> str:
    return f"/row/{table}/{encode_pk(pk_values)}"


@dataclass
class StageAccounting:
    """Wall time and dataset row reads per pipeline stage."""

    timings_ms: dict[str, float] = field(default_factory=dict)
    row_reads: dict[str, int] = field(default_factory=dict)
    total_ms: float = 0.0


class SearchEngine:
    """Immutable index + graph + dataset behind the query pipeline."""

    def __init__(self, schema: SchemaDescriptor, dataset: Dataset,
                 registry: NodeRegistry, index: InvertedIndex, graph: LinkGraph,
                 config: EngineConfig | None = None):
        self.schema = schema
        self.dataset = dataset
        self.registry = registry
        self.index = index
        self.graph = graph
        self.config = config or EngineConfig()
        self.last_accounting: StageAccounting | None = None

    @classmethod
    def load(cls, index_dir: str | Path, config_path: str | Path | None = None,
             data_dir: str | Path | None = None) -> "SearchEngine":
        index_dir = Path(index_dir)
        registry, index, stats = load_index(index_dir)
        graph = LinkGraph.load(index_dir / "graph.bin")
        data_dir = Path(data_dir) if data_dir else Path(stats["data_dir"])
        schema = load_schema(data_dir / "schema.json")
        dataset = load_dataset(schema, data_dir)
        config_path = config_path or (index_dir / "engine.toml")
        config = load_config(config_path if Path(config_path).exists() else None)
        return cls(schema, dataset, registry, index, graph, config)

    # -- search ---------------------------------------------------------

    def search(self, query_text: str, k: int | None = None, seed: int | None = None,
               page_size: int | None = None, clock=time.perf_counter) -> dict:
        """Run the full pipeline and shape the wire response."""
        accounting = StageAccounting()
        began = clock()
        reads_before = self.dataset.counters.keyed_lookups

        def close_stage(name: str, started: float) -> float:
            now = clock()
            accounting.timings_ms[name] = (now - started) * 1000.0
            nonlocal reads_before
            reads_now = self.dataset.counters.keyed_lookups
            accounting.row_reads[name] = reads_now - reads_before
            reads_before = reads_now
            return now

        config = with_overrides(self.config, seed=seed, k=k)
        page = page_size if page_size is not None else config.page_size

        t = began
        query = parse_query(query_text)
        if not query.positive_terms:
            raise QueryError("query needs at least one non-excluded term")
        scores = evaluate_query(query, self.index, self.graph, self.registry)
        starts = select_starting_points(
            scores, self.graph, config.best_trail.k, config.potential_gain
        )
        t = close_stage("score", t)

        candidates = run_best_trail(
            starts, scores, self.graph, config.best_trail, config.trail_score
        )
        t = close_stage("trail", t)

        ranked = rank_trails(candidates)
        filtered = filter_trails(
            ranked, scores, self.graph, self._digest_of, config.trail_score
        )
        filtered = enforce_required_terms(filtered, query)
        final = rank_trails(filtered)[:page]
        t = close_stage("filter", t)

        trails_payload = [self._trail_payload(trail, rank, query)
                          for rank, trail in enumerate(final, start=1)]
        t = close_stage("summarize", t)

        accounting.total_ms = (t - began) * 1000.0
        self.last_accounting = accounting
        return {
            "query": query_text,
            "normalized_query": query.render(),
            "seed": config.best_trail.seed,
            "k": config.best_trail.k,
            "trail_count": len(trails_payload),
            "trails": trails_payload,
            "timings": {name: round(ms, 3) for name, ms in accounting.timings_ms.items()},
            "total_ms": round(accounting.total_ms, 3),
        }

    def _digest_of(self, node: int) -> str:
        return self.index.doc_digests.get(node, f"#{node}")

    def _trail_payload(self, trail: Trail, rank: int, query: Query) -> dict:
        nodes = []
        for node, score, terms in zip(trail.nodes, trail.node_scores, trail.node_terms):
            key = self.registry.resolve_node(node)
            summary = summarize_node(
                node, query, self.dataset, self.registry, self.schema,
                self.config.title_columns,
            )
            nodes.append({
                "node_id": node,
                "table": key.table,
                "pk": list(key.pk_values),
                "title": summary.title,
                "snippet": summary.snippet,
                "score": round(score, 6),
                "matched_terms": sorted(t.render() for t in terms),
                "link": row_link(key.table, key.pk_values),
            })
        return {
            "rank": rank,
            "trail_score": round(trail.score, 6),
            "terms_matched": sorted(t.render() for t in trail.terms_matched),
            "nodes": nodes,
        }

    # -- row display ------------------------------------------------------

    def row_view(self, table: str, pk_values: tuple[str, ...]) -> dict | None:
        """Single keyed lookup; FK-valued columns become outlinks."""
        from .ingest import RowKey

        key = RowKey(table=table, pk_values=pk_values)
        row = self.dataset.get(key)
        if row is None:
            return None
        table_def = self.schema.table(table)
        outlinks = []
        for fk in table_def.foreign_keys:
            value = row.value(table_def, fk.columns[0])
            if value is not None:
                outlinks.append({
                    "column": fk.columns[0],
                    "value": value,
                    "link": row_link(fk.ref_table, (value,)),
                })
        node = self.registry.node_for(key)
        return {
            "table": table,
            "pk": list(pk_values),
            "node_id": node,
            "values": {col: val for col, val in zip(table_def.columns, row.values)},
            "outlinks": outlinks,
            "backlinks_link": f"/backlinks/{table}/{encode_pk(pk_values)}",
        }

    def row_xml(self, table: str, pk_values: tuple[str, ...]) -> str | None:
        from .ingest import RowKey
        from .vdoc import build_virtual_document

        row = self.dataset.get(RowKey(table=table, pk_values=pk_values))
        if row is None:
            return None
        return build_virtual_document(self.schema, row).to_xml()

    def backlinks_view(self, table: str, pk_values: tuple[str, ...]) -> dict | None:
        from .ingest import RowKey

        key = RowKey(table=table, pk_values=pk_values)
        node = self.registry.node_for(key)
        if node is None:
            return None
        referrers = []
        for source in self.graph.backlinks(node):
            source_key = self.registry.resolve_node(source)
            referrers.append({
                "node_id": source,
                "table": source_key.table,
                "pk": list(source_key.pk_values),
                "link": row_link(source_key.table, source_key.pk_values),
            })
        return {
            "table": table,
            "pk": list(pk_values),
            "referrers": referrers,
        }

    def stats_view(self) -> dict:
        return {
            "nodes": len(self.registry),
            "documents": self.index.doc_count,
            "terms": self.index.term_count,
            "pairs": self.index.pair_count,
            "links": self.graph.directed_entry_count // 2,
            "tables": {t: self.dataset.count(t) for t in self.schema.table_names},
        }


def build_index_dir(data_dir: str | Path, out_dir: str | Path) -> dict:
    """Ingest a dataset, index every row, build the link graph, and persist
    everything under ``out_dir`` (replacing a previous build)."""
    import os
    import shutil

    from .index import save_index, replace_index_dir
    from .linkgraph import build_link_graph
    from .vdoc import build_virtual_document

    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    schema = load_schema(data_dir / "schema.json")
    dataset = load_dataset(schema, data_dir)

    registry = NodeRegistry()
    index = InvertedIndex()
    for table in schema.tables:
        for key, row in dataset.iter_table(table.name):
            node = registry.register_node(key)
            index.index_document(build_virtual_document(schema, row), node)
    index.finalize()
    graph = build_link_graph(schema, dataset, registry)

    tmp_dir = out_dir.with_name(out_dir.name + f".build-{os.getpid()}")
    if tmp_dir.exists():
        shutil.rmtree(tmp_dir)
    save_index(tmp_dir, registry, index, stats_extra={
        "data_dir": str(data_dir.resolve()),
        "edge_count": graph.directed_entry_count,
        "tables": {t: dataset.count(t) for t in schema.table_names},
    })
    graph.save(tmp_dir / "graph.bin")
    replace_index_dir(tmp_dir, out_dir)
    return {
        "index_dir": str(out_dir),
        "nodes": len(registry),
        "documents": index.doc_count,
        "terms": index.term_count,
        "pairs": index.pair_count,
        "directed_edges": graph.directed_entry_count,
    }
