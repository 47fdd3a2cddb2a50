from __future__ import annotations

import csv
import random

import pytest

from dbtrail.ingest import RowKey
from dbtrail.linkgraph import LinkGraph, PotentialGainParams

from oracles import potential_gain_oracle, random_graph


def _graph_from_adj(adj: dict[int, list[int]]) -> LinkGraph:
    g = LinkGraph(node_count=max(adj) + 1 if adj else 0)
    for u, vs in adj.items():
        for v in vs:
            if u < v:
                g.add_fk_edge(u, v)
    return g


def test_writes_row_links_author_and_publication(engine):
    ds, reg, g = engine.dataset, engine.registry, engine.graph
    writes_key = next(iter(ds.table_order["writes"]))
    w = reg.node_for(writes_key)
    author = reg.node_for(RowKey("author", (writes_key.pk_values[0],)))
    publication = reg.node_for(RowKey("publication", (writes_key.pk_values[1],)))
    assert g.neighbors(w) == sorted([author, publication])
    assert w in g.neighbors(author)
    assert w in g.neighbors(publication)


def test_no_fk_values_means_empty_adjacency():
    g = LinkGraph(node_count=4)
    for u in range(4):
        assert g.neighbors(u) == []


def test_fixture_directed_entries_equal_twice_fk_values(engine, fixture_dir):
    fk_values = 0
    for name, cols in (("writes", ("author", "publication")), ("citation", ("cited", "citing"))):
        with open(fixture_dir / f"{name}.csv", newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for record in reader:
                fk_values += sum(1 for c in cols if record[c] != "")
    assert engine.graph.directed_entry_count == 2 * fk_values


def test_symmetry_all_fixture_nodes(engine):
    g = engine.graph
    for u in range(len(engine.registry)):
        for v in g.neighbors(u):
            assert u in g.neighbors(v)


def test_backlinks_subset_of_neighbors(engine):
    g = engine.graph
    rng = random.Random(7)
    for u in rng.sample(range(len(engine.registry)), 100):
        assert set(g.backlinks(u)) <= set(g.neighbors(u))


def test_backlinks_of_paxson_floyd_paper(engine):
    """Publication with two writes rows and one citing citation -> 3 referrers."""
    node = engine.registry.node_for(RowKey("publication", ("journals/ton/PaxsonF95",)))
    backs = engine.graph.backlinks(node)
    tables = sorted(engine.registry.resolve_node(b).table for b in backs)
    assert tables == ["citation", "writes", "writes"]


def test_unreferenced_node_has_no_backlinks(engine):
    # the proceedings entry has no authors and is never cited
    node = engine.registry.node_for(RowKey("publication", ("conf/sigmod/93",)))
    assert engine.graph.backlinks(node) == []
    assert engine.graph.neighbors(node) == []


def test_unknown_node_rejected(engine):
    with pytest.raises(KeyError):
        engine.graph.neighbors(10**9)


def test_self_reference_creates_no_loop():
    g = LinkGraph(node_count=2)
    g.add_fk_edge(0, 0)
    assert g.neighbors(0) == []


def test_duplicate_edges_deduplicated():
    g = LinkGraph(node_count=2)
    g.add_fk_edge(0, 1)
    g.add_fk_edge(0, 1)
    assert g.neighbors(0) == [1]
    assert g.neighbors(1) == [0]


# -- potential gain ------------------------------------------------------------


def test_isolated_node_gain_zero():
    g = LinkGraph(node_count=1)
    assert g.potential_gain(0) == 0.0


def test_path_graph_hand_values():
    g = _graph_from_adj({0: [1], 1: [0, 2], 2: [1]})
    params = PotentialGainParams(gamma=0.5, m=2)
    assert g.potential_gain(0, params) == pytest.approx(1.0, abs=1e-12)
    assert g.potential_gain(1, params) == pytest.approx(1.5, abs=1e-12)
    assert g.potential_gain(1, params) > g.potential_gain(0, params)


def test_gain_matches_walk_enumeration_on_random_graphs():
    rng = random.Random(42)
    for trial in range(20):
        n = rng.randint(2, 6)
        adj = random_graph(rng, n, 0.5)
        g = _graph_from_adj({**{u: [] for u in range(n)}, **adj})
        params = PotentialGainParams(gamma=rng.uniform(0.2, 0.8), m=rng.randint(1, 4))
        for u in range(n):
            expected = potential_gain_oracle(adj, u, params.gamma, params.m)
            assert g.potential_gain(u, params) == pytest.approx(expected, abs=1e-12)


def test_gain_monotone_under_edge_addition():
    rng = random.Random(9)
    for _ in range(10):
        n = rng.randint(3, 6)
        adj = random_graph(rng, n, 0.4)
        g = _graph_from_adj({**{u: [] for u in range(n)}, **adj})
        u = rng.randrange(n)
        before = g.potential_gain(u)
        others = [v for v in range(n) if v != u and v not in g.neighbors(u)]
        if not others:
            continue
        g.add_fk_edge(u, rng.choice(others))
        assert g.potential_gain(u) >= before


def test_graph_persistence_round_trip(tmp_path, engine):
    path = tmp_path / "graph.bin"
    engine.graph.save(path)
    loaded = LinkGraph.load(path)
    assert loaded.node_count == engine.graph.node_count
    assert loaded.directed_entry_count == engine.graph.directed_entry_count
    for u in range(0, loaded.node_count, 7):
        assert loaded.neighbors(u) == engine.graph.neighbors(u)
        assert loaded.backlinks(u) == engine.graph.backlinks(u)


def test_params_validation():
    with pytest.raises(ValueError):
        PotentialGainParams(gamma=0.0)
    with pytest.raises(ValueError):
        PotentialGainParams(m=0)


def test_dangling_fk_value_produces_no_link(tmp_path):
    import json

    from dbtrail.index import NodeRegistry
    from dbtrail.ingest import load_dataset, load_schema
    from dbtrail.linkgraph import build_link_graph

    (tmp_path / "schema.json").write_text(json.dumps({"tables": [
        {"name": "a", "columns": [{"name": "id"}], "primary_key": ["id"]},
        {"name": "b", "columns": [{"name": "id"}, {"name": "ref"}], "primary_key": ["id"],
         "foreign_keys": [{"columns": ["ref"], "ref_table": "a", "ref_columns": ["id"]}]},
    ]}))
    (tmp_path / "a.csv").write_text("id\nx\n")
    (tmp_path / "b.csv").write_text("id,ref\n1,x\n2,missing\n3,\n")
    schema = load_schema(tmp_path / "schema.json")
    ds = load_dataset(schema, tmp_path)  # dangling + null refs load fine
    registry = NodeRegistry()
    for table in schema.tables:
        for key, _ in ds.iter_table(table.name):
            registry.register_node(key)
    graph = build_link_graph(schema, ds, registry)
    assert graph.directed_entry_count == 2  # only b:1 -> a:x links
