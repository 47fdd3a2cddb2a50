from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dbtrail.ingest import RowKey
from dbtrail.query import parse_query
from dbtrail.trailengine import (
    CONVERGE,
    EXPLORE,
    MU1,
    BestTrailParams,
    NavigationTree,
    QueryScores,
    TrailScoreParams,
    enforce_required_terms,
    evaluate_query,
    filter_trails,
    make_trail,
    rank_trails,
    run_best_trail,
    score_trail_mu1,
    score_trail_mu2,
    select_starting_points,
    summarize_node,
)

from oracles import (
    AdjGraph,
    best_first_candidates,
    best_mu1_exhaustive,
    best_mu1_optimum,
    random_graph,
)

TS = TrailScoreParams()


def scores_of(score_map, terms=None, inadmissible=None) -> QueryScores:
    return QueryScores.from_dicts(score_map, terms, inadmissible)


# -- trail metrics -------------------------------------------------------------


def test_mu1_singleton():
    t = make_trail((1,), scores_of({1: 0.8}), TS)
    assert score_trail_mu1(t, TS) == pytest.approx(0.4)


def test_mu1_pair_hand_value():
    t = make_trail((1, 2), scores_of({1: 0.6, 2: 0.4}), TS)
    assert score_trail_mu1(t, TS) == pytest.approx(1.0 / 3.0)


def test_mu1_repetition_penalized():
    s = scores_of({1: 0.6, 2: 0.4})
    repeated = make_trail((1, 2, 1), s, TS)
    plain = make_trail((1, 2), s, TS)
    assert score_trail_mu1(repeated, TS) == pytest.approx(0.25)
    assert score_trail_mu1(repeated, TS) < score_trail_mu1(plain, TS)


def test_mu2_singleton_equals_node_score():
    t = make_trail((3,), scores_of({3: 0.7}), TS)
    assert score_trail_mu2(t, TS) == pytest.approx(0.7)


def test_mu2_position_discount():
    t = make_trail((1, 2), scores_of({1: 0.6, 2: 0.4}), TS)
    assert score_trail_mu2(t, TS) == pytest.approx(0.6 + 0.75 * 0.4)


def test_mu2_repetition_discount():
    t = make_trail((1, 1), scores_of({1: 0.5}), TS)
    assert score_trail_mu2(t, TS) == pytest.approx(0.5 + 0.75 * 0.25 * 0.5)


# -- ranking --------------------------------------------------------------------


def test_term_coverage_dominates_score():
    s = scores_of({1: 0.1, 2: 0.1, 3: 9.0}, terms={1: {"a"}, 2: {"b"}, 3: {"a"}})
    two_terms = make_trail((1, 2), s, TS)
    one_term = make_trail((3,), s, TS)
    assert one_term.score > two_terms.score
    assert rank_trails([one_term, two_terms])[0] is two_terms


def test_node_max_breaks_coverage_ties():
    s = scores_of(
        {1: 0.5, 2: 0.5, 3: 0.5},
        terms={1: {"a", "b"}, 2: {"a"}, 3: {"b"}},
    )
    concentrated = make_trail((1,), s, TS)
    spread = make_trail((2, 3), s, TS)
    assert rank_trails([spread, concentrated])[0] is concentrated


def test_rank_stable_on_full_ties():
    s = scores_of({1: 0.5, 2: 0.5}, terms={1: {"a"}, 2: {"a"}})
    t1 = make_trail((1,), s, TS)
    t2 = make_trail((2,), s, TS)
    assert rank_trails([t1, t2]) == [t1, t2]
    assert rank_trails([t2, t1]) == [t2, t1]


@given(
    st.lists(
        st.tuples(
            st.integers(0, 5),
            st.floats(0, 1, allow_nan=False),
            st.sets(st.sampled_from("abc"), max_size=3),
        ),
        min_size=1,
        max_size=8,
    )
)
def test_rank_comparator_is_total_preorder(spec):
    score_map = {i: s for i, (n, s, _) in enumerate(spec)}
    terms = {i: frozenset(t) for i, (_, _, t) in enumerate(spec)}
    s = scores_of(score_map, terms)
    trails = [make_trail((i,), s, TS) for i in range(len(spec))]
    ranked = rank_trails(trails)
    keys = [t.comparator_key() for t in ranked]
    assert keys == sorted(keys, reverse=True)  # transitive, antisymmetric up to ties
    assert sorted(t.nodes for t in ranked) == sorted(t.nodes for t in trails)


# -- starting points -------------------------------------------------------------


def test_no_matches_gives_no_starting_points(engine):
    q = parse_query("zzzzunmatchable")
    s = evaluate_query(q, engine.index, engine.graph, engine.registry)
    assert select_starting_points(s, engine.graph, 10) == []


def test_connected_node_outranks_equal_scoring_isolated_node():
    from dbtrail.linkgraph import LinkGraph

    g = LinkGraph(node_count=3)
    g.add_fk_edge(1, 2)  # node 0 isolated
    s = scores_of({0: 0.5, 1: 0.5}, terms={0: {"a"}, 1: {"a"}})
    assert select_starting_points(s, g, 2) == [1, 0]


def test_fixture_starting_points_contain_brin_and_anatomy(engine):
    q = parse_query("sergey anatomy")
    s = evaluate_query(q, engine.index, engine.graph, engine.registry)
    starts = select_starting_points(s, engine.graph, 10, engine.config.potential_gain)
    brin = engine.registry.node_for(RowKey("author", ("2",)))
    anatomy = engine.registry.node_for(RowKey("publication", ("journals/cn/BrinP98",)))
    assert brin in starts and anatomy in starts


def test_node_score_examples(engine):
    q = parse_query("sergey anatomy")
    s = evaluate_query(q, engine.index, engine.graph, engine.registry)
    anatomy = engine.registry.node_for(RowKey("publication", ("journals/cn/BrinP98",)))
    assert s.score(anatomy) == pytest.approx(engine.index.term_weight("anatomy", anatomy))
    unrelated = engine.registry.node_for(RowKey("publication", ("journals/spe/Tichy85",)))
    assert s.score(unrelated) == 0.0


# -- tip selection and expansion --------------------------------------------------


def _two_tip_tree():
    # mu1 of (A,B) = s_B / 3 and of (A,C) = s_C / 3; pick s so the tips
    # carry trail scores 0.9 and 0.1.
    g = AdjGraph({0: [1, 2], 1: [0], 2: [0]})
    s = scores_of({0: 0.0, 1: 2.7, 2: 0.3})
    tree = NavigationTree(root=0, rho_kind=MU1, scores=s, ts_params=TS, max_tree=100)
    tree.expand_tip(0, g)
    return tree


def test_single_tip_always_selected():
    g = AdjGraph({0: [1], 1: [0]})
    tree = NavigationTree(0, MU1, scores_of({0: 1.0, 1: 1.0}), TS, max_tree=10)
    rng = random.Random(0)
    assert tree.select_tip(EXPLORE, 0.5, 0, 10, rng) == 0
    assert tree.select_tip(CONVERGE, 0.5, 3, 10, rng) == 0


def test_exploration_selection_frequencies_proportional():
    tree = _two_tip_tree()
    rhos = sorted(tree.entries[i].rho for i in tree.tip_indices())
    assert rhos == pytest.approx([0.1, 0.9])
    rng = random.Random(99)
    draws = 100_000
    hits = sum(
        1
        for _ in range(draws)
        if tree.entries[tree.select_tip(EXPLORE, 0.5, 0, 10, rng)].rho > 0.5
    )
    assert hits / draws == pytest.approx(0.9, abs=0.02)


def test_df_zero_convergence_always_picks_max(tree_rng=random.Random(3)):
    tree = _two_tip_tree()
    for j in range(20):
        idx = tree.select_tip(CONVERGE, 0.0, j, 10, tree_rng)
        assert tree.entries[idx].rho == pytest.approx(0.9)


def test_expand_adds_admissible_neighbors_only():
    g = AdjGraph({0: [1, 2, 3], 1: [0], 2: [0], 3: [0]})
    s = QueryScores.from_dicts({0: 1.0, 1: 0.5, 2: 0.5}, inadmissible={3})
    tree = NavigationTree(0, MU1, s, TS, max_tree=100)
    children = tree.expand_tip(0, g)
    assert [tree.entries[c].node for c in children] == [1, 2]
    assert 0 not in tree.tip_slots


def test_expand_at_max_tree_boundary_is_noop():
    g = AdjGraph({0: [1, 2], 1: [0], 2: [0]})
    tree = NavigationTree(0, MU1, scores_of({0: 1.0}), TS, max_tree=2)
    size_before = len(tree)
    assert tree.expand_tip(0, g) == []
    assert len(tree) == size_before
    assert not tree.has_tips  # the blocked tip is retired


# -- run_best_trail ---------------------------------------------------------------


def test_isolated_start_yields_singleton_trail():
    g = AdjGraph({0: []})
    trails = run_best_trail([0], scores_of({0: 0.9}), g, BestTrailParams(seed=1), TS)
    assert [t.nodes for t in trails] == [(0,)]


def test_best_first_emulation_on_seeded_random_graphs():
    params_proto = dict(m=1, i_explore=0, df=0.0)
    for seed in range(50):
        rng = random.Random(1000 + seed)
        n = rng.randint(2, 8)
        adj = random_graph(rng, n, 0.45)
        graph = AdjGraph(adj)
        score_map = {u: round(rng.random(), 3) for u in range(n) if rng.random() < 0.7}
        inadmissible = {u for u in range(n) if rng.random() < 0.15 and u not in score_map}
        scores = QueryScores.from_dicts(
            score_map, {u: {"q"} for u in score_map}, inadmissible
        )
        starts = sorted(u for u in score_map if u not in inadmissible) or [0]
        iterations = rng.randint(0, 12)
        params = BestTrailParams(i_converge=iterations, seed=seed, **params_proto)
        engine_out = [t.nodes for t in run_best_trail(starts, scores, graph, params, TS)]
        oracle_out = best_first_candidates(starts, scores, graph, iterations, TS)
        assert engine_out == oracle_out, f"seed {seed}"


def test_generous_iterations_reach_exhaustive_optimum_small_graph():
    rng = random.Random(7)
    found = 0
    for _ in range(5):
        adj = random_graph(rng, 6, 0.5)
        graph = AdjGraph(adj)
        score_map = {u: round(rng.uniform(0.1, 1.0), 3) for u in range(6)}
        scores = QueryScores.from_dicts(score_map, {u: {"q"} for u in score_map})
        starts = list(range(6))
        enum5 = best_mu1_exhaustive(adj, score_map, TS.c, starts, max_len=5)
        optimum = best_mu1_optimum(adj, score_map, TS.c, starts)
        if optimum != pytest.approx(enum5):
            continue  # optimum needs longer trails; covered by the dp-based test
        params = BestTrailParams(m=5, i_explore=50, i_converge=50, seed=11)
        trails = run_best_trail(starts, scores, graph, params, TS)
        top = rank_trails(trails)[0]
        assert top.score == pytest.approx(enum5, abs=1e-12)
        found += 1
    assert found >= 3


def test_run_best_trail_deterministic_bit_for_bit():
    rng = random.Random(12)
    adj = random_graph(rng, 7, 0.4)
    graph = AdjGraph(adj)
    score_map = {u: rng.random() for u in range(7)}
    scores = QueryScores.from_dicts(score_map, {u: {"q"} for u in score_map})
    params = BestTrailParams(seed=77)
    first = run_best_trail(list(range(7)), scores, graph, params, TS)
    second = run_best_trail(list(range(7)), scores, graph, params, TS)
    assert [(t.nodes, t.score) for t in first] == [(t.nodes, t.score) for t in second]


def test_trail_nodes_pairwise_adjacent():
    rng = random.Random(21)
    adj = random_graph(rng, 6, 0.5)
    graph = AdjGraph(adj)
    scores = QueryScores.from_dicts({u: rng.random() for u in range(6)},
                                    {u: {"q"} for u in range(6)})
    trails = run_best_trail(list(range(6)), scores, graph, BestTrailParams(seed=3), TS)
    for t in trails:
        for a, b in zip(t.nodes, t.nodes[1:]):
            assert b in graph.neighbors(a)


# -- filtering --------------------------------------------------------------------


def _unique_digests(nodes):
    return lambda n: f"digest-{n}"


def test_filter_trims_zero_score_ends():
    s = scores_of({1: 0.0, 2: 1.0, 3: 0.0}, terms={2: {"a"}})
    g = AdjGraph({1: [2], 2: [1, 3], 3: [2]})
    trail = make_trail((1, 2, 3), s, TS)
    out = filter_trails([trail], s, g, _unique_digests(s), TS)
    assert [t.nodes for t in out] == [(2,)]


def test_filter_drops_contained_trail():
    s = scores_of({1: 1.0, 2: 1.0, 3: 1.0}, terms={1: {"a"}, 2: {"a"}, 3: {"a"}})
    g = AdjGraph({1: [2], 2: [1, 3], 3: [2]})
    long = make_trail((1, 2, 3), s, TS)
    short = make_trail((2, 3), s, TS)
    out = filter_trails([long, short], s, g, _unique_digests(s), TS)
    assert [t.nodes for t in out] == [(1, 2, 3)]


def test_filter_keeps_interior_zero_connector():
    s = scores_of({1: 1.0, 2: 0.0, 3: 1.0}, terms={1: {"a"}, 3: {"b"}})
    g = AdjGraph({1: [2], 2: [1, 3], 3: [2]})
    trail = make_trail((1, 2, 3), s, TS)
    out = filter_trails([trail], s, g, _unique_digests(s), TS)
    assert [t.nodes for t in out] == [(1, 2, 3)]


def test_filter_splices_content_duplicate():
    # 4 duplicates 1's content; 2 and 5 are adjacent so 4 can be spliced out
    s = scores_of({1: 1.0, 2: 0.5, 4: 0.2, 5: 1.0},
                  terms={1: {"a"}, 2: {"a"}, 5: {"b"}})
    g = AdjGraph({1: [2], 2: [1, 4, 5], 4: [2, 5], 5: [2, 4]})
    digests = {1: "same", 2: "d2", 4: "same", 5: "d5"}
    trail = make_trail((1, 2, 4, 5), s, TS)
    out = filter_trails([trail], s, g, digests.__getitem__, TS)
    assert [t.nodes for t in out] == [(1, 2, 5)]


def test_filter_truncates_only_when_no_coverage_lost():
    # duplicate cannot be spliced (2 and 5 not adjacent)
    digests = {1: "same", 2: "d2", 4: "same", 5: "d5"}
    g = AdjGraph({1: [2], 2: [1, 4], 4: [2, 5], 5: [4]})
    # 5 adds a new term: the duplicate must be kept
    s1 = scores_of({1: 1.0, 2: 0.5, 4: 0.2, 5: 1.0}, terms={1: {"a"}, 5: {"b"}})
    out1 = filter_trails([make_trail((1, 2, 4, 5), s1, TS)], s1, g, digests.__getitem__, TS)
    assert [t.nodes for t in out1] == [(1, 2, 4, 5)]
    # 5 adds nothing new: truncate at the duplicate
    s2 = scores_of({1: 1.0, 2: 0.5, 4: 0.2, 5: 1.0}, terms={1: {"a"}, 5: {"a"}})
    out2 = filter_trails([make_trail((1, 2, 4, 5), s2, TS)], s2, g, digests.__getitem__, TS)
    assert [t.nodes for t in out2] == [(1, 2)]


def test_filter_removes_repeated_node():
    s = scores_of({1: 1.0, 2: 0.5}, terms={1: {"a"}, 2: {"a"}})
    g = AdjGraph({1: [2], 2: [1]})
    trail = make_trail((1, 2, 1), s, TS)
    out = filter_trails([trail], s, g, _unique_digests(s), TS)
    assert [t.nodes for t in out] == [(1, 2)]


def test_filter_never_lowers_coverage_keys():
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randint(2, 7)
        adj = random_graph(rng, n, 0.6)
        g = AdjGraph(adj)
        score_map = {u: rng.choice([0.0, rng.random()]) for u in range(n)}
        terms = {u: {f"t{rng.randrange(3)}"} for u in range(n) if score_map[u] > 0}
        s = QueryScores.from_dicts(score_map, terms)
        digests = {u: f"d{rng.randrange(n)}" for u in range(n)}  # collisions on purpose
        walk = [rng.randrange(n)]
        for _ in range(rng.randint(0, 5)):
            nbrs = g.neighbors(walk[-1])
            if not nbrs:
                break
            walk.append(rng.choice(nbrs))
        trail = make_trail(tuple(walk), s, TS)
        out = filter_trails([trail], s, g, digests.__getitem__, TS)
        if not out:
            assert len(trail.terms_matched) == 0
            continue
        assert len(out[0].terms_matched) >= len(trail.terms_matched)
        assert out[0].max_node_terms >= trail.max_node_terms


def test_required_terms_enforced():
    q = parse_query("+alpha beta")
    alpha, beta = q.terms
    s = QueryScores.from_dicts({1: 1.0, 2: 1.0}, {1: {alpha}, 2: {beta}})
    with_alpha = make_trail((1, 2), s, TS)
    without_alpha = make_trail((2,), s, TS)
    kept = enforce_required_terms([with_alpha, without_alpha], q)
    assert kept == [with_alpha]


# -- summaries ---------------------------------------------------------------------


def test_summary_marks_terms_and_includes_attribute_names(engine):
    q = parse_query("sergey anatomy")
    anatomy = engine.registry.node_for(RowKey("publication", ("journals/cn/BrinP98",)))
    summary = summarize_node(anatomy, q, engine.dataset, engine.registry,
                             engine.schema, engine.config.title_columns)
    assert summary.title == "The Anatomy of a Large-Scale Hypertextual Web Search Engine."
    assert "**Anatomy**" in summary.snippet
    assert "TITLE" in summary.snippet


def test_summary_without_match_uses_leading_tokens(engine):
    q = parse_query("zzznothing")
    dam66 = engine.registry.node_for(RowKey("publication", ("journals/ac/Dam66",)))
    summary = summarize_node(dam66, q, engine.dataset, engine.registry,
                             engine.schema, engine.config.title_columns)
    assert summary.snippet.startswith("JOURNAL Advances in Computers")
    assert "**" not in summary.snippet
    assert len(summary.snippet.split()) <= 24


def test_summary_title_falls_back_to_row_key(engine):
    q = parse_query("sergey")
    writes_key = next(iter(engine.dataset.table_order["writes"]))
    node = engine.registry.node_for(writes_key)
    summary = summarize_node(node, q, engine.dataset, engine.registry,
                             engine.schema, engine.config.title_columns)
    assert summary.title == writes_key.render()


def test_pair_term_marking_respects_attribute(engine):
    q = parse_query("type=article")
    dam66 = engine.registry.node_for(RowKey("publication", ("journals/ac/Dam66",)))
    summary = summarize_node(dam66, q, engine.dataset, engine.registry,
                             engine.schema, engine.config.title_columns)
    assert "**article**" in summary.snippet


def test_inadmissible_start_is_skipped():
    g = AdjGraph({0: [1], 1: [0]})
    s = QueryScores.from_dicts({1: 1.0}, {1: {"a"}}, inadmissible={0})
    trails = run_best_trail([0, 1], s, g, BestTrailParams(seed=0), TS)
    for t in trails:
        assert 0 not in t.nodes
