"""Trail discovery: starting points, navigation trees, scoring, filtering.

The engine grows navigation trees from high-scoring starting points. Each
iteration selects a leaf (tip), expands it with the graph neighbors of its
node, and scores the new tips' trails. Exploration iterations pick tips with
probability proportional to trail score; convergence iterations sharpen the
distribution toward the best tip, controlled by the discrimination factor df
(df = 0 degenerates to deterministic best-first search). The best trail of
each tree joins the candidate set, which is then ranked and filtered.

Two trail metrics drive tree growth, and one tree is grown per metric per
starting point:

    mu1: sum of distinct node scores / (length + c)
    mu2: sum_i pos_discount^i * rep_discount^(prior occurrences) * score_i

Final ranking is lexicographic: query terms matched in the trail, then the
most terms matched by a single node, then the mu1 trail score. Ties break
toward smaller node ids everywhere so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .sampling import SumTree

EPSILON = 1e-9  # floors zero-score tips so exploration can leave dead regions


@dataclass(frozen=True)
class BestTrailParams:
    m: int = 3                 # tree repetitions per starting point
    i_explore: int = 40        # proportional-selection iterations
    i_converge: int = 40       # sharpened-selection iterations
    df: float = 0.5            # discrimination factor; 0 = best-first
    k: int = 10                # starting points
    max_tree: int = 2000       # cap on navigation tree size
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 1 or self.k < 1 or self.max_tree < 1:
            raise ValueError("m, k and max_tree must be >= 1")
        if self.i_explore < 0 or self.i_converge < 0 or self.df < 0:
            raise ValueError("iteration counts and df must be >= 0")


@dataclass(frozen=True)
class TrailScoreParams:
    c: float = 1.0             # mu1 length damping
    pos_discount: float = 0.75
    rep_discount: float = 0.25

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if not (0.0 < self.pos_discount <= 1.0) or not (0.0 < self.rep_discount < 1.0):
            raise ValueError("pos_discount in (0,1], rep_discount in (0,1)")


@dataclass(frozen=True)
class NodeEvaluation:
    score: float = 0.0
    terms: frozenset = frozenset()
    admissible: bool = True


_ZERO_EVAL = NodeEvaluation()
_EMPTY_TERMS: frozenset = frozenset()


class QueryScores:
    """Per-node query evaluation: score, matched terms, admissibility.

    Nodes absent from the table match nothing, score 0, and are admissible.
    """

    def __init__(self, evaluations: dict[int, NodeEvaluation]):
        self._evals = evaluations
        self._scores = {n: e.score for n, e in evaluations.items()}
        self._terms = {n: e.terms for n, e in evaluations.items()}
        self._inadmissible = frozenset(n for n, e in evaluations.items() if not e.admissible)

    def evaluation(self, node: int) -> NodeEvaluation:
        return self._evals.get(node, _ZERO_EVAL)

    def score(self, node: int) -> float:
        return self._scores.get(node, 0.0)

    def terms(self, node: int) -> frozenset:
        return self._terms.get(node, _EMPTY_TERMS)

    def admissible(self, node: int) -> bool:
        return node not in self._inadmissible

    def matching_nodes(self) -> list[int]:
        return sorted(n for n, e in self._evals.items() if e.terms)

    @classmethod
    def from_dicts(cls, scores: dict[int, float], terms: dict[int, frozenset] | None = None,
                   inadmissible: set[int] | None = None) -> "QueryScores":
        """Assemble a synthetic table (used by tests and oracles)."""
        terms = terms or {}
        inadmissible = inadmissible or set()
        nodes = set(scores) | set(terms) | inadmissible
        evals = {}
        for n in nodes:
            bad = n in inadmissible
            evals[n] = NodeEvaluation(
                score=0.0 if bad else scores.get(n, 0.0),
                terms=frozenset() if bad else frozenset(terms.get(n, frozenset())),
                admissible=not bad,
            )
        return cls(evals)


def evaluate_query(query, index, graph=None, registry=None) -> QueryScores:
    """Walk the query terms' posting lists once and build the score table.

    Link-term matches contribute a flat weight of 1.0 (they have no tf.idf
    posting); excluded terms force inadmissibility and a zero score.
    """
    from .query import _resolve_term_nodes  # posting-list resolution

    acc: dict[int, float] = {}
    matched: dict[int, set] = {}
    for term in dict.fromkeys(query.positive_terms):
        if term.kind == "keyword":
            weighted = [(p.node, p.weight) for p in index.postings_for_term(term.word)]
        elif term.kind == "pair":
            weighted = [(p.node, p.weight) for p in index.postings_for_pair(term.attribute, term.value)]
        else:
            weighted = [(n, 1.0) for n in _resolve_term_nodes(term, index, graph, registry)]
        for node, weight in weighted:
            acc[node] = acc.get(node, 0.0) + weight
            matched.setdefault(node, set()).add(term)

    excluded: set[int] = set()
    for term in dict.fromkeys(query.excluded_terms):
        excluded.update(_resolve_term_nodes(term, index, graph, registry))

    evals: dict[int, NodeEvaluation] = {}
    for node in set(acc) | excluded:
        if node in excluded:
            evals[node] = NodeEvaluation(score=0.0, terms=frozenset(), admissible=False)
        else:
            evals[node] = NodeEvaluation(
                score=acc[node], terms=frozenset(matched[node]), admissible=True
            )
    return QueryScores(evals)


def node_score(node: int, scores: QueryScores) -> float:
    return scores.score(node)


def select_starting_points(scores: QueryScores, graph, k: int, pg_params=None) -> list[int]:
    """Top-k admissible matching nodes by score * (1 + potential gain)."""
    ranked = []
    for node in scores.matching_nodes():
        if not scores.admissible(node):
            continue
        gain = graph.potential_gain(node, pg_params) if graph is not None else 0.0
        ranked.append((-(scores.score(node) * (1.0 + gain)), node))
    ranked.sort()
    return [node for _, node in ranked[:k]]


# ---------------------------------------------------------------------------
# Trails and their metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trail:
    nodes: tuple[int, ...]
    node_scores: tuple[float, ...]
    node_terms: tuple[frozenset, ...]
    score: float  # mu1 under the engine's TrailScoreParams

    @property
    def terms_matched(self) -> frozenset:
        out: frozenset = frozenset()
        for t in self.node_terms:
            out = out | t
        return out

    @property
    def max_node_terms(self) -> int:
        return max((len(t) for t in self.node_terms), default=0)

    def comparator_key(self) -> tuple:
        return (len(self.terms_matched), self.max_node_terms, self.score)


def make_trail(nodes, scores: QueryScores, params: TrailScoreParams) -> Trail:
    nodes = tuple(nodes)
    trail = Trail(
        nodes=nodes,
        node_scores=tuple(scores.score(n) for n in nodes),
        node_terms=tuple(scores.terms(n) for n in nodes),
        score=0.0,
    )
    return Trail(trail.nodes, trail.node_scores, trail.node_terms,
                 score=score_trail_mu1(trail, params))


def score_trail_mu1(trail: Trail, params: TrailScoreParams) -> float:
    distinct: dict[int, float] = {}
    for node, s in zip(trail.nodes, trail.node_scores):
        distinct[node] = s
    return sum(distinct.values()) / (len(trail.nodes) + params.c)


def score_trail_mu2(trail: Trail, params: TrailScoreParams) -> float:
    seen: dict[int, int] = {}
    total = 0.0
    for i, (node, s) in enumerate(zip(trail.nodes, trail.node_scores)):
        reps = seen.get(node, 0)
        total += (params.pos_discount ** i) * (params.rep_discount ** reps) * s
        seen[node] = reps + 1
    return total


def rank_trails(trails: list[Trail]) -> list[Trail]:
    """Descending by (terms matched, max per node, trail score); stable."""
    return sorted(trails, key=lambda t: t.comparator_key(), reverse=True)


# ---------------------------------------------------------------------------
# Navigation tree
# ---------------------------------------------------------------------------

EXPLORE = "explore"
CONVERGE = "converge"

MU1 = "mu1"
MU2 = "mu2"


@dataclass
class _Entry:
    node: int
    parent: int            # entry index, -1 for root
    path: tuple[int, ...]
    distinct_sum: float    # sum of distinct node scores along path
    mu2: float
    cum_terms: frozenset   # query terms matched anywhere on the path
    max_node_terms: int
    rho: float
    log_rho: float = 0.0   # ln(rho + epsilon), cached for convergence draws

    def mu1(self, c: float) -> float:
        return self.distinct_sum / (len(self.path) + c)


class NavigationTree:
    """Tree of node occurrences grown from one starting point under one
    trail metric (rho = mu1 or mu2). Trail metrics are maintained
    incrementally along parent chains; tip selection is O(log |D|) through a
    sum tree keyed by rho + epsilon."""

    def __init__(self, root: int, rho_kind: str, scores: QueryScores,
                 ts_params: TrailScoreParams, max_tree: int):
        if rho_kind not in (MU1, MU2):
            raise ValueError(f"unknown trail metric {rho_kind!r}")
        self.rho_kind = rho_kind
        self.scores = scores
        self.ts = ts_params
        self.max_tree = max_tree
        self.entries: list[_Entry] = []
        self.tip_slots: dict[int, int] = {}  # entry index -> sampler slot
        self._slot_entry: dict[int, int] = {}
        self._sampler = SumTree()
        self._add_entry(node=root, parent=-1)

    def __len__(self) -> int:
        return len(self.entries)

    def _add_entry(self, node: int, parent: int) -> int:
        score = self.scores.score(node)
        terms = self.scores.terms(node)
        if parent < 0:
            path = (node,)
            distinct_sum = score
            mu2 = score
            cum_terms = terms
            max_terms = len(terms)
        else:
            p = self.entries[parent]
            occurrences = p.path.count(node)
            path = p.path + (node,)
            distinct_sum = p.distinct_sum + (score if occurrences == 0 else 0.0)
            mu2 = p.mu2 + (self.ts.pos_discount ** (len(path) - 1)) \
                * (self.ts.rep_discount ** occurrences) * score
            cum_terms = p.cum_terms if terms <= p.cum_terms else p.cum_terms | terms
            max_terms = max(p.max_node_terms, len(terms))
        entry = _Entry(node=node, parent=parent, path=path, distinct_sum=distinct_sum,
                       mu2=mu2, cum_terms=cum_terms, max_node_terms=max_terms, rho=0.0)
        entry.rho = entry.mu1(self.ts.c) if self.rho_kind == MU1 else entry.mu2
        entry.log_rho = math.log(entry.rho + EPSILON)
        self.entries.append(entry)
        idx = len(self.entries) - 1
        slot = self._sampler.add(entry.rho + EPSILON)
        self.tip_slots[idx] = slot
        self._slot_entry[slot] = idx
        return idx

    def _retire_tip(self, idx: int) -> None:
        slot = self.tip_slots.pop(idx)
        del self._slot_entry[slot]
        self._sampler.update(slot, 0.0)

    @property
    def has_tips(self) -> bool:
        return bool(self.tip_slots)

    def tip_indices(self) -> list[int]:
        return sorted(self.tip_slots)

    def select_tip(self, phase: str, df: float, j: int, i_converge: int,
                   rng: random.Random) -> int:
        """Pick a tip entry index for expansion.

        Exploration: probability proportional to rho + epsilon (sum tree).
        Convergence: proportional to (rho + epsilon)^(1 + j/(df*I + epsilon));
        df = 0 collapses to the arg max with deterministic tie-breaking
        (higher rho, then smaller node id, then older entry).
        """
        if not self.tip_slots:
            raise RuntimeError("no expandable tips")
        if phase == EXPLORE:
            slot = self._sampler.sample(rng.random())
            return self._slot_entry[slot]

        tips = self.tip_indices()
        if df == 0.0:
            return min(tips, key=lambda i: (-self.entries[i].rho, self.entries[i].node, i))
        exponent = 1.0 + j / (df * i_converge + EPSILON)
        entries = self.entries
        logs = [exponent * entries[i].log_rho for i in tips]
        peak = max(logs)
        weights = [math.exp(l - peak) for l in logs]
        target = rng.random() * sum(weights)
        for idx, w in zip(tips, weights):
            target -= w
            if target < 0.0:
                return idx
        return tips[-1]

    def expand_tip(self, idx: int, graph) -> list[int]:
        """Expand entry `idx`: children = admissible graph neighbors, in node
        order. Dead ends and would-be-oversize expansions retire the tip but
        leave the tree unchanged."""
        entry = self.entries[idx]
        children = [v for v in graph.neighbors(entry.node) if self.scores.admissible(v)]
        if not children or len(self.entries) + len(children) > self.max_tree:
            self._retire_tip(idx)
            return []
        self._retire_tip(idx)
        return [self._add_entry(node=v, parent=idx) for v in children]

    def best_trail(self, ts_params: TrailScoreParams) -> Trail:
        """Highest-ranked trail among every root-to-node path in the tree."""
        best_idx = 0
        best_key = None
        for i, entry in enumerate(self.entries):
            key = (len(entry.cum_terms), entry.max_node_terms, entry.mu1(ts_params.c), -i)
            if best_key is None or key > best_key:
                best_key, best_idx = key, i
        return make_trail(self.entries[best_idx].path, self.scores, ts_params)


def _grow_tree(start: int, rho_kind: str, scores: QueryScores, graph,
               params: BestTrailParams, ts_params: TrailScoreParams,
               rng: random.Random) -> NavigationTree:
    tree = NavigationTree(root=start, rho_kind=rho_kind, scores=scores,
                          ts_params=ts_params, max_tree=params.max_tree)
    for _ in range(params.i_explore):
        if not tree.has_tips:
            break
        tree.expand_tip(tree.select_tip(EXPLORE, params.df, 0, params.i_converge, rng), graph)
    for j in range(params.i_converge):
        if not tree.has_tips:
            break
        tree.expand_tip(tree.select_tip(CONVERGE, params.df, j, params.i_converge, rng), graph)
    return tree


def run_best_trail(starts: list[int], scores: QueryScores, graph,
                   params: BestTrailParams, ts_params: TrailScoreParams) -> list[Trail]:
    """Grow 2 trees (one per metric) x m repetitions per starting point and
    collect each tree's best trail, deduplicated by node sequence."""
    candidates: dict[tuple[int, ...], Trail] = {}
    for start in starts:
        if not scores.admissible(start):
            continue  # inadmissible nodes are barred from trails entirely
        for rep in range(params.m):
            for rho_idx, rho_kind in enumerate((MU1, MU2)):
                rng = random.Random(f"{params.seed}|{start}|{rep}|{rho_idx}")
                tree = _grow_tree(start, rho_kind, scores, graph, params, ts_params, rng)
                trail = tree.best_trail(ts_params)
                candidates.setdefault(trail.nodes, trail)
    return list(candidates.values())


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------


def _trim_zero_ends(nodes: tuple[int, ...], scores: QueryScores) -> tuple[int, ...]:
    lo, hi = 0, len(nodes)
    while lo < hi and scores.score(nodes[lo]) == 0.0:
        lo += 1
    while hi > lo and scores.score(nodes[hi - 1]) == 0.0:
        hi -= 1
    return nodes[lo:hi]


def _dedupe_content(nodes: tuple[int, ...], scores: QueryScores, graph,
                    digest_of) -> tuple[int, ...]:
    """Drop nodes whose document bytes duplicate an earlier node's, splicing
    when the neighbors remain graph-adjacent and truncating otherwise.

    Dropping or truncating never sacrifices query-term coverage. Equal bytes
    imply equal matched terms, so the coverage guards are no-ops on real
    indexes; they keep the invariant airtight for arbitrary digest functions.
    """

    def keep(node: int) -> None:
        nonlocal covered
        kept.append(node)
        covered = covered | scores.terms(node)

    kept: list[int] = []
    seen: set[str] = set()
    covered: frozenset = frozenset()
    for i, node in enumerate(nodes):
        digest = digest_of(node)
        if digest not in seen:
            seen.add(digest)
            keep(node)
            continue
        if not scores.terms(node) <= covered:
            keep(node)  # duplicate bytes but novel terms: not redundant
            continue
        if i == len(nodes) - 1:
            continue  # trailing duplicate: nothing to reconnect
        if kept and nodes[i + 1] in graph.neighbors(kept[-1]):
            continue  # splice: predecessor and successor are adjacent
        remainder: frozenset = frozenset()
        for later in nodes[i + 1:]:
            remainder = remainder | scores.terms(later)
        if remainder <= covered:
            break  # truncate; no coverage lost
        keep(node)
    return tuple(kept)


def _contains_contiguous(haystack: tuple[int, ...], needle: tuple[int, ...]) -> bool:
    n = len(needle)
    return any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))


def filter_trails(trails: list[Trail], scores: QueryScores, graph, digest_of,
                  ts_params: TrailScoreParams) -> list[Trail]:
    """Redundancy removal over a ranked trail list (rank order defines which
    trail wins a containment conflict)."""
    kept: list[Trail] = []
    for trail in trails:
        nodes = _trim_zero_ends(trail.nodes, scores)
        if nodes:
            nodes = _dedupe_content(nodes, scores, graph, digest_of)
        if not nodes:
            continue
        if any(_contains_contiguous(k.nodes, nodes) for k in kept):
            continue
        kept.append(make_trail(nodes, scores, ts_params))
    return kept


def enforce_required_terms(trails: list[Trail], query) -> list[Trail]:
    required = set(query.required_terms)
    if not required:
        return trails
    return [t for t in trails if required <= set(t.terms_matched)]


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

SNIPPET_TOKENS = 24


@dataclass(frozen=True)
class Summary:
    title: str
    snippet: str


def summarize_node(node: int, query, dataset, registry, schema,
                   title_columns: dict[str, str]) -> Summary:
    """Small display summary: a title column value (or the rendered row key)
    plus a snippet of up to 24 display tokens centered on the earliest query
    term, with attribute names inline and matched words marked."""
    from .vdoc import build_virtual_document, token_texts

    key = registry.resolve_node(node)
    row = dataset.get(key)
    if row is None:
        return Summary(title=key.render(), snippet="")

    table_def = schema.table(key.table)
    title = key.render()
    title_col = title_columns.get(key.table)
    if title_col and title_col in table_def.columns:
        value = row.value(table_def, title_col)
        if value is not None:
            title = value

    doc = build_virtual_document(schema, row)
    words: list[tuple[str, str | None]] = []  # (display word, attribute or None)
    for attr_name, text in doc.elements:
        words.append((attr_name, None))
        for w in text.split():
            words.append((w, attr_name.lower()))
    if not words:
        return Summary(title=title, snippet="")

    keywords = {t.word for t in query.positive_terms if t.kind == "keyword"}
    pairs = {(t.attribute, t.value) for t in query.positive_terms if t.kind == "pair"}

    def matches(word: str, attr: str | None) -> bool:
        tokens = set(token_texts(word))
        if tokens & keywords:
            return True
        return attr is not None and any(a == attr and v in tokens for a, v in pairs)

    first = next((i for i, (w, a) in enumerate(words) if matches(w, a)), None)
    start = 0 if first is None else max(0, first - SNIPPET_TOKENS // 2 + 1)
    window = words[start:start + SNIPPET_TOKENS]
    rendered = " ".join(f"**{w}**" if matches(w, a) else w for w, a in window)
    return Summary(title=title, snippet=rendered)
