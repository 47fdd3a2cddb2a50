"""Search-engine-style query syntax.

    query  := clause+
    clause := ["+" | "-"] (pair | link | word)
    pair   := word "=" word
    link   := "link:" noderef

Clauses are whitespace separated. `+` marks a term required in every
returned trail, `-` excludes any node matching the term. `a=v` restricts the
token v to documents where it occurs inside attribute a. `link:<table/pk>`
matches rows whose foreign keys reference the given row; a link term cannot
be excluded. Everything is matched case-insensitively except link targets
(primary keys keep their case).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .index import InvertedIndex, decode_pk
from .ingest import RowKey
from .vdoc import token_texts


class QueryError(ValueError):
    """Raised for queries that cannot be parsed or evaluated."""


class Modifier(Enum):
    DEFAULT = "default"
    REQUIRED = "required"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class QueryTerm:
    kind: str  # "keyword" | "pair" | "link"
    modifier: Modifier = Modifier.DEFAULT
    word: str | None = None            # keyword
    attribute: str | None = None       # pair
    value: str | None = None           # pair
    target: RowKey | None = None       # link

    def render(self) -> str:
        prefix = {"default": "", "required": "+", "excluded": "-"}[self.modifier.value]
        if self.kind == "keyword":
            return f"{prefix}{self.word}"
        if self.kind == "pair":
            return f"{prefix}{self.attribute}={self.value}"
        from .index import encode_pk  # local import avoids cycle at module load

        return f"{prefix}link:{self.target.table}/{encode_pk(self.target.pk_values)}"


@dataclass(frozen=True)
class Query:
    terms: tuple[QueryTerm, ...]
    raw: str

    @property
    def positive_terms(self) -> tuple[QueryTerm, ...]:
        return tuple(t for t in self.terms if t.modifier is not Modifier.EXCLUDED)

    @property
    def excluded_terms(self) -> tuple[QueryTerm, ...]:
        return tuple(t for t in self.terms if t.modifier is Modifier.EXCLUDED)

    @property
    def required_terms(self) -> tuple[QueryTerm, ...]:
        return tuple(t for t in self.terms if t.modifier is Modifier.REQUIRED)

    def render(self) -> str:
        return " ".join(t.render() for t in self.terms)


def _single_token(text: str, clause: str, side: str) -> str:
    tokens = token_texts(text)
    if len(tokens) != 1:
        raise QueryError(f"malformed pair in {clause!r}: {side} must be a single word")
    return tokens[0]


def _parse_clause(clause: str) -> list[QueryTerm]:
    modifier = Modifier.DEFAULT
    body = clause
    if body.startswith("+"):
        modifier, body = Modifier.REQUIRED, body[1:]
    elif body.startswith("-"):
        modifier, body = Modifier.EXCLUDED, body[1:]
    if not body:
        raise QueryError(f"empty clause {clause!r}")

    if body.lower().startswith("link:"):
        if modifier is Modifier.EXCLUDED:
            raise QueryError(f"link terms cannot be excluded: {clause!r}")
        ref = body[len("link:"):]
        if ref.startswith("/row/"):
            ref = ref[len("/row/"):]
        parts = ref.split("/", 1)
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise QueryError(f"malformed link target {clause!r}; expected link:<table>/<pk>")
        target = RowKey(table=parts[0].lower(), pk_values=decode_pk(parts[1]))
        return [QueryTerm(kind="link", modifier=modifier, target=target)]

    if "=" in body:
        attr_s, _, value_s = body.partition("=")
        if not attr_s or not value_s:
            raise QueryError(f"malformed pair {clause!r}; expected attribute=value")
        return [
            QueryTerm(
                kind="pair",
                modifier=modifier,
                attribute=_single_token(attr_s, clause, "attribute"),
                value=_single_token(value_s, clause, "value"),
            )
        ]

    tokens = token_texts(body)
    if not tokens:
        raise QueryError(f"clause {clause!r} contains no searchable word")
    return [QueryTerm(kind="keyword", modifier=modifier, word=t) for t in tokens]


def parse_query(text: str) -> Query:
    clauses = text.split()
    if not clauses:
        raise QueryError("empty query")
    terms: list[QueryTerm] = []
    for clause in clauses:
        terms.extend(_parse_clause(clause))
    return Query(terms=tuple(terms), raw=text)


@dataclass(frozen=True)
class MatchInfo:
    matched_terms: frozenset[QueryTerm]
    admissible: bool


def node_matches(query: Query, node: int, index: InvertedIndex, graph=None,
                 registry=None) -> MatchInfo:
    """Evaluate one node against the query's terms.

    `graph` and `registry` are only needed when the query has link terms;
    when a registry is available, unknown node ids are rejected.
    """
    if registry is not None:
        registry.resolve_node(node)  # raises for unknown ids
    matched = set()
    for term in query.positive_terms:
        if node in _resolve_term_nodes(term, index, graph, registry):
            matched.add(term)
    admissible = True
    for term in query.excluded_terms:
        if node in _resolve_term_nodes(term, index, graph, registry):
            admissible = False
            break
    return MatchInfo(matched_terms=frozenset(matched), admissible=admissible)


def _resolve_term_nodes(term: QueryTerm, index: InvertedIndex, graph, registry) -> set[int]:
    if term.kind == "keyword":
        return {p.node for p in index.postings_for_term(term.word)}
    if term.kind == "pair":
        return {p.node for p in index.postings_for_pair(term.attribute, term.value)}
    if graph is None or registry is None:
        raise QueryError("link terms need a link graph and registry to evaluate")
    target_node = registry.node_for(term.target)
    if target_node is None:
        return set()
    return set(graph.backlinks(target_node))
