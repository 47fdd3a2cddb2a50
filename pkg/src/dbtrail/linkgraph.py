"""Link graph derived from foreign-key value matches, plus potential gain.

Every non-dangling foreign-key value produces one bidirectional link between
the referencing row's node and the referenced row's node. Navigation treats
edges as undirected; the FK direction is kept so `link:` queries can answer
"which rows reference this one" (backlinks).

Potential gain rates a node's navigation potential as a discounted count of
the walks leaving it:

    PG(u) = sum_{i=1..m} gamma^i * walks_i(u)

with walks_i(u) the number of length-i walks starting at u (revisits
allowed). The number of walks, rather than simple paths or bounded trails, is
a deliberate choice: it is convergent for finite m and cheap to compute by
repeated neighbor expansion.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from .index import NodeRegistry
from .ingest import Dataset, RowKey, SchemaDescriptor

_GRAPH_MAGIC = b"DBTRGRF1"
_GRAPH_VERSION = 1


@dataclass(frozen=True)
class PotentialGainParams:
    gamma: float = 0.5
    m: int = 3

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must be in (0, 1)")
        if self.m < 1:
            raise ValueError("m must be a positive integer")


class LinkGraph:
    """Undirected adjacency over node ids with FK-direction provenance."""

    def __init__(self, node_count: int) -> None:
        self.node_count = node_count
        self._adjacency: dict[int, list[int]] = {}
        self._incoming: dict[int, list[int]] = {}  # target -> FK-holding sources
        self._directed_edges: list[tuple[int, int]] = []  # (fk holder, target)

    def _check(self, node: int) -> None:
        if not (0 <= node < self.node_count):
            raise KeyError(f"unknown node id: {node}")

    def add_fk_edge(self, source: int, target: int) -> None:
        """Record that `source`'s row holds an FK value addressing `target`."""
        self._check(source)
        self._check(target)
        if source == target:
            return  # self-references produce no link
        self._directed_edges.append((source, target))
        self._insert(self._adjacency, source, target)
        self._insert(self._adjacency, target, source)
        self._insert(self._incoming, target, source)

    @staticmethod
    def _insert(table: dict[int, list[int]], key: int, value: int) -> None:
        lst = table.setdefault(key, [])
        if value not in lst:
            lst.append(value)
            lst.sort()

    def neighbors(self, node: int) -> list[int]:
        self._check(node)
        return self._adjacency.get(node, [])

    def backlinks(self, node: int) -> list[int]:
        self._check(node)
        return self._incoming.get(node, [])

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    @property
    def directed_entry_count(self) -> int:
        """Number of directed adjacency entries (each link counted both ways)."""
        return sum(len(v) for v in self._adjacency.values())

    def potential_gain(self, node: int, params: PotentialGainParams | None = None) -> float:
        params = params or PotentialGainParams()
        self._check(node)
        # walks_i(u) = sum over neighbors v of walks_{i-1}(v); expand a
        # frontier of (node -> walk count) multisets i times.
        frontier = {node: 1}
        total = 0.0
        discount = 1.0
        for _ in range(params.m):
            discount *= params.gamma
            nxt: dict[int, int] = {}
            for u, count in frontier.items():
                for v in self._adjacency.get(u, ()):
                    nxt[v] = nxt.get(v, 0) + count
            if not nxt:
                break
            total += discount * sum(nxt.values())
            frontier = nxt
        return total

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(_GRAPH_MAGIC)
            fh.write(struct.pack("<II", _GRAPH_VERSION, self.node_count))
            fh.write(struct.pack("<Q", len(self._directed_edges)))
            for source, target in self._directed_edges:
                fh.write(struct.pack("<II", source, target))

    @classmethod
    def load(cls, path: str | Path) -> "LinkGraph":
        blob = Path(path).read_bytes()
        if blob[:8] != _GRAPH_MAGIC:
            raise ValueError(f"{path}: bad magic header")
        version, node_count = struct.unpack_from("<II", blob, 8)
        if version != _GRAPH_VERSION:
            raise ValueError(f"{path}: unsupported graph version {version}")
        (count,) = struct.unpack_from("<Q", blob, 16)
        graph = cls(node_count)
        for i in range(count):
            source, target = struct.unpack_from("<II", blob, 24 + 8 * i)
            graph.add_fk_edge(source, target)
        return graph


def build_link_graph(schema: SchemaDescriptor, dataset: Dataset, registry: NodeRegistry) -> LinkGraph:
    """Match every foreign-key value against its target table's keys.

    Dangling values (no matching target row) are silently linkless: real dumps
    are dirty and links are derived data.
    """
    graph = LinkGraph(node_count=len(registry))
    for table_def in schema.tables:
        if not table_def.foreign_keys:
            continue
        fk_cols = [(fk, table_def.column_index(fk.columns[0])) for fk in table_def.foreign_keys]
        for key, row in dataset.iter_table(table_def.name):
            source = registry.node_for(key)
            if source is None:
                continue
            for fk, col_idx in fk_cols:
                value = row.values[col_idx]
                if value is None:
                    continue
                target = registry.node_for(RowKey(table=fk.ref_table, pk_values=(value,)))
                if target is not None:
                    graph.add_fk_edge(source, target)
    return graph
