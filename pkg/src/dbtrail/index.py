"""Node registry and inverted file.

Every row gets a dense 32-bit node number; the registry maps node <-> row key
both ways (the two-step lookup that keeps arbitrary primary keys out of URLs).

The inverted file holds cosine-normalized tf.idf postings for three kinds of
keys: value tokens, attribute names (indexed as ordinary keywords), and
(attribute, token) pairs. Weights use

    w(t, d) = (1 + ln tf) * ln(1 + N / n_t) / norm(d)

where norm(d) makes each document's keyword vector unit length. idf and norms
are corpus-global, so the index is built in two phases: add documents, then
finalize. After finalize the index is immutable and safe to share.

Pair postings carry the same normalized weight as the token's keyword posting:
heavier on disk, but pair lookups stay one probe.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
import struct
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote, unquote

from .ingest import RowKey
from .vdoc import VirtualDocument, token_texts

MAX_NODE = 2**32 - 1

_POSTINGS_MAGIC = b"DBTRIDX1"
FORMAT_VERSION = 1


class IndexError_(ValueError):
    """Registry or index misuse (duplicate registration, unknown node...)."""


class NodeRegistry:
    """Bidirectional NodeId <-> RowKey map with dense id assignment."""

    def __init__(self) -> None:
        self._forward: list[RowKey] = []
        self._backward: dict[RowKey, int] = {}

    def __len__(self) -> int:
        return len(self._forward)

    def register_node(self, key: RowKey) -> int:
        if key in self._backward:
            raise IndexError_(f"row key already registered: {key}")
        node = len(self._forward)
        if node > MAX_NODE:
            raise IndexError_("node number space exhausted (32-bit)")
        self._forward.append(key)
        self._backward[key] = node
        return node

    def resolve_node(self, node: int) -> RowKey:
        if 0 <= node < len(self._forward):
            return self._forward[node]
        raise IndexError_(f"unknown node id: {node}")

    def node_for(self, key: RowKey) -> int | None:
        return self._backward.get(key)

    def __iter__(self):
        return iter(range(len(self._forward)))


@dataclass(frozen=True)
class Posting:
    node: int
    weight: float


@dataclass
class InvertedIndex:
    """Two-phase inverted file; query methods require a finalized index."""

    doc_count: int = 0
    doc_norms: dict[int, float] = field(default_factory=dict)
    doc_digests: dict[int, str] = field(default_factory=dict)
    term_postings: dict[str, list[Posting]] = field(default_factory=dict)
    pair_postings: dict[tuple[str, str], list[Posting]] = field(default_factory=dict)
    finalized: bool = False

    # build-phase raw data: term -> [(node, tf)], pair -> [(node, token)]
    _raw_terms: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    _raw_pairs: dict[tuple[str, str], list[int]] = field(default_factory=dict)
    _indexed: set[int] = field(default_factory=set)

    def index_document(self, doc: VirtualDocument, node: int) -> None:
        if self.finalized:
            raise IndexError_("cannot add documents after finalize")
        if node in self._indexed:
            raise IndexError_(f"node {node} already indexed")
        self._indexed.add(node)

        tf: dict[str, int] = {}
        pairs: set[tuple[str, str]] = set()
        for attr_name, text in doc.elements:
            attr = attr_name.lower()
            tf[attr] = tf.get(attr, 0) + 1
            for token in token_texts(text):
                tf[token] = tf.get(token, 0) + 1
                pairs.add((attr, token))

        if not tf:
            return  # empty document: no postings
        self.doc_count += 1
        self.doc_digests[node] = hashlib.sha256(doc.to_bytes()).hexdigest()
        for term, count in tf.items():
            self._raw_terms.setdefault(term, []).append((node, count))
        for attr, token in sorted(pairs):
            self._raw_pairs.setdefault((attr, token), []).append(node)

    def finalize(self) -> None:
        """Compute idf and per-document norms, bake normalized weights."""
        if self.finalized:
            return
        n = self.doc_count
        idf = {term: math.log(1.0 + n / len(plist)) for term, plist in self._raw_terms.items()}

        unnormalized: dict[int, dict[str, float]] = {}
        norms_sq: dict[int, float] = {}
        for term, plist in self._raw_terms.items():
            for node, count in plist:
                w = (1.0 + math.log(count)) * idf[term]
                unnormalized.setdefault(node, {})[term] = w
                norms_sq[node] = norms_sq.get(node, 0.0) + w * w

        self.doc_norms = {node: math.sqrt(s) for node, s in norms_sq.items()}
        for term, plist in sorted(self._raw_terms.items()):
            self.term_postings[term] = [
                Posting(node, unnormalized[node][term] / self.doc_norms[node])
                for node, _ in sorted(plist)
            ]
        for (attr, token), nodes in sorted(self._raw_pairs.items()):
            self.pair_postings[(attr, token)] = [
                Posting(node, unnormalized[node][token] / self.doc_norms[node])
                for node in sorted(nodes)
            ]
        self._raw_terms.clear()
        self._raw_pairs.clear()
        self.finalized = True

    def _require_finalized(self) -> None:
        if not self.finalized:
            raise IndexError_("index not finalized")

    def postings_for_term(self, term: str) -> list[Posting]:
        self._require_finalized()
        return self.term_postings.get(term, [])

    def postings_for_pair(self, attribute: str, term: str) -> list[Posting]:
        self._require_finalized()
        return self.pair_postings.get((attribute, term), [])

    def term_weight(self, term: str, node: int) -> float:
        for p in self.postings_for_term(term):
            if p.node == node:
                return p.weight
        return 0.0

    @property
    def term_count(self) -> int:
        return len(self.term_postings)

    @property
    def pair_count(self) -> int:
        return len(self.pair_postings)


def encode_pk(pk_values: tuple[str, ...]) -> str:
    """Slash-separated, percent-encoded primary-key components."""
    return "/".join(quote(v, safe="") for v in pk_values)


def decode_pk(encoded: str) -> tuple[str, ...]:
    return tuple(unquote(part) for part in encoded.split("/"))


# ---------------------------------------------------------------------------
# Persistence (layout documented in docs/index-format.md)
# ---------------------------------------------------------------------------


def _write_postings_file(path: Path, lists) -> dict:
    """Write posting lists back to back; return key -> (offset, count)."""
    offsets = {}
    with path.open("wb") as fh:
        fh.write(_POSTINGS_MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        for key, postings in lists:
            offsets[key] = (fh.tell(), len(postings))
            for p in postings:
                fh.write(struct.pack("<Id", p.node, p.weight))
    return offsets


def _read_postings(path: Path) -> bytes:
    blob = path.read_bytes()
    if blob[:8] != _POSTINGS_MAGIC:
        raise IndexError_(f"{path}: bad magic header")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != FORMAT_VERSION:
        raise IndexError_(f"{path}: unsupported format version {version}")
    return blob


def save_index(directory: str | Path, registry: NodeRegistry, index: InvertedIndex,
               stats_extra: dict | None = None) -> None:
    """Persist registry + postings into ``directory`` (created if missing)."""
    index._require_finalized()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    with (directory / "registry.tsv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("#dbtrail-registry\tv1\n")
        for node in registry:
            key = registry.resolve_node(node)
            digest = index.doc_digests.get(node, "")
            fh.write(f"{node}\t{key.table}\t{encode_pk(key.pk_values)}\t{digest}\n")

    term_offsets = _write_postings_file(
        directory / "postings.bin", sorted(index.term_postings.items())
    )
    pair_offsets = _write_postings_file(
        directory / "pairs.bin", sorted(index.pair_postings.items())
    )
    with (directory / "lexicon.tsv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("#dbtrail-lexicon\tv1\n")
        for term, (offset, count) in sorted(term_offsets.items()):
            fh.write(f"t\t{quote(term, safe='')}\t{offset}\t{count}\n")
        for (attr, token), (offset, count) in sorted(pair_offsets.items()):
            fh.write(f"p\t{quote(attr, safe='')}={quote(token, safe='')}\t{offset}\t{count}\n")

    stats = {
        "format": "dbtrail-index",
        "version": FORMAT_VERSION,
        "node_count": len(registry),
        "doc_count": index.doc_count,
        "term_count": index.term_count,
        "pair_count": index.pair_count,
        "doc_norms": {str(k): v for k, v in sorted(index.doc_norms.items())},
    }
    stats.update(stats_extra or {})
    (directory / "stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")


def load_index(directory: str | Path) -> tuple[NodeRegistry, InvertedIndex, dict]:
    directory = Path(directory)
    stats = json.loads((directory / "stats.json").read_text(encoding="utf-8"))
    if stats.get("format") != "dbtrail-index" or stats.get("version") != FORMAT_VERSION:
        raise IndexError_(f"{directory}: not a dbtrail index (or wrong version)")

    registry = NodeRegistry()
    index = InvertedIndex()
    with (directory / "registry.tsv").open("r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#dbtrail-registry"):
            raise IndexError_("registry.tsv: bad header")
        for line in fh:
            node_s, table, pk_enc, digest = line.rstrip("\n").split("\t")
            node = registry.register_node(RowKey(table=table, pk_values=decode_pk(pk_enc)))
            if int(node_s) != node:
                raise IndexError_("registry.tsv: node ids not dense/ordered")
            if digest:
                index.doc_digests[node] = digest

    term_blob = _read_postings(directory / "postings.bin")
    pair_blob = _read_postings(directory / "pairs.bin")

    def read_list(blob: bytes, offset: int, count: int) -> list[Posting]:
        out = []
        for i in range(count):
            node, weight = struct.unpack_from("<Id", blob, offset + i * 12)
            out.append(Posting(node, weight))
        return out

    with (directory / "lexicon.tsv").open("r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#dbtrail-lexicon"):
            raise IndexError_("lexicon.tsv: bad header")
        for line in fh:
            kind, key, offset_s, count_s = line.rstrip("\n").split("\t")
            offset, count = int(offset_s), int(count_s)
            if kind == "t":
                index.term_postings[unquote(key)] = read_list(term_blob, offset, count)
            elif kind == "p":
                attr_enc, token_enc = key.split("=", 1)
                index.pair_postings[(unquote(attr_enc), unquote(token_enc))] = read_list(
                    pair_blob, offset, count
                )
            else:
                raise IndexError_(f"lexicon.tsv: unknown entry kind {kind!r}")

    index.doc_count = stats["doc_count"]
    index.doc_norms = {int(k): v for k, v in stats.get("doc_norms", {}).items()}
    index.finalized = True
    return registry, index, stats


def replace_index_dir(tmp_dir: Path, final_dir: Path) -> None:
    """Swap a freshly built index into place, replacing any previous build."""
    if final_dir.exists():
        shutil.rmtree(final_dir)
    tmp_dir.replace(final_dir)
