"""Convert a DBLP XML dump into the portable 4-table dataset format.

Tables emitted:

    publication(key PK, ...bibliographic columns)
    author(id PK, name)                         id assigned in first-seen order
    writes(author FK, publication FK)           one row per <author> element
    citation(cited FK, citing FK)               one row per resolvable <cite>

Author identity is the exact full-name string. Unknown top-level element
types are skipped with a warning. Output is deterministic: identical input
bytes produce identical output bytes.
"""

from __future__ import annotations

import html.entities
import logging
import xml.etree.ElementTree as ET
from pathlib import Path

from .ingest import (
    Dataset,
    ForeignKeyDef,
    SchemaDescriptor,
    TableDef,
    dump_schema,
    validate_schema,
)

log = logging.getLogger(__name__)

PUBLICATION_ELEMENTS = (
    "article",
    "inproceedings",
    "proceedings",
    "book",
    "incollection",
    "phdthesis",
    "mastersthesis",
)

# Child elements copied into publication columns. <url> values are relative
# paths in the dump; they are absolutized against the DBLP site.
_FIELD_ELEMENTS = ("booktitle", "journal", "pages", "publisher", "title", "url", "volume", "year")
_URL_PREFIX = "http://dblp.uni-trier.de/"

PUBLICATION_COLUMNS = (
    "booktitle",
    "journal",
    "key",
    "pages",
    "publisher",
    "title",
    "type",
    "url",
    "volume",
    "year",
)

DBLP_SCHEMA = validate_schema(
    [
        TableDef(
            name="publication",
            columns=PUBLICATION_COLUMNS,
            primary_key=("key",),
        ),
        TableDef(
            name="author",
            columns=("id", "name"),
            primary_key=("id",),
        ),
        TableDef(
            name="writes",
            columns=("author", "publication"),
            primary_key=("author", "publication"),
            foreign_keys=(
                ForeignKeyDef(("author",), "author", ("id",)),
                ForeignKeyDef(("publication",), "publication", ("key",)),
            ),
        ),
        TableDef(
            name="citation",
            columns=("cited", "citing"),
            primary_key=("cited", "citing"),
            foreign_keys=(
                ForeignKeyDef(("cited",), "publication", ("key",)),
                ForeignKeyDef(("citing",), "publication", ("key",)),
            ),
        ),
    ]
)


def _flatten_text(node: ET.Element) -> str | None:
    """Collapse an element and its children (title markup etc.) to plain text."""
    parts: list[str] = []
    if node.text:
        parts.append(node.text)
    for child in node:
        inner = _flatten_text(child)
        if inner:
            parts.append(inner)
        if child.tail:
            parts.append(child.tail)
    text = "".join(parts).strip()
    return text or None


def _parse_dblp(path: Path) -> ET.Element:
    # DBLP dumps rely on entities from an external DTD that expat does not
    # fetch; predefine the HTML ones so &ouml; and friends resolve.
    parser = ET.XMLParser(target=ET.TreeBuilder())
    parser.entity.update(html.entities.entitydefs)
    with path.open("rb") as fh:
        return ET.parse(fh, parser=parser).getroot()


class DblpConversionError(ValueError):
    """Raised for unparseable DBLP input."""


def convert_dblp_xml(xml_path: str | Path, out_dir: str | Path) -> SchemaDescriptor:
    """Parse ``xml_path`` and write schema.json plus the four CSV row files
    into ``out_dir``. Returns the emitted schema."""
    xml_path = Path(xml_path)
    out_dir = Path(out_dir)
    try:
        root = _parse_dblp(xml_path)
    except ET.ParseError as exc:
        raise DblpConversionError(f"malformed DBLP XML {xml_path}: {exc}") from exc

    publications: list[tuple[str | None, ...]] = []
    pub_keys: set[str] = set()
    author_ids: dict[str, int] = {}
    writes: list[tuple[int, str]] = []
    cites: list[tuple[str, str]] = []  # (citing, cited) in document order

    for elem in root:
        if elem.tag not in PUBLICATION_ELEMENTS:
            log.warning("skipping unknown DBLP element <%s key=%r>", elem.tag, elem.get("key"))
            continue
        key = elem.get("key")
        if not key:
            log.warning("skipping <%s> without a key attribute", elem.tag)
            continue
        if key in pub_keys:
            raise DblpConversionError(f"duplicate publication key {key!r}")
        pub_keys.add(key)

        fields: dict[str, str] = {"key": key, "type": elem.tag}
        seen_authors: set[int] = set()
        for child in elem:
            text = _flatten_text(child)
            if text is None:
                continue
            if child.tag == "author":
                author_id = author_ids.setdefault(text, len(author_ids) + 1)
                if author_id not in seen_authors:
                    seen_authors.add(author_id)
                    writes.append((author_id, key))
            elif child.tag == "cite":
                if text != "...":
                    cites.append((key, text))
            elif child.tag in _FIELD_ELEMENTS:
                if child.tag == "url" and not text.startswith(("http://", "https://")):
                    text = _URL_PREFIX + text
                fields.setdefault(child.tag, text)
        publications.append(tuple(fields.get(c) for c in PUBLICATION_COLUMNS))

    citations = []
    for citing, cited in cites:
        if cited in pub_keys:
            citations.append((cited, citing))
        else:
            log.warning("dropping citation from %s to unknown key %r", citing, cited)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "schema.json").write_text(dump_schema(DBLP_SCHEMA), encoding="utf-8")
    _write_csv(out_dir / "publication.csv", PUBLICATION_COLUMNS, publications)
    _write_csv(
        out_dir / "author.csv",
        ("id", "name"),
        [(str(aid), name) for name, aid in author_ids.items()],
    )
    _write_csv(
        out_dir / "writes.csv",
        ("author", "publication"),
        [(str(aid), key) for aid, key in writes],
    )
    _write_csv(out_dir / "citation.csv", ("cited", "citing"), citations)
    return DBLP_SCHEMA


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    import csv

    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def dataset_rows_equal(a: Dataset, b: Dataset) -> bool:
    """Row-for-row comparison helper used by converter round-trip tests."""
    if a.schema != b.schema or len(a) != len(b):
        return False
    return all(b.rows.get(key) == row for key, row in a.rows.items())


__all__ = [
    "DBLP_SCHEMA",
    "DblpConversionError",
    "convert_dblp_xml",
    "dataset_rows_equal",
    "PUBLICATION_COLUMNS",
]
