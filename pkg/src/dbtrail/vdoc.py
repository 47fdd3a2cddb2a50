"""Virtual documents: transient XML renderings of rows, and the tokenizer.

A row becomes ``<TABLE><row><COL>value</COL>...</row></TABLE>`` with one
element per non-null column, in column order. Documents exist only long
enough to be indexed (and to serve the XML row view); they are never stored.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .ingest import Row, SchemaDescriptor

# Unicode alphanumeric runs; underscores and everything else split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class Token:
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    """Lowercase, split on any non-alphanumeric character, drop empties."""
    return [Token(text=m, position=i) for i, m in enumerate(_TOKEN_RE.findall(text.lower()))]


def token_texts(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class VirtualDocument:
    table: str
    elements: tuple[tuple[str, str], ...]  # (ATTRIBUTE_NAME, text), column order

    def to_xml(self) -> str:
        root = ET.Element(self.table.upper())
        row_el = ET.SubElement(root, "row")
        for name, text in self.elements:
            el = ET.SubElement(row_el, name)
            el.text = text
        return ET.tostring(root, encoding="unicode")

    def to_bytes(self) -> bytes:
        return self.to_xml().encode("utf-8")


def build_virtual_document(schema: SchemaDescriptor, row: Row) -> VirtualDocument:
    table_def = schema.table(row.table)
    elements = tuple(
        (col.upper(), value)
        for col, value in zip(table_def.columns, row.values)
        if value is not None
    )
    return VirtualDocument(table=row.table, elements=elements)


def parse_virtual_document(xml_text: str) -> VirtualDocument:
    """Inverse of VirtualDocument.to_xml, used to check round-trip fidelity."""
    root = ET.fromstring(xml_text)
    row_el = root.find("row")
    if row_el is None:
        raise ValueError("virtual document XML has no <row> wrapper")
    elements = tuple((child.tag, child.text or "") for child in row_el)
    return VirtualDocument(table=root.tag.lower(), elements=elements)
