"""Portable dataset ingestion: JSON schema descriptor plus per-table CSV row files.

A dataset directory looks like:

    schema.json          table/column/primary-key/foreign-key declarations
    <table>.csv          one UTF-8 CSV per table, header row = column names,
                         empty field = null

All values are text. Composite foreign keys are rejected (their link target
would be ambiguous); composite primary keys are fine.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

RESERVED_TABLES = {"__url__"}  # reserved for web-page nodes, never user data


class SchemaError(ValueError):
    """Raised when a schema descriptor is malformed or inconsistent."""


class DatasetError(ValueError):
    """Raised when row files violate the schema or contain duplicate keys."""


@dataclass(frozen=True)
class ForeignKeyDef:
    """Single-column foreign key: ``columns`` on this table reference
    ``ref_columns`` (the primary key) of ``ref_table``."""

    columns: tuple[str, ...]
    ref_table: str
    ref_columns: tuple[str, ...]


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[str, ...]
    primary_key: tuple[str, ...]
    foreign_keys: tuple[ForeignKeyDef, ...] = ()

    def column_index(self, name: str) -> int:
        return self.columns.index(name)


@dataclass(frozen=True)
class SchemaDescriptor:
    tables: tuple[TableDef, ...]

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(f"no such table: {name!r}")

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)


@dataclass(frozen=True)
class RowKey:
    """Primary-key address of one row: the second half of the two-step
    node-id -> key -> row lookup."""

    table: str
    pk_values: tuple[str, ...]

    def render(self) -> str:
        return "/".join([self.table, *self.pk_values])


@dataclass(frozen=True)
class Row:
    table: str
    values: tuple[str | None, ...]  # aligned with TableDef.columns

    def value(self, table_def: TableDef, column: str) -> str | None:
        return self.values[table_def.column_index(column)]


def _validate_table(raw: dict, position: int) -> TableDef:
    try:
        name = raw["name"]
        columns = tuple(c["name"] for c in raw["columns"])
        primary_key = tuple(raw["primary_key"])
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"table #{position}: missing or malformed field: {exc}") from exc

    if not name or not isinstance(name, str):
        raise SchemaError(f"table #{position}: name must be a non-empty string")
    if name.lower() in RESERVED_TABLES:
        raise SchemaError(f"table {name!r} is a reserved name")
    if len(set(columns)) != len(columns):
        raise SchemaError(f"table {name!r}: duplicate column names")
    if not primary_key:
        raise SchemaError(f"table {name!r}: primary_key must be non-empty")
    missing = [c for c in primary_key if c not in columns]
    if missing:
        raise SchemaError(f"table {name!r}: primary_key columns {missing} not in columns")

    fks = []
    for raw_fk in raw.get("foreign_keys", ()):
        try:
            fk = ForeignKeyDef(
                columns=tuple(raw_fk["columns"]),
                ref_table=raw_fk["ref_table"],
                ref_columns=tuple(raw_fk["ref_columns"]),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"table {name!r}: malformed foreign key: {exc}") from exc
        if len(fk.columns) != 1 or len(fk.ref_columns) != 1:
            raise SchemaError(
                f"table {name!r}: composite foreign key {list(fk.columns)} -> "
                f"{fk.ref_table}{list(fk.ref_columns)} is not supported; the link "
                "target of a composite key is ambiguous"
            )
        if fk.columns[0] not in columns:
            raise SchemaError(f"table {name!r}: foreign key column {fk.columns[0]!r} not in columns")
        fks.append(fk)

    return TableDef(name=name, columns=columns, primary_key=primary_key, foreign_keys=tuple(fks))


def validate_schema(tables: list[TableDef] | tuple[TableDef, ...]) -> SchemaDescriptor:
    """Cross-table validation: unique names, resolvable foreign keys."""
    seen: dict[str, str] = {}
    for t in tables:
        low = t.name.lower()
        if low in seen:
            raise SchemaError(f"duplicate table name {t.name!r} (conflicts with {seen[low]!r})")
        seen[low] = t.name

    by_name = {t.name: t for t in tables}
    for t in tables:
        for fk in t.foreign_keys:
            target = by_name.get(fk.ref_table)
            if target is None:
                raise SchemaError(
                    f"table {t.name!r}: foreign key references unknown table {fk.ref_table!r}"
                )
            if fk.ref_columns[0] not in target.columns:
                raise SchemaError(
                    f"table {t.name!r}: foreign key references unknown column "
                    f"{fk.ref_table}.{fk.ref_columns[0]}"
                )
            if fk.ref_columns != target.primary_key:
                raise SchemaError(
                    f"table {t.name!r}: foreign key target {fk.ref_table}{list(fk.ref_columns)} "
                    f"is not that table's primary key {list(target.primary_key)}; such a link "
                    "could never resolve to a row"
                )
    return SchemaDescriptor(tables=tuple(tables))


def load_schema(path: str | Path) -> SchemaDescriptor:
    """Load and validate a ``schema.json`` descriptor."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read schema {path}: {exc}") from exc
    if not isinstance(raw, dict) or "tables" not in raw:
        raise SchemaError(f"{path}: top level must be an object with a 'tables' list")
    tables = [_validate_table(t, i) for i, t in enumerate(raw["tables"])]
    return validate_schema(tables)


def dump_schema(schema: SchemaDescriptor) -> str:
    """Serialize back to the documented JSON format (used by the converter)."""
    doc = {
        "tables": [
            {
                "name": t.name,
                "columns": [{"name": c} for c in t.columns],
                "primary_key": list(t.primary_key),
                "foreign_keys": [
                    {
                        "columns": list(fk.columns),
                        "ref_table": fk.ref_table,
                        "ref_columns": list(fk.ref_columns),
                    }
                    for fk in t.foreign_keys
                ],
            }
            for t in schema.tables
        ]
    }
    return json.dumps(doc, indent=2) + "\n"


@dataclass
class AccessCounters:
    """Instrumentation for the primary-key-only access discipline."""

    keyed_lookups: int = 0
    scans: int = 0

    def snapshot(self) -> tuple[int, int]:
        return (self.keyed_lookups, self.scans)


@dataclass
class Dataset:
    """All rows of a dataset, addressable only by RowKey (keyed lookups) or by
    full-table iteration (scans). Both access paths are counted so callers can
    prove which one they used."""

    schema: SchemaDescriptor
    rows: dict[RowKey, Row] = field(default_factory=dict)
    table_order: dict[str, list[RowKey]] = field(default_factory=dict)
    counters: AccessCounters = field(default_factory=AccessCounters)

    def __len__(self) -> int:
        return len(self.rows)

    def add_row(self, key: RowKey, row: Row) -> None:
        if key in self.rows:
            raise DatasetError(
                f"duplicate primary key in table {key.table!r}: {list(key.pk_values)}"
            )
        self.rows[key] = row
        self.table_order.setdefault(key.table, []).append(key)

    def get(self, key: RowKey) -> Row | None:
        self.counters.keyed_lookups += 1
        return self.rows.get(key)

    def contains(self, key: RowKey) -> bool:
        return key in self.rows  # membership probe, not a row read

    def iter_table(self, table: str):
        """Scan one table in file order. Counted as a scan."""
        self.counters.scans += 1
        for key in self.table_order.get(table, []):
            yield key, self.rows[key]

    def count(self, table: str) -> int:
        return len(self.table_order.get(table, []))


def _row_key(table_def: TableDef, values: tuple[str | None, ...]) -> RowKey:
    pk = []
    for col in table_def.primary_key:
        v = values[table_def.column_index(col)]
        if v is None:
            raise DatasetError(
                f"table {table_def.name!r}: null primary-key column {col!r} in row {values}"
            )
        pk.append(v)
    return RowKey(table=table_def.name, pk_values=tuple(pk))


def load_rows(table_def: TableDef, path: str | Path):
    """Yield (RowKey, Row) from one CSV file, validating against the table."""
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DatasetError(f"cannot open row file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: missing header row") from None
        if tuple(header) != table_def.columns:
            raise DatasetError(
                f"{path}: header {header} does not match schema columns "
                f"{list(table_def.columns)}"
            )
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}")
            values = tuple(v if v != "" else None for v in record)
            yield _row_key(table_def, values), Row(table=table_def.name, values=values)


def load_dataset(schema: SchemaDescriptor, directory: str | Path) -> Dataset:
    """Load every table's CSV from ``directory``.

    Foreign-key values are not checked here: a dangling value simply produces
    no link later.
    """
    directory = Path(directory)
    ds = Dataset(schema=schema)
    for table_def in schema.tables:
        path = directory / f"{table_def.name}.csv"
        if not path.exists():
            raise DatasetError(f"missing row file for table {table_def.name!r}: {path}")
        for key, row in load_rows(table_def, path):
            ds.add_row(key, row)
    return ds
