"""Schema catalog types and Spider ``tables.json`` ingestion.

All identifiers are normalized to lowercase internally (SQLite resolves
identifiers case-insensitively); string literals are never touched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedCatalog


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type_tag: str = "text"
    is_primary_key: bool = False


@dataclass(frozen=True)
class ForeignKey:
    local_column: str
    foreign_table: str
    foreign_column: str


@dataclass
class TableDef:
    name: str
    columns: list[ColumnDef] = field(default_factory=list)
    foreign_keys: list[ForeignKey] = field(default_factory=list)

    def column(self, name: str) -> ColumnDef | None:
        low = name.lower()
        for col in self.columns:
            if col.name == low:
                return col
        return None

    @property
    def primary_keys(self) -> list[str]:
        return [c.name for c in self.columns if c.is_primary_key]


@dataclass
class DatabaseSchema:
    db_id: str
    tables: dict[str, TableDef] = field(default_factory=dict)

    def table(self, name: str) -> TableDef | None:
        return self.tables.get(name.lower())

    def has_column(self, table: str, column: str) -> bool:
        tdef = self.table(table)
        return tdef is not None and tdef.column(column) is not None

    def tables_with_column(self, column: str) -> list[str]:
        return [t.name for t in self.tables.values() if t.column(column)]

    def fk_edges(self) -> list[tuple[str, str, str, str]]:
        """All (child_table, child_column, parent_table, parent_column) links."""
        edges = []
        for tdef in self.tables.values():
            for fk in tdef.foreign_keys:
                edges.append((tdef.name, fk.local_column, fk.foreign_table, fk.foreign_column))
        return edges


@dataclass
class SchemaCatalog:
    databases: dict[str, DatabaseSchema] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def database(self, db_id: str) -> DatabaseSchema:
        if db_id not in self.databases:
            raise KeyError(f"unknown db_id: {db_id}")
        return self.databases[db_id]

    def __contains__(self, db_id: str) -> bool:
        return db_id in self.databases


@dataclass(frozen=True)
class NlQuery:
    """A natural-language question bound to a database."""

    text: str
    db_id: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text is empty")


def load_tables_json(path: str | Path) -> SchemaCatalog:
    """Parse a Spider-format tables.json file into a catalog.

    Raises MalformedCatalog when required fields are missing or foreign keys
    reference nonexistent columns.
    """
    path = Path(path)
    raw = path.read_text(encoding="utf-8")  # missing file surfaces as OSError
    try:
        entries = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedCatalog(f"cannot parse {path}: {exc}") from exc
    if not isinstance(entries, list):
        raise MalformedCatalog("tables.json top level must be a list")

    catalog = SchemaCatalog()
    for entry in entries:
        schema = _parse_entry(entry)
        catalog.databases[schema.db_id] = schema
    return catalog


def _parse_entry(entry: dict) -> DatabaseSchema:
    try:
        db_id = entry["db_id"]
        table_names = entry["table_names_original"]
        column_names = entry["column_names_original"]
        column_types = entry.get("column_types", ["text"] * len(column_names))
        primary_keys = set(entry.get("primary_keys", []))
        foreign_keys = entry.get("foreign_keys", [])
    except (KeyError, TypeError) as exc:
        raise MalformedCatalog(f"missing field in tables.json entry: {exc}") from exc

    schema = DatabaseSchema(db_id=db_id)
    cols_per_table: dict[int, list[ColumnDef]] = {i: [] for i in range(len(table_names))}
    # column_names[0] is the ("*", -1) sentinel in Spider files
    for col_idx, (tab_idx, col_name) in enumerate(column_names):
        if tab_idx < 0:
            continue
        if tab_idx >= len(table_names):
            raise MalformedCatalog(f"column {col_name!r} references table index {tab_idx}")
        cols_per_table[tab_idx].append(
            ColumnDef(
                name=col_name.lower(),
                type_tag=column_types[col_idx] if col_idx < len(column_types) else "text",
                is_primary_key=col_idx in primary_keys,
            )
        )
    for tab_idx, name in enumerate(table_names):
        low = name.lower()
        if low in schema.tables:
            raise MalformedCatalog(f"duplicate table name {name!r} in {db_id}")
        seen = set()
        for col in cols_per_table[tab_idx]:
            if col.name in seen:
                raise MalformedCatalog(f"duplicate column {col.name!r} in {db_id}.{name}")
            seen.add(col.name)
        schema.tables[low] = TableDef(name=low, columns=cols_per_table[tab_idx])

    flat = [(tab_idx, col_name.lower()) for tab_idx, col_name in column_names]
    for pair in foreign_keys:
        try:
            local_idx, foreign_idx = pair
            lt, lc = flat[local_idx]
            ft, fc = flat[foreign_idx]
        except (ValueError, IndexError, TypeError) as exc:
            raise MalformedCatalog(f"bad foreign_keys entry {pair!r} in {db_id}") from exc
        if lt < 0 or ft < 0:
            raise MalformedCatalog(f"foreign key on the '*' column in {db_id}")
        local_table = table_names[lt].lower()
        foreign_table = table_names[ft].lower()
        if not schema.has_column(foreign_table, fc):
            raise MalformedCatalog(f"foreign key target {foreign_table}.{fc} missing in {db_id}")
        schema.tables[local_table].foreign_keys.append(
            ForeignKey(local_column=lc, foreign_table=foreign_table, foreign_column=fc)
        )
    return schema
