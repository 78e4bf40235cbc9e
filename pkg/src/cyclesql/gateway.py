"""SQLite access: Spider dataset loading, execution, provenance retrieval,
and bag-semantics result comparison.

Connections are opened read-only and are not shared between workers; the
catalog is immutable after loading.
"""

from __future__ import annotations

import sqlite3
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyProvenance, SqlExecutionError, Timeout
from .parser import parse
from .rewriter import (
    ROWID_PREFIX,
    BranchRewrite,
    ResultSet,
    RewrittenQuery,
    result_columns_for,
)
from .schema import DatabaseSchema, SchemaCatalog, load_tables_json
from .sqlast import ColumnRef, SqlQuery, render_statement

DEFAULT_MAX_ROWS = 10_000
DEFAULT_TIMEOUT = 30.0


@dataclass
class ExecutionLimits:
    timeout: float = DEFAULT_TIMEOUT
    max_rows: int = DEFAULT_MAX_ROWS


@dataclass
class ProvenanceTable:
    """Rows retrieved by the provenance query, with synthetic tuple ids.

    ``row_origins`` maps each row to the rowids of the base-table tuples it
    was built from, keyed by table name; ``branch_ids`` tracks which set-op
    branch produced each row.
    """

    tuple_ids: list[str]
    columns: list[ColumnRef]
    rows: list[tuple]
    source_query: RewrittenQuery
    row_origins: list[dict[str, int]] = field(default_factory=list)
    branch_ids: list[int] = field(default_factory=list)
    pk_columns: set[tuple[str, str]] = field(default_factory=set)


def load_catalog(db_root: str | Path, tables_json: str | Path | None = None) -> SchemaCatalog:
    """Load a Spider-layout dataset: ``db_root/database/<db_id>/<db_id>.sqlite``
    plus a ``tables.json`` catalog (defaults to ``db_root/tables.json``)."""
    db_root = Path(db_root)
    tables_json = Path(tables_json) if tables_json else db_root / "tables.json"
    catalog = load_tables_json(tables_json)
    for db_id in catalog.databases:
        if not _db_path(db_root, db_id).exists():
            catalog.warnings.append(f"missing database file for {db_id}")
    return catalog


def _db_path(db_root: Path, db_id: str) -> Path:
    return db_root / "database" / db_id / f"{db_id}.sqlite"


class DbGateway:
    """Executes queries against the databases of one Spider-layout root."""

    def __init__(self, db_root: str | Path, catalog: SchemaCatalog | None = None,
                 tables_json: str | Path | None = None):
        self.db_root = Path(db_root)
        self.catalog = catalog or load_catalog(db_root, tables_json)

    def schema(self, db_id: str) -> DatabaseSchema:
        return self.catalog.database(db_id)

    def connect(self, db_id: str) -> sqlite3.Connection:
        path = _db_path(self.db_root, db_id)
        if not path.exists():
            raise SqlExecutionError(f"database file not found: {path}")
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
        conn.text_factory = str
        return conn

    def execute(
        self,
        db_id: str,
        query: SqlQuery | str,
        limits: ExecutionLimits | None = None,
    ) -> ResultSet:
        """Run a query and return rows with origin-resolved columns."""
        limits = limits or ExecutionLimits()
        if isinstance(query, str):
            query = parse(query, self.schema(db_id), db_id=db_id)
        sql = render_statement(query.statement)
        rows, names = self._run(db_id, sql, limits)
        columns = result_columns_for(query, names)
        truncated = len(rows) > limits.max_rows
        if truncated:
            rows = rows[: limits.max_rows]
        return ResultSet(columns=columns, rows=rows, truncated=truncated)

    def execute_raw(self, db_id: str, sql: str, limits: ExecutionLimits | None = None):
        limits = limits or ExecutionLimits()
        return self._run(db_id, sql, limits)

    def _run(self, db_id: str, sql: str, limits: ExecutionLimits) -> tuple[list[tuple], list[str]]:
        conn = self.connect(db_id)
        deadline = time.monotonic() + limits.timeout

        def watchdog():
            return 1 if time.monotonic() > deadline else 0

        conn.set_progress_handler(watchdog, 50_000)
        try:
            cursor = conn.execute(sql)
            names = [d[0] for d in cursor.description] if cursor.description else []
            rows = cursor.fetchmany(limits.max_rows + 1)
            return [tuple(r) for r in rows], names
        except sqlite3.OperationalError as exc:
            if "interrupted" in str(exc):
                raise Timeout(f"query exceeded {limits.timeout}s: {sql}") from exc
            raise SqlExecutionError(str(exc)) from exc
        except sqlite3.Error as exc:
            raise SqlExecutionError(str(exc)) from exc
        finally:
            conn.close()

    def fetch_provenance(
        self,
        db_id: str,
        rewritten: RewrittenQuery,
        limits: ExecutionLimits | None = None,
    ) -> ProvenanceTable:
        """Execute the rewritten branches and assemble the provenance table.

        Tuple ids take the driving table's first letter plus that table's
        rowid; when fan-out repeats a driving rowid the ids fall back to
        sequential numbering so they stay unique.
        """
        limits = limits or ExecutionLimits()
        column_order: list[ColumnRef] = []
        merged_rows: list[dict] = []
        origins: list[dict[str, int]] = []
        branch_ids: list[int] = []
        driving_rowids: list[int | None] = []
        pk_columns: set[tuple[str, str]] = set()

        for branch_idx, branch in enumerate(rewritten.branches):
            sql = render_statement(branch.query)
            rows, names = self._run(db_id, sql, limits)
            visible, rowid_slots = self._split_rowids(branch, names)
            for ref in visible.values():
                if all(existing.key() != ref.key() for existing in column_order):
                    column_order.append(ref)
            schema = self.catalog.databases.get(db_id)
            if schema:
                for src in branch.query.sources:
                    tdef = schema.table(src.name)
                    if tdef:
                        pk_columns.update((src.name, pk) for pk in tdef.primary_keys)
            for row in rows:
                values = {ref.key(): row[idx] for idx, ref in visible.items()}
                rids = {table: row[idx] for table, idx in rowid_slots.items()}
                merged_rows.append(values)
                origins.append(rids)
                branch_ids.append(branch_idx)
                driving_rowids.append(rids.get(branch.driving_table))

        if not merged_rows:
            raise EmptyProvenance("provenance query returned no rows")

        prefix = rewritten.branches[0].driving_table[:1].upper() or "T"
        ids = _assign_tuple_ids(prefix, driving_rowids)
        rows_out = [tuple(row.get(ref.key()) for ref in column_order) for row in merged_rows]
        return ProvenanceTable(
            tuple_ids=ids,
            columns=column_order,
            rows=rows_out,
            source_query=rewritten,
            row_origins=origins,
            branch_ids=branch_ids,
            pk_columns=pk_columns,
        )

    @staticmethod
    def _split_rowids(branch: BranchRewrite, names: list[str]):
        """Partition cursor columns into visible provenance columns and the
        hidden per-table rowid slots."""
        visible: dict[int, ColumnRef] = {}
        rowid_slots: dict[str, int] = {}
        select_refs = _branch_output_refs(branch)
        for idx, name in enumerate(names):
            if name.startswith(ROWID_PREFIX):
                rowid_slots[name[len(ROWID_PREFIX):]] = idx
                continue
            ref = select_refs.get(idx)
            if ref is None:
                if "." in name:
                    table, column = name.split(".", 1)
                    ref = ColumnRef(table=table, column=column)
                else:
                    ref = ColumnRef(table=None, column=name.lower())
            visible[idx] = ref
        return visible, rowid_slots


def _branch_output_refs(branch: BranchRewrite) -> dict[int, ColumnRef]:
    from .sqlast import Col

    refs: dict[int, ColumnRef] = {}
    for idx, item in enumerate(branch.query.items):
        if isinstance(item.expr, Col):
            refs[idx] = item.expr.ref
    return refs


def _assign_tuple_ids(prefix: str, driving_rowids: list[int | None]) -> list[str]:
    usable = [r for r in driving_rowids if r is not None]
    if len(usable) == len(driving_rowids) and len(set(usable)) == len(usable):
        return [f"{prefix}{rid}" for rid in driving_rowids]
    return [f"{prefix}{i}" for i in range(1, len(driving_rowids) + 1)]


# --- bag-semantics comparison --------------------------------------------------

def normalize_value(value):
    """Canonical comparison key: numerics agree across int/float (1 == 1.0,
    9 significant digits), strings compare exactly."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("num", "1" if value else "0")
    if isinstance(value, (int, float)):
        return ("num", f"{float(value):.9g}")
    if isinstance(value, bytes):
        return ("bytes", value)
    return ("str", value)


def normalize_row(row) -> tuple:
    return tuple(normalize_value(v) for v in row)


def bag_equal(a: ResultSet | list, b: ResultSet | list) -> bool:
    """Multiset equality of rows after per-value normalization; order never
    matters, multiplicity always does."""
    rows_a = a.rows if isinstance(a, ResultSet) else a
    rows_b = b.rows if isinstance(b, ResultSet) else b
    return Counter(map(normalize_row, rows_a)) == Counter(map(normalize_row, rows_b))
