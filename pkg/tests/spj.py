"""Random SPJ corpus generator plus a brute-force why-provenance oracle.

The oracle works from a declarative query spec and raw table dumps, never
from the package's AST or rewriter, so it stays an independent check: it
enumerates every tuple combination of the cross product of the referenced
tables and keeps the combinations whose projection equals the target row.
"""

from __future__ import annotations

import itertools
import json
import random
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

WORDS = ["amber", "basalt", "cedar", "delta", "ember", "flint", "garnet", "harbor"]
OPS = ["=", "!=", ">", "<", ">=", "<="]


@dataclass
class SpjTable:
    name: str
    columns: list[tuple[str, str]]  # (name, "int"|"text")
    rows: list[tuple] = field(default_factory=list)


@dataclass
class SpjQuery:
    tables: list[str]
    joins: list[tuple[str, str, str, str]]  # (t1, c1, t2, c2)
    filters: list[tuple[str, str, str, object]]  # (table, column, op, literal)
    select: list[tuple[str, str]]
    distinct: bool = False

    def sql(self) -> str:
        items = ", ".join(f"{t}.{c}" for t, c in self.select)
        head = f"SELECT {'DISTINCT ' if self.distinct else ''}{items} FROM {self.tables[0]}"
        for idx, table in enumerate(self.tables[1:], start=1):
            t1, c1, t2, c2 = self.joins[idx - 1]
            head += f" JOIN {table} ON {t1}.{c1} = {t2}.{c2}"
        conds = []
        for table, column, op, literal in self.filters:
            value = f"'{literal}'" if isinstance(literal, str) else str(literal)
            conds.append(f"{table}.{column} {op} {value}")
        if conds:
            head += " WHERE " + " AND ".join(conds)
        return head


def random_spj_database(rng: random.Random, root: Path, db_id: str,
                        max_rows: int = 50) -> list[SpjTable]:
    """2-4 tables with overlapping small int domains so joins hit often."""
    n_tables = rng.randint(2, 4)
    tables = []
    for t in range(n_tables):
        columns = [("rid", "int"), ("a", "int"), ("b", "text"), ("c", "int")]
        n_rows = rng.randint(4, max_rows)
        rows = []
        for r in range(n_rows):
            rows.append(
                (
                    r + 1,
                    rng.randint(0, 6),
                    rng.choice(WORDS),
                    rng.randint(0, 20) if rng.random() > 0.05 else None,
                )
            )
        tables.append(SpjTable(name=f"t{t}", columns=columns, rows=rows))

    db_dir = root / "database" / db_id
    db_dir.mkdir(parents=True, exist_ok=True)
    path = db_dir / f"{db_id}.sqlite"
    if path.exists():
        path.unlink()
    conn = sqlite3.connect(path)
    for table in tables:
        cols = ", ".join(
            f"{name} {'INT' if kind == 'int' else 'TEXT'}" for name, kind in table.columns
        )
        conn.execute(f"CREATE TABLE {table.name} ({cols})")
        marks = ", ".join("?" for _ in table.columns)
        conn.executemany(f"INSERT INTO {table.name} VALUES ({marks})", table.rows)
    conn.commit()
    conn.close()
    return tables


def spj_tables_json_entry(db_id: str, tables: list[SpjTable], with_pk: bool) -> dict:
    names = [t.name for t in tables]
    column_names = [[-1, "*"]]
    column_types = ["text"]
    primary_keys = []
    for tab_idx, table in enumerate(tables):
        for name, kind in table.columns:
            column_names.append([tab_idx, name])
            column_types.append("number" if kind == "int" else "text")
            if with_pk and name == "rid":
                primary_keys.append(len(column_names) - 1)
    return {
        "db_id": db_id,
        "table_names_original": names,
        "column_names_original": column_names,
        "column_types": column_types,
        "primary_keys": primary_keys,
        "foreign_keys": [],
    }


def random_spj_query(rng: random.Random, tables: list[SpjTable]) -> SpjQuery:
    k = rng.randint(1, min(3, len(tables)))
    chosen = rng.sample(tables, k)
    joins = []
    for idx in range(1, k):
        left = chosen[rng.randrange(idx)]
        right = chosen[idx]
        join_col = rng.choice(["a", "c", "a"])
        joins.append((left.name, join_col, right.name, join_col))
    filters = []
    for _ in range(rng.randint(0, 2)):
        table = rng.choice(chosen)
        column, kind = rng.choice(table.columns[1:])
        populated = [row[dict((c[0], i) for i, c in enumerate(table.columns))[column]]
                     for row in table.rows]
        populated = [v for v in populated if v is not None]
        if not populated:
            continue
        literal = rng.choice(populated)
        op = rng.choice(OPS if kind == "int" else ["=", "!="])
        filters.append((table.name, column, op, literal))
    n_select = rng.randint(1, 3)
    pool = [(t.name, c[0]) for t in chosen for c in t.columns[1:]]
    select = rng.sample(pool, min(n_select, len(pool)))
    return SpjQuery(
        tables=[t.name for t in chosen],
        joins=joins,
        filters=filters,
        select=select,
        distinct=rng.random() < 0.2,
    )


# --- oracle ------------------------------------------------------------------

def _match_scalar(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return float(a) == float(b)
    return a == b


def _compare(a, op: str, b) -> bool:
    if a is None or b is None:
        return False  # SQL three-valued logic: comparisons with NULL never hold
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == ">":
        return a > b
    if op == "<":
        return a < b
    if op == ">=":
        return a >= b
    if op == "<=":
        return a <= b
    raise ValueError(op)


def brute_force_why_provenance(
    db_path: Path, query: SpjQuery, target_row: tuple
) -> set[tuple]:
    """All rowid combinations (in FROM order) whose joined tuple passes the
    predicates and projects onto the target row."""
    conn = sqlite3.connect(db_path)
    dumps = {}
    layouts = {}
    for table in query.tables:
        cursor = conn.execute(f"SELECT rowid, * FROM {table}")
        names = [d[0] for d in cursor.description][1:]
        layouts[table] = {name: idx for idx, name in enumerate(names)}
        dumps[table] = [(row[0], tuple(row[1:])) for row in cursor.fetchall()]
    conn.close()

    witnesses = set()
    for combo in itertools.product(*(dumps[t] for t in query.tables)):
        values = {t: row for (t, (rid, row)) in zip(query.tables, combo)}
        ok = True
        for t1, c1, t2, c2 in query.joins:
            if not _compare(values[t1][layouts[t1][c1]], "=", values[t2][layouts[t2][c2]]):
                ok = False
                break
        if ok:
            for table, column, op, literal in query.filters:
                if not _compare(values[table][layouts[table][column]], op, literal):
                    ok = False
                    break
        if not ok:
            continue
        projected = tuple(values[t][layouts[t][c]] for t, c in query.select)
        if len(projected) == len(target_row) and all(
            _match_scalar(a, b) for a, b in zip(projected, target_row)
        ):
            witnesses.add(tuple(rid for (rid, _row) in combo))
    return witnesses


def build_spj_corpus(root: Path, seed: int, n_queries: int, max_rows: int = 50,
                     n_databases: int = 6):
    """Seeded databases plus queries guaranteed to return at least one row.

    Returns (db_specs, cases) where cases are (db_id, SpjQuery) pairs.
    """
    rng = random.Random(seed)
    db_specs = {}
    entries = []
    for d in range(n_databases):
        db_id = f"spj_{d}"
        tables = random_spj_database(rng, root, db_id, max_rows=max_rows)
        db_specs[db_id] = tables
        entries.append(spj_tables_json_entry(db_id, tables, with_pk=rng.random() < 0.5))
    (root / "tables.json").write_text(json.dumps(entries), encoding="utf-8")

    cases = []
    attempts = 0
    while len(cases) < n_queries and attempts < n_queries * 60:
        attempts += 1
        db_id = rng.choice(sorted(db_specs))
        query = random_spj_query(rng, db_specs[db_id])
        path = root / "database" / db_id / f"{db_id}.sqlite"
        conn = sqlite3.connect(path)
        try:
            rows = conn.execute(query.sql()).fetchmany(500)
        finally:
            conn.close()
        if rows:
            cases.append((db_id, query))
    assert len(cases) == n_queries, f"only generated {len(cases)} non-empty queries"
    return db_specs, cases
