"""AST for the Spider-style SQLite subset, plus rendering and query units.

Nodes are plain dataclasses and treated as immutable after parsing; the
rewriter builds modified copies instead of mutating shared trees.  The
``key()`` functions produce alias-free structural tuples used for round-trip
checks, deduplication, and exact-match normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

AGG_FUNCTIONS = ("max", "min", "count", "sum", "avg")
COMPARE_OPS = ("=", "!=", "<>", ">=", "<=", ">", "<", "like", "in", "between", "is")
ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class ColumnRef:
    """Canonical (lowercase) reference; ``alias`` is only a rendering hint."""

    table: str | None
    column: str
    alias: str | None = None
    resolved: bool = True

    def key(self):
        return ("col", self.table, self.column)

    def __str__(self):
        return f"{self.table}.{self.column}" if self.table else self.column


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float, None]
    quoted: bool = False

    def key(self):
        return ("lit", self.quoted, self.value)


@dataclass(frozen=True)
class Star:
    table: str | None = None

    def key(self):
        return ("star", self.table)


@dataclass(frozen=True)
class Col:
    ref: ColumnRef

    def key(self):
        return self.ref.key()


@dataclass(frozen=True)
class Agg:
    fn: str
    arg: "Expr"
    distinct: bool = False

    def key(self):
        return ("agg", self.fn, self.distinct, self.arg.key())


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Expr"
    right: "Expr"

    def key(self):
        return ("arith", self.op, self.left.key(), self.right.key())


Expr = Union[Literal, Star, Col, Agg, Arith]


@dataclass(frozen=True)
class Predicate:
    """One comparison; ``right`` may be an expression, literal list (IN),
    (lo, hi) pair (BETWEEN), or a nested statement (IN/compare subquery)."""

    left: Expr
    op: str
    right: object
    negated: bool = False

    def key(self):
        return ("pred", self.op, self.negated, self.left.key(), _right_key(self.right))


def _right_key(right):
    if right is None:
        return None
    if isinstance(right, (SelectStatement, SetOpStatement)):
        return right.key()
    if isinstance(right, tuple):
        return tuple(_right_key(r) for r in right)
    if isinstance(right, list):
        return tuple(_right_key(r) for r in right)
    return right.key()


@dataclass(frozen=True)
class ConditionList:
    """Flat AND/OR chain: ``connectors[i]`` joins ``items[i]`` to the left."""

    items: tuple
    connectors: tuple  # len == len(items); connectors[0] == ""

    def key(self):
        return ("conds", tuple(self.connectors), tuple(i.key() for i in self.items))

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)


def make_conditions(items, connectors=None) -> ConditionList:
    items = tuple(items)
    if connectors is None:
        connectors = ("",) + ("and",) * (len(items) - 1) if items else ()
    return ConditionList(items=items, connectors=tuple(connectors))


def and_conditions(base: ConditionList | None, extra) -> ConditionList:
    """Conjoin extra predicates onto an existing condition list."""
    extra = list(extra)
    if base is None or not base.items:
        return make_conditions(extra)
    items = list(base.items) + extra
    connectors = list(base.connectors) + ["and"] * len(extra)
    return ConditionList(items=tuple(items), connectors=tuple(connectors))


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    output_alias: str | None = None

    def key(self):
        return ("item", self.expr.key())


@dataclass(frozen=True)
class TableSource:
    name: str
    alias: str | None = None

    def key(self):
        return ("table", self.name)


@dataclass(frozen=True)
class Join:
    source: TableSource
    on: ConditionList | None = None
    kind: str = "join"  # or "left join"

    def key(self):
        return ("join", self.kind, self.source.key(), self.on.key() if self.on else None)


@dataclass(frozen=True)
class OrderBy:
    exprs: tuple
    direction: str = "asc"

    def key(self):
        return ("order", self.direction, tuple(e.key() for e in self.exprs))


@dataclass(frozen=True)
class SelectStatement:
    items: tuple
    from_source: TableSource
    joins: tuple = ()
    where: ConditionList | None = None
    group_by: tuple = ()
    having: ConditionList | None = None
    order_by: OrderBy | None = None
    limit: int | None = None
    distinct: bool = False

    def key(self):
        return (
            "select",
            self.distinct,
            tuple(i.key() for i in self.items),
            self.from_source.key(),
            tuple(j.key() for j in self.joins),
            self.where.key() if self.where else None,
            tuple(g.key() for g in self.group_by),
            self.having.key() if self.having else None,
            self.order_by.key() if self.order_by else None,
            self.limit,
        )

    @property
    def sources(self) -> list[TableSource]:
        return [self.from_source] + [j.source for j in self.joins]


@dataclass(frozen=True)
class SetOpStatement:
    op: str  # "union" | "union all" | "intersect" | "except"
    left: "Statement"
    right: "Statement"

    def key(self):
        return ("setop", self.op, self.left.key(), self.right.key())


Statement = Union[SelectStatement, SetOpStatement]


@dataclass
class QueryUnit:
    """One clause-level chunk of the statement text.

    Subqueries stay whole: a nested SELECT becomes a single child unit with
    ``is_subquery=True`` carrying the enclosing clause's kind.
    """

    clause_kind: str  # select|from|join|where|group_by|having|order_by|limit|set_op
    elements: list = field(default_factory=list)
    source_span: tuple[int, int] = (0, 0)
    is_subquery: bool = False
    children: list["QueryUnit"] = field(default_factory=list)


@dataclass(frozen=True)
class UnitElement:
    kind: str  # column|table|literal|aggregate|star|subquery
    column: ColumnRef | None = None
    table: str | None = None
    value: object = None
    fn: str | None = None


@dataclass
class SqlQuery:
    """A parsed statement plus its clause decomposition."""

    raw_text: str
    statement: Statement
    units: list[QueryUnit] = field(default_factory=list)
    unresolved: list[ColumnRef] = field(default_factory=list)
    db_id: str | None = None

    def key(self):
        return self.statement.key()

    def render(self) -> str:
        return render_statement(self.statement)

    @property
    def branches(self) -> list[SelectStatement]:
        return flatten_branches(self.statement)


def flatten_branches(stmt: Statement) -> list[SelectStatement]:
    if isinstance(stmt, SelectStatement):
        return [stmt]
    return flatten_branches(stmt.left) + flatten_branches(stmt.right)


def set_op_kinds(stmt: Statement) -> list[str]:
    if isinstance(stmt, SelectStatement):
        return []
    return set_op_kinds(stmt.left) + [stmt.op] + set_op_kinds(stmt.right)


# --- rendering -------------------------------------------------------------

def render_literal(lit: Literal) -> str:
    if lit.value is None:
        return "NULL"
    if lit.quoted:
        escaped = str(lit.value).replace("'", "''")
        return f"'{escaped}'"
    return str(lit.value)


def quote_sql_value(value) -> Literal:
    """Wrap a Python value from a result row as a SQL literal (SQLite rules)."""
    if value is None:
        return Literal(None)
    if isinstance(value, (int, float)):
        return Literal(value)
    if isinstance(value, bytes):
        return Literal(value.decode("utf-8", "replace"), quoted=True)
    return Literal(str(value), quoted=True)


def render_column(ref: ColumnRef, aliases: dict[str, str] | None = None) -> str:
    if ref.table is None:
        return ref.column
    prefix = ref.alias
    if aliases and ref.table in aliases:
        prefix = aliases[ref.table]
    return f"{prefix or ref.table}.{ref.column}"


def render_expr(expr: Expr, aliases=None) -> str:
    if isinstance(expr, Literal):
        return render_literal(expr)
    if isinstance(expr, Star):
        return f"{expr.table}.*" if expr.table else "*"
    if isinstance(expr, Col):
        return render_column(expr.ref, aliases)
    if isinstance(expr, Agg):
        inner = render_expr(expr.arg, aliases)
        if expr.distinct:
            inner = f"DISTINCT {inner}"
        return f"{expr.fn}({inner})"
    if isinstance(expr, Arith):
        return f"{render_expr(expr.left, aliases)} {expr.op} {render_expr(expr.right, aliases)}"
    raise TypeError(f"cannot render {expr!r}")


def render_predicate(pred: Predicate, aliases=None) -> str:
    left = render_expr(pred.left, aliases)
    op = pred.op.upper() if pred.op in ("like", "in", "between", "is") else pred.op
    neg = "NOT " if pred.negated else ""
    if pred.op == "between":
        lo, hi = pred.right
        return f"{left} {neg}BETWEEN {render_expr(lo, aliases)} AND {render_expr(hi, aliases)}"
    if pred.op == "in":
        if isinstance(pred.right, (SelectStatement, SetOpStatement)):
            # nested scope renders with its own alias map
            return f"{left} {neg}IN ({render_statement(pred.right)})"
        inner = ", ".join(render_expr(v, aliases) for v in pred.right)
        return f"{left} {neg}IN ({inner})"
    if pred.op == "is":
        return f"{left} IS {'NOT ' if pred.negated else ''}NULL"
    if isinstance(pred.right, (SelectStatement, SetOpStatement)):
        return f"{left} {op} ({render_statement(pred.right, aliases)})"
    return f"{left} {op} {render_expr(pred.right, aliases)}"


def render_conditions(conds: ConditionList, aliases=None) -> str:
    parts = []
    for conn, item in zip(conds.connectors, conds.items):
        if conn:
            parts.append(conn.upper())
        parts.append(render_predicate(item, aliases))
    return " ".join(parts)


def render_statement(stmt: Statement, aliases=None) -> str:
    if isinstance(stmt, SetOpStatement):
        return (
            f"{render_statement(stmt.left)} {stmt.op.upper()} {render_statement(stmt.right)}"
        )
    if aliases is None:
        aliases = {}
        for src in stmt.sources:
            if src.alias:
                aliases[src.name] = src.alias
    out = ["SELECT"]
    if stmt.distinct:
        out.append("DISTINCT")
    out.append(", ".join(_render_item(i, aliases) for i in stmt.items))
    out.append("FROM")
    out.append(_render_source(stmt.from_source))
    for join in stmt.joins:
        out.append(join.kind.upper())
        out.append(_render_source(join.source))
        if join.on:
            out.append("ON")
            out.append(render_conditions(join.on, aliases))
    if stmt.where:
        out.append("WHERE")
        out.append(render_conditions(stmt.where, aliases))
    if stmt.group_by:
        out.append("GROUP BY")
        out.append(", ".join(render_expr(g, aliases) for g in stmt.group_by))
    if stmt.having:
        out.append("HAVING")
        out.append(render_conditions(stmt.having, aliases))
    if stmt.order_by:
        out.append("ORDER BY")
        rendered = ", ".join(render_expr(e, aliases) for e in stmt.order_by.exprs)
        out.append(f"{rendered} {stmt.order_by.direction.upper()}")
    if stmt.limit is not None:
        out.append(f"LIMIT {stmt.limit}")
    return " ".join(out)


def _render_item(item: SelectItem, aliases) -> str:
    base = render_expr(item.expr, aliases)
    if item.output_alias:
        return f'{base} AS "{item.output_alias}"'
    return base


def _render_source(src: TableSource) -> str:
    if src.alias:
        return f"{src.name} AS {src.alias}"
    return src.name


# --- tree walking helpers ---------------------------------------------------

def iter_expr_columns(expr: Expr):
    if isinstance(expr, Col):
        yield expr.ref
    elif isinstance(expr, Agg):
        yield from iter_expr_columns(expr.arg)
    elif isinstance(expr, Arith):
        yield from iter_expr_columns(expr.left)
        yield from iter_expr_columns(expr.right)


def iter_predicate_columns(pred: Predicate, include_subqueries=True):
    yield from iter_expr_columns(pred.left)
    right = pred.right
    if isinstance(right, (SelectStatement, SetOpStatement)):
        if include_subqueries:
            yield from iter_statement_columns(right)
    elif isinstance(right, tuple):
        for r in right:
            if isinstance(r, (Literal,)):
                continue
            yield from iter_expr_columns(r)
    elif isinstance(right, list):
        pass
    elif right is not None and not isinstance(right, Literal):
        yield from iter_expr_columns(right)


def iter_statement_columns(stmt: Statement, include_subqueries=True):
    """Every column reference in the statement, subqueries included."""
    for branch in flatten_branches(stmt):
        for item in branch.items:
            yield from iter_expr_columns(item.expr)
        for join in branch.joins:
            if join.on:
                for pred in join.on:
                    yield from iter_predicate_columns(pred, include_subqueries)
        if branch.where:
            for pred in branch.where:
                yield from iter_predicate_columns(pred, include_subqueries)
        for g in branch.group_by:
            yield from iter_expr_columns(g)
        if branch.having:
            for pred in branch.having:
                yield from iter_predicate_columns(pred, include_subqueries)
        if branch.order_by:
            for e in branch.order_by.exprs:
                yield from iter_expr_columns(e)


def expr_has_aggregate(expr: Expr) -> bool:
    if isinstance(expr, Agg):
        return True
    if isinstance(expr, Arith):
        return expr_has_aggregate(expr.left) or expr_has_aggregate(expr.right)
    return False


def predicate_has_aggregate(pred: Predicate) -> bool:
    if expr_has_aggregate(pred.left):
        return True
    right = pred.right
    if isinstance(right, (Literal, SelectStatement, SetOpStatement)) or right is None:
        return False
    if isinstance(right, (tuple, list)):
        return any(isinstance(r, (Agg, Arith)) and expr_has_aggregate(r) for r in right)
    return expr_has_aggregate(right)


def statement_has_aggregate(stmt: Statement) -> bool:
    for branch in flatten_branches(stmt):
        if any(expr_has_aggregate(i.expr) for i in branch.items):
            return True
        if branch.group_by:
            return True
        if branch.having:
            return True
        if branch.order_by and any(expr_has_aggregate(e) for e in branch.order_by.exprs):
            return True
    return False


def replace_branch(stmt: Statement, index: int, new_branch: SelectStatement) -> Statement:
    """Rebuild the statement with branch ``index`` (flattened order) swapped."""
    counter = [0]

    def rebuild(node):
        if isinstance(node, SelectStatement):
            current = counter[0]
            counter[0] += 1
            return new_branch if current == index else node
        return replace(node, left=rebuild(node.left), right=rebuild(node.right))

    return rebuild(stmt)
