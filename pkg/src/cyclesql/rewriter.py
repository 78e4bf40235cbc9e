"""Provenance-retrieval rewriting of a translated query for one result row.

Three transformations compose in order: pin the to-explain row back into
WHERE (result columns whose origin is an aggregate or asterisk are skipped),
extend the projection with every referenced column plus primary keys, and
strip aggregates/GROUP BY/HAVING while logging the removals for the
annotation phase.  Empty results skip rewriting entirely.

Set-operation queries are rewritten branch by branch; provenance is the
union of branch provenance with the branch recorded per row.  Bag-duplicate
result rows are pinned by value equality, so provenance covers every
duplicate.  All transformations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .errors import RewriteError
from .schema import DatabaseSchema
from .sqlast import (
    Agg,
    Arith,
    Col,
    ColumnRef,
    ConditionList,
    Literal,
    Predicate,
    SelectItem,
    SelectStatement,
    SetOpStatement,
    SqlQuery,
    Star,
    and_conditions,
    expr_has_aggregate,
    flatten_branches,
    iter_expr_columns,
    iter_statement_columns,
    predicate_has_aggregate,
    quote_sql_value,
    render_statement,
    replace_branch,
)

ROWID_PREFIX = "__rid_"


@dataclass(frozen=True)
class AggDescriptor:
    fn: str
    arg: ColumnRef | None  # None for count(*) style
    distinct: bool = False

    def label(self) -> str:
        inner = "*" if self.arg is None else f"{self.arg.column}"
        return f"{self.fn}({'DISTINCT ' if self.distinct else ''}{inner})"


@dataclass(frozen=True)
class StarDescriptor:
    table: str | None = None


Origin = Union[ColumnRef, AggDescriptor, StarDescriptor, None]


@dataclass(frozen=True)
class ResultColumn:
    output_name: str
    origin: Origin = None


ResultRow = tuple


@dataclass
class ResultSet:
    columns: list[ResultColumn]
    rows: list[ResultRow]
    truncated: bool = False

    @property
    def row_count(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class RemovedAggregate:
    descriptor: AggDescriptor
    clause: str  # select | having | order_by
    predicate: Predicate | None = None  # for HAVING removals
    result_value: object = None  # the aggregate's value in the pinned row
    direction: str | None = None  # for ORDER BY removals


@dataclass
class BranchRewrite:
    """Rewrite record for one SELECT branch."""

    query: SelectStatement
    driving_table: str
    added_projections: list[ColumnRef] = field(default_factory=list)
    added_result_condition: ConditionList | None = None
    removed_aggregates: list[RemovedAggregate] = field(default_factory=list)
    removed_group_by: tuple = ()
    skipped_result_columns: list[ResultColumn] = field(default_factory=list)
    rowid_aliases: dict[str, str] = field(default_factory=dict)  # table -> output name
    join_conditions: list[Predicate] = field(default_factory=list)


@dataclass
class RewrittenQuery:
    original: SqlQuery
    branches: list[BranchRewrite]
    set_op: str | None = None

    @property
    def query(self) -> SelectStatement:
        return self.branches[0].query

    @property
    def added_projections(self) -> list[ColumnRef]:
        return [ref for b in self.branches for ref in b.added_projections]

    @property
    def added_result_condition(self) -> ConditionList | None:
        return self.branches[0].added_result_condition

    @property
    def removed_aggregates(self) -> list[RemovedAggregate]:
        return [r for b in self.branches for r in b.removed_aggregates]

    @property
    def removed_group_by(self):
        return self.branches[0].removed_group_by


def result_columns_for(query: SqlQuery, cursor_names: list[str]) -> list[ResultColumn]:
    """Map cursor description names onto select-item origins."""
    branch = flatten_branches(query.statement)[0]
    columns = []
    idx = 0
    for item in branch.items:
        expr = item.expr
        name = cursor_names[idx] if idx < len(cursor_names) else f"col{idx}"
        if isinstance(expr, Star):
            columns.append(ResultColumn(output_name=name, origin=StarDescriptor(expr.table)))
            # the engine widens '*' to many columns; map the remainder too
            extra = len(cursor_names) - len(branch.items)
            for _ in range(extra):
                idx += 1
                if idx < len(cursor_names):
                    columns.append(
                        ResultColumn(output_name=cursor_names[idx], origin=StarDescriptor(expr.table))
                    )
        elif isinstance(expr, Agg):
            arg = next(iter_expr_columns(expr.arg), None)
            columns.append(
                ResultColumn(output_name=name, origin=AggDescriptor(expr.fn, arg, expr.distinct))
            )
        elif isinstance(expr, Col):
            columns.append(ResultColumn(output_name=name, origin=expr.ref))
        else:
            columns.append(ResultColumn(output_name=name, origin=None))
        idx += 1
    return columns


# --- Rule 1: pin the to-explain row back into WHERE --------------------------

def _rule1_branch(branch: SelectStatement, row: ResultRow, result_columns: list[ResultColumn]):
    predicates = []
    skipped = []
    for col, value in zip(result_columns, row):
        origin = col.origin
        if isinstance(origin, ColumnRef) and origin.resolved:
            lit = quote_sql_value(value)
            if lit.value is None:
                predicates.append(Predicate(left=Col(origin), op="is", right=Literal(None)))
            else:
                predicates.append(Predicate(left=Col(origin), op="=", right=lit))
        else:
            skipped.append(col)
    if not predicates:
        return branch, None, skipped
    added = ConditionList(items=tuple(predicates), connectors=("",) + ("and",) * (len(predicates) - 1))
    new_where = and_conditions(branch.where, predicates)
    return replace(branch, where=new_where), added, skipped


def apply_rule1(query: SqlQuery, row: ResultRow, result_columns: list[ResultColumn]) -> SqlQuery:
    """Conjoin ``column = value`` for each origin-resolvable result column."""
    stmt = query.statement
    for idx, branch in enumerate(flatten_branches(stmt)):
        new_branch, _, _ = _rule1_branch(branch, row, result_columns)
        stmt = replace_branch(stmt, idx, new_branch)
    return SqlQuery(raw_text=render_statement(stmt), statement=stmt, db_id=query.db_id)


# --- Rule 2: projection enhancement ------------------------------------------

def _branch_scope_tables(branch: SelectStatement) -> list[str]:
    return [src.name for src in branch.sources]


def _branch_referenced_columns(branch: SelectStatement) -> list[ColumnRef]:
    """Columns referenced in this branch whose tables are in the branch scope.

    Subquery-internal columns over other tables stay inside the subquery.
    """
    scope = set(_branch_scope_tables(branch))
    seen: dict[tuple, ColumnRef] = {}
    for ref in iter_statement_columns(branch):
        if ref.table in scope and ref.resolved:
            seen.setdefault((ref.table, ref.column), ref)
    return list(seen.values())


def _rule2_branch(branch: SelectStatement, schema: DatabaseSchema | None):
    existing = set()
    for item in branch.items:
        if isinstance(item.expr, Col):
            existing.add((item.expr.ref.table, item.expr.ref.column))
    alias_of = {src.name: src.alias for src in branch.sources}

    wanted: list[ColumnRef] = []
    for ref in _branch_referenced_columns(branch):
        wanted.append(ref)
    if schema is not None:
        for table in _branch_scope_tables(branch):
            tdef = schema.table(table)
            if tdef is None:
                continue
            for pk in tdef.primary_keys:
                wanted.append(ColumnRef(table=table, column=pk))

    added = []
    items = list(branch.items)
    for ref in wanted:
        key = (ref.table, ref.column)
        if key in existing:
            continue
        existing.add(key)
        canon = ColumnRef(table=ref.table, column=ref.column, alias=alias_of.get(ref.table))
        items.append(SelectItem(expr=Col(canon), output_alias=f"{ref.table}.{ref.column}"))
        added.append(canon)
    return replace(branch, items=tuple(items)), added


def apply_rule2(query: SqlQuery, schema: DatabaseSchema | None) -> SqlQuery:
    """Project every referenced column plus primary keys of referenced tables."""
    stmt = query.statement
    for idx, branch in enumerate(flatten_branches(stmt)):
        new_branch, _ = _rule2_branch(branch, schema)
        stmt = replace_branch(stmt, idx, new_branch)
    return SqlQuery(raw_text=render_statement(stmt), statement=stmt, db_id=query.db_id)


# --- Rule 3: aggregation deconstruction ---------------------------------------

def _agg_descriptor(agg: Agg) -> AggDescriptor:
    arg = next(iter_expr_columns(agg.arg), None)
    return AggDescriptor(fn=agg.fn, arg=arg, distinct=agg.distinct)


def _rule3_branch(branch: SelectStatement, result_row=None, result_columns=None):
    removed: list[RemovedAggregate] = []
    alias_of = {src.name: src.alias for src in branch.sources}
    existing = {
        (i.expr.ref.table, i.expr.ref.column) for i in branch.items if isinstance(i.expr, Col)
    }

    def value_of(descriptor: AggDescriptor):
        if result_row is None or result_columns is None:
            return None
        for col, value in zip(result_columns, result_row):
            if isinstance(col.origin, AggDescriptor) and col.origin == descriptor:
                return value
        return None

    items: list[SelectItem] = []
    for item in branch.items:
        expr = item.expr
        if not expr_has_aggregate(expr):
            items.append(item)
            continue
        aggs = _collect_aggs(expr)
        for agg in aggs:
            descriptor = _agg_descriptor(agg)
            removed.append(
                RemovedAggregate(descriptor=descriptor, clause="select", result_value=value_of(descriptor))
            )
            for ref in iter_expr_columns(agg.arg):
                key = (ref.table, ref.column)
                if key in existing:
                    continue
                existing.add(key)
                canon = ColumnRef(table=ref.table, column=ref.column, alias=alias_of.get(ref.table))
                items.append(SelectItem(expr=Col(canon), output_alias=f"{ref.table}.{ref.column}"))
    if not items:
        # aggregate-only projection such as bare count(*): fall back to the
        # driving table's star so the statement stays well-formed
        items = [SelectItem(expr=Star())]

    having = branch.having
    removed_having_preds = []
    kept_having = []
    if having is not None:
        for pred in having:
            if predicate_has_aggregate(pred):
                agg = next(iter(_collect_aggs(pred.left)), None)
                descriptor = _agg_descriptor(agg) if agg else AggDescriptor("count", None)
                removed.append(
                    RemovedAggregate(descriptor=descriptor, clause="having", predicate=pred)
                )
                removed_having_preds.append(pred)
            else:
                kept_having.append(pred)

    where = branch.where
    if kept_having:
        where = and_conditions(where, kept_having)

    order_by = branch.order_by
    if order_by is not None:
        kept_exprs = []
        for expr in order_by.exprs:
            if expr_has_aggregate(expr):
                agg = next(iter(_collect_aggs(expr)))
                removed.append(RemovedAggregate(
                    descriptor=_agg_descriptor(agg), clause="order_by",
                    direction=order_by.direction,
                ))
            else:
                kept_exprs.append(expr)
        order_by = replace(order_by, exprs=tuple(kept_exprs)) if kept_exprs else None

    new_branch = replace(
        branch,
        items=tuple(items),
        where=where,
        group_by=(),
        having=None,
        order_by=order_by,
    )
    return new_branch, removed, branch.group_by


def _collect_aggs(expr) -> list[Agg]:
    if isinstance(expr, Agg):
        return [expr]
    if isinstance(expr, Arith):
        return _collect_aggs(expr.left) + _collect_aggs(expr.right)
    return []


def apply_rule3(query: SqlQuery) -> SqlQuery:
    """Strip aggregates, GROUP BY, and aggregate HAVING/ORDER BY terms."""
    stmt = query.statement
    for idx, branch in enumerate(flatten_branches(stmt)):
        new_branch, _, _ = _rule3_branch(branch)
        stmt = replace_branch(stmt, idx, new_branch)
    return SqlQuery(raw_text=render_statement(stmt), statement=stmt, db_id=query.db_id)


# --- composition ---------------------------------------------------------------

def rewrite(
    query: SqlQuery,
    row: ResultRow | None,
    result: ResultSet,
    schema: DatabaseSchema | None,
) -> RewrittenQuery | None:
    """Compose Rule 1 -> 2 -> 3 for the pinned row; None for empty results."""
    if result.row_count == 0 or row is None:
        return None

    branches = []
    statement = query.statement
    kinds = _set_op_kinds(statement)
    for branch in flatten_branches(statement):
        pinned, added_condition, skipped = _rule1_branch(branch, row, result.columns)
        widened, added_projections = _rule2_branch(pinned, schema)
        final, removed_aggs, removed_group = _rule3_branch(widened, row, result.columns)
        if added_condition is not None and final.limit is not None:
            final = replace(final, limit=None)
        final = _expand_stars(final, schema)
        final, rowid_aliases = _add_rowid_projections(final, schema)
        join_conditions = [pred for join in branch.joins if join.on for pred in join.on]
        branches.append(
            BranchRewrite(
                query=final,
                driving_table=branch.from_source.name,
                added_projections=added_projections,
                added_result_condition=added_condition,
                removed_aggregates=removed_aggs,
                removed_group_by=removed_group,
                skipped_result_columns=skipped,
                rowid_aliases=rowid_aliases,
                join_conditions=join_conditions,
            )
        )

    rewritten = RewrittenQuery(
        original=query,
        branches=branches,
        set_op=kinds[0] if kinds else None,
    )
    _guard_reparse(rewritten)
    return rewritten


def _set_op_kinds(stmt) -> list[str]:
    if isinstance(stmt, SetOpStatement):
        return _set_op_kinds(stmt.left) + [stmt.op] + _set_op_kinds(stmt.right)
    return []


def _expand_stars(branch: SelectStatement, schema: DatabaseSchema | None) -> SelectStatement:
    """Replace '*' projections with explicit columns so provenance rows map
    positionally onto canonical references."""
    if schema is None or not any(isinstance(i.expr, Star) for i in branch.items):
        return branch
    alias_of = {src.name: src.alias for src in branch.sources}
    seen = {(i.expr.ref.table, i.expr.ref.column) for i in branch.items if isinstance(i.expr, Col)}
    items: list[SelectItem] = []
    for item in branch.items:
        if not isinstance(item.expr, Star):
            items.append(item)
            continue
        tables = [item.expr.table] if item.expr.table else [s.name for s in branch.sources]
        for table in tables:
            tdef = schema.table(table)
            if tdef is None:
                items.append(item)
                break
            for col in tdef.columns:
                if (table, col.name) in seen:
                    continue
                seen.add((table, col.name))
                ref = ColumnRef(table=table, column=col.name, alias=alias_of.get(table))
                items.append(SelectItem(expr=Col(ref), output_alias=f"{table}.{col.name}"))
    if not items:
        return branch
    return replace(branch, items=tuple(items))


def _add_rowid_projections(branch: SelectStatement, schema: DatabaseSchema | None):
    """Project each base table's rowid so provenance rows map to source tuples."""
    items = list(branch.items)
    aliases: dict[str, str] = {}
    for src in branch.sources:
        out_name = f"{ROWID_PREFIX}{src.name}"
        ref = ColumnRef(table=src.name, column="rowid", alias=src.alias)
        items.append(SelectItem(expr=Col(ref), output_alias=out_name))
        aliases[src.name] = out_name
    return replace(branch, items=tuple(items)), aliases


def _guard_reparse(rewritten: RewrittenQuery) -> None:
    from .parser import parse

    for branch in rewritten.branches:
        text = render_statement(branch.query)
        try:
            reparsed = parse(text)
        except Exception as exc:  # noqa: BLE001 - converted to a bug guard
            raise RewriteError(f"rewritten query does not re-parse: {text!r}: {exc}") from exc
        if _strip_aliases(reparsed.statement.key()) != _strip_aliases(branch.query.key()):
            raise RewriteError(f"rewritten query re-parses differently: {text!r}")


def _strip_aliases(key):
    if isinstance(key, tuple):
        return tuple(_strip_aliases(k) for k in key)
    return key


def rewritten_is_aggregate_free(rewritten: RewrittenQuery) -> bool:
    from .sqlast import statement_has_aggregate

    return all(not statement_has_aggregate(b.query) for b in rewritten.branches)
