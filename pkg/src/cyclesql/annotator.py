"""Overlay clause-level semantics onto the provenance table.

Elements are matched by canonical (table, column) identity after alias
resolution, not by string search.  Aggregates removed during rewriting are
re-attached from the change log.  Asterisk elements annotate the whole table.
Annotation is pure and idempotent; units whose elements have no provenance
column go to the unattached list instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .gateway import ProvenanceTable
from .rewriter import RemovedAggregate, ResultColumn, RewrittenQuery
from .sqlast import (
    Agg,
    Arith,
    Col,
    ColumnRef,
    Literal,
    Predicate,
    SelectStatement,
    SetOpStatement,
    SqlQuery,
    Star,
    flatten_branches,
    iter_expr_columns,
    render_statement,
)

WHOLE_TABLE = "__table__"

KIND_ORDER = {
    "filter": 0,
    "aggregate": 1,
    "grouping": 2,
    "projection": 3,
    "ordering": 4,
    "set_op": 5,
    "table_scope": 6,
}


@dataclass(frozen=True)
class PredicatePayload:
    op: str
    value: object = None
    negated: bool = False
    high_value: object = None  # BETWEEN upper bound


@dataclass(frozen=True)
class AggregatePayload:
    fn: str
    arg: Optional[ColumnRef] = None
    distinct: bool = False
    value: object = None  # the aggregate's value in the explained row
    predicate: Optional[PredicatePayload] = None  # HAVING-derived comparison


@dataclass(frozen=True)
class SubqueryPayload:
    negated: bool
    op: str
    inner_sql: str
    inner_annotations: tuple = ()


@dataclass(frozen=True)
class Annotation:
    kind: str  # filter|aggregate|projection|grouping|ordering|set_op|table_scope
    target: object  # ColumnRef or the WHOLE_TABLE marker
    payload: object = None
    origin: str = "where"  # where|having|result_pin|select|group_by|order_by|from|set_op|limit
    branch: int | None = None

    def sort_key(self):
        target = self.target.key() if isinstance(self.target, ColumnRef) else (self.target,)
        return (KIND_ORDER.get(self.kind, 9), self.branch or 0, target, self.origin)


@dataclass
class EnrichedProvenanceTable:
    base: ProvenanceTable | None
    annotations: list[Annotation] = field(default_factory=list)
    removed_aggregate_annotations: list[Annotation] = field(default_factory=list)
    unattached: list[Annotation] = field(default_factory=list)
    result_row: tuple | None = None
    result_columns: list[ResultColumn] | None = None

    @property
    def all_annotations(self) -> list[Annotation]:
        return self.annotations + self.removed_aggregate_annotations

    def value_of(self, ref: ColumnRef, row_index: int = 0):
        if self.base is None or not self.base.rows:
            return None
        for idx, col in enumerate(self.base.columns):
            if col.key() == ref.key():
                return self.base.rows[row_index][idx]
        return None


def annotate(
    prov: ProvenanceTable,
    original: SqlQuery,
    rewritten: RewrittenQuery,
) -> EnrichedProvenanceTable:
    """Attach each query-unit element's semantics to its provenance column."""
    available = {col.key() for col in prov.columns}
    enriched = EnrichedProvenanceTable(base=prov)
    branches = flatten_branches(original.statement)
    multi = len(branches) > 1

    for idx, branch in enumerate(branches):
        _annotate_branch(enriched, branch, available, idx if multi else None, with_aggregates=False)

    if multi:
        for op in _set_ops(original.statement):
            enriched.annotations.append(
                Annotation(kind="set_op", target=WHOLE_TABLE, payload=op, origin="set_op")
            )

    for idx, branch_rewrite in enumerate(rewritten.branches):
        tag = idx if multi else None
        if branch_rewrite.added_result_condition:
            for pred in branch_rewrite.added_result_condition:
                _attach_predicate(enriched, pred, available, origin="result_pin", branch=tag)
        for removed in branch_rewrite.removed_aggregates:
            annotation = _removed_aggregate_annotation(
                removed, available, tag, branch_rewrite.driving_table
            )
            enriched.removed_aggregate_annotations.append(annotation)

    enriched.annotations.sort(key=lambda a: a.sort_key())
    enriched.removed_aggregate_annotations.sort(key=lambda a: a.sort_key())
    enriched.unattached.sort(key=lambda a: a.sort_key())
    return enriched


def operation_only_semantics(original: SqlQuery) -> EnrichedProvenanceTable:
    """Semantics without data: the empty-result / missing-provenance path."""
    enriched = EnrichedProvenanceTable(base=None)
    branches = flatten_branches(original.statement)
    multi = len(branches) > 1
    for idx, branch in enumerate(branches):
        _annotate_branch(enriched, branch, None, idx if multi else None, with_aggregates=True)
    if multi:
        for op in _set_ops(original.statement):
            enriched.annotations.append(
                Annotation(kind="set_op", target=WHOLE_TABLE, payload=op, origin="set_op")
            )
    enriched.annotations.sort(key=lambda a: a.sort_key())
    return enriched


# --- internals ---------------------------------------------------------------

def _set_ops(stmt) -> list[str]:
    if isinstance(stmt, SetOpStatement):
        return _set_ops(stmt.left) + [stmt.op] + _set_ops(stmt.right)
    return []


def _annotate_branch(
    enriched: EnrichedProvenanceTable,
    branch: SelectStatement,
    available: set | None,
    tag: int | None,
    with_aggregates: bool,
) -> None:
    def add(annotation: Annotation):
        if (
            available is not None
            and isinstance(annotation.target, ColumnRef)
            and annotation.target.key() not in available
        ):
            enriched.unattached.append(annotation)
        else:
            enriched.annotations.append(annotation)

    for src in branch.sources:
        add(Annotation(kind="table_scope", target=WHOLE_TABLE, payload=src.name,
                       origin="from", branch=tag))

    for join in branch.joins:
        if not join.on:
            continue
        for pred in join.on:
            for ref in iter_expr_columns(pred.left):
                add(Annotation(kind="table_scope", target=ref, origin="join", branch=tag))
            if isinstance(pred.right, Col):
                add(Annotation(kind="table_scope", target=pred.right.ref,
                               origin="join", branch=tag))

    for item in branch.items:
        expr = item.expr
        if isinstance(expr, Star):
            add(Annotation(kind="projection", target=WHOLE_TABLE,
                           payload=expr.table, origin="select", branch=tag))
        elif isinstance(expr, Col):
            add(Annotation(kind="projection", target=expr.ref, origin="select", branch=tag))
        elif isinstance(expr, Agg):
            if with_aggregates:
                arg = next(iter_expr_columns(expr.arg), None)
                target = arg if arg is not None else WHOLE_TABLE
                add(Annotation(
                    kind="aggregate", target=target, origin="select", branch=tag,
                    payload=AggregatePayload(fn=expr.fn, arg=arg, distinct=expr.distinct),
                ))
            # otherwise the rewrite change log re-attaches it
        elif isinstance(expr, Arith):
            for ref in iter_expr_columns(expr):
                add(Annotation(kind="projection", target=ref, origin="select", branch=tag))

    if branch.where:
        for pred in branch.where:
            _attach_predicate(enriched, pred, available, origin="where", branch=tag)

    for group_expr in branch.group_by:
        for ref in iter_expr_columns(group_expr):
            add(Annotation(kind="grouping", target=ref, origin="group_by", branch=tag))

    if branch.having and with_aggregates:
        for pred in branch.having:
            _attach_predicate(enriched, pred, available, origin="having", branch=tag)
    elif branch.having:
        from .sqlast import predicate_has_aggregate

        for pred in branch.having:
            if not predicate_has_aggregate(pred):
                _attach_predicate(enriched, pred, available, origin="having", branch=tag)
            # aggregate HAVING predicates arrive via the rewrite change log

    if branch.order_by:
        for expr in branch.order_by.exprs:
            if isinstance(expr, Agg):
                if with_aggregates:
                    arg = next(iter_expr_columns(expr.arg), None)
                    add(Annotation(
                        kind="ordering", target=arg if arg else WHOLE_TABLE,
                        origin="order_by", branch=tag,
                        payload=AggregatePayload(fn=expr.fn, arg=arg, distinct=expr.distinct),
                    ))
            else:
                for ref in iter_expr_columns(expr):
                    add(Annotation(
                        kind="ordering", target=ref, origin="order_by", branch=tag,
                        payload=PredicatePayload(op=branch.order_by.direction),
                    ))

    if branch.limit is not None:
        enriched.unattached.append(
            Annotation(kind="ordering", target=WHOLE_TABLE, origin="limit",
                       payload=PredicatePayload(op="limit", value=branch.limit), branch=tag)
        )


def _attach_predicate(
    enriched: EnrichedProvenanceTable,
    pred: Predicate,
    available: set | None,
    origin: str,
    branch: int | None,
) -> None:
    target = next(iter_expr_columns(pred.left), None)
    annotation = Annotation(
        kind="filter",
        target=target if target is not None else WHOLE_TABLE,
        payload=_predicate_payload(pred),
        origin=origin,
        branch=branch,
    )
    if (
        available is not None
        and isinstance(annotation.target, ColumnRef)
        and annotation.target.key() not in available
    ):
        enriched.unattached.append(annotation)
    else:
        enriched.annotations.append(annotation)


def _predicate_payload(pred: Predicate):
    right = pred.right
    if isinstance(right, (SelectStatement, SetOpStatement)):
        inner = operation_only_semantics(SqlQuery(raw_text="", statement=right))
        return SubqueryPayload(
            negated=pred.negated,
            op=pred.op,
            inner_sql=render_statement(right),
            inner_annotations=tuple(inner.annotations),
        )
    if pred.op == "between":
        lo, hi = right
        return PredicatePayload(
            op="between",
            value=lo.value if isinstance(lo, Literal) else None,
            high_value=hi.value if isinstance(hi, Literal) else None,
            negated=pred.negated,
        )
    if pred.op == "in" and isinstance(right, tuple):
        return PredicatePayload(
            op="in",
            value=tuple(v.value for v in right if isinstance(v, Literal)),
            negated=pred.negated,
        )
    if isinstance(right, Literal):
        return PredicatePayload(op=pred.op, value=right.value, negated=pred.negated)
    if isinstance(right, Col):
        return PredicatePayload(op=pred.op, value=right.ref, negated=pred.negated)
    return PredicatePayload(op=pred.op, negated=pred.negated)


def _removed_aggregate_annotation(
    removed: RemovedAggregate, available: set, tag: int | None,
    driving_table: str | None = None,
) -> Annotation:
    descriptor = removed.descriptor
    arg = descriptor.arg
    # a count over the driving table's own column counts rows of the joined
    # relation, so its semantics sit on the whole table
    counts_rows = descriptor.fn == "count" and (
        arg is None or (driving_table is not None and arg.table == driving_table)
    )
    if counts_rows:
        target = WHOLE_TABLE
    else:
        target = arg if (arg is not None and arg.key() in available) else WHOLE_TABLE
    if removed.clause == "having":
        predicate = None
        if removed.predicate is not None:
            raw = removed.predicate
            value = raw.right.value if isinstance(raw.right, Literal) else None
            predicate = PredicatePayload(op=raw.op, value=value, negated=raw.negated)
        payload = AggregatePayload(
            fn=descriptor.fn, arg=arg, distinct=descriptor.distinct, predicate=predicate
        )
        return Annotation(kind="filter", target=target, payload=payload,
                          origin="having", branch=tag)
    if removed.clause == "order_by":
        payload = AggregatePayload(
            fn=descriptor.fn, arg=arg, distinct=descriptor.distinct,
            predicate=PredicatePayload(op=removed.direction or "asc"),
        )
        return Annotation(kind="ordering", target=target, payload=payload,
                          origin="order_by", branch=tag)
    payload = AggregatePayload(
        fn=descriptor.fn, arg=arg, distinct=descriptor.distinct, value=removed.result_value
    )
    return Annotation(kind="aggregate", target=target, payload=payload,
                      origin="select", branch=tag)
