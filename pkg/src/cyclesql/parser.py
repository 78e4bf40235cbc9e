"""Recursive-descent parser for the Spider-style SQLite subset.

Supported: single SELECT statements with JOIN..ON, WHERE, GROUP BY, HAVING,
ORDER BY, LIMIT, one-level set operations (UNION/INTERSECT/EXCEPT), nested
subqueries in IN/compare predicates, aggregates (count/sum/avg/min/max,
optionally DISTINCT), BETWEEN, LIKE, IS [NOT] NULL.  CTEs, window functions,
EXISTS, and any DML/DDL raise UnsupportedSyntax.

Parsing is pure; parsed trees are immutable and safe to share across workers.
Table aliases are resolved at parse time so downstream code sees canonical
``table.column`` references (the original alias is kept only as a render
hint).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import ParseError, UnsupportedSyntax
from .schema import DatabaseSchema
from .sqlast import (
    AGG_FUNCTIONS,
    Agg,
    Arith,
    Col,
    ColumnRef,
    ConditionList,
    Join,
    Literal,
    OrderBy,
    Predicate,
    QueryUnit,
    SelectItem,
    SelectStatement,
    SetOpStatement,
    SqlQuery,
    Star,
    Statement,
    TableSource,
    UnitElement,
    flatten_branches,
    render_statement,
)

KEYWORDS = {
    "select", "distinct", "from", "join", "inner", "left", "outer", "on", "as",
    "where", "and", "or", "not", "in", "like", "between", "is", "null",
    "group", "by", "having", "order", "asc", "desc", "limit",
    "union", "all", "intersect", "except",
}
UNSUPPORTED_LEADS = {
    "insert", "update", "delete", "create", "drop", "alter", "pragma",
    "attach", "replace", "vacuum", "begin", "commit",
}
UNSUPPORTED_ANYWHERE = {"with", "over", "exists", "case", "cast", "window"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<number>\d+\.\d*|\.\d+|\d+)
  | (?P<qident>"[^"]*"|`[^`]*`|\[[^\]]*\])
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><>|!=|>=|<=|=|>|<)
  | (?P<punct>[(),.;*+\-/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # kw|ident|string|number|op|punct|eof
    value: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(pos, f"unexpected character {text[pos]!r}")
        pos = match.end()
        kind = match.lastgroup
        value = match.group()
        if kind == "ws":
            continue
        if kind == "ident":
            low = value.lower()
            if low in KEYWORDS:
                tokens.append(Token("kw", low, match.start(), pos))
                continue
            tokens.append(Token("ident", value, match.start(), pos))
        elif kind == "qident":
            tokens.append(Token("ident", value[1:-1], match.start(), pos))
        elif kind == "string":
            tokens.append(Token("string", value[1:-1].replace("''", "'"), match.start(), pos))
        else:
            tokens.append(Token(kind, value, match.start(), pos))
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


@dataclass
class BranchSpans:
    clauses: list = field(default_factory=list)  # (kind, start, end) textual order
    where_subqueries: list = field(default_factory=list)  # (span, StatementSpans)
    having_subqueries: list = field(default_factory=list)


@dataclass
class StatementSpans:
    whole: tuple[int, int]
    branches: list = field(default_factory=list)  # (span, BranchSpans)
    is_set_op: bool = False


class _Parser:
    def __init__(self, text: str, schema: DatabaseSchema | None):
        self.text = text
        self.schema = schema
        self.tokens = tokenize(text)
        self.i = 0
        self.unresolved: list[ColumnRef] = []

    # token helpers
    def peek(self, offset=0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (value is None or tok.value == value):
            return self.advance()
        return None

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.accept(kind, value)
        if tok is None:
            got = self.peek()
            want = value or kind
            raise ParseError(got.start, f"expected {want!r}, got {got.value!r}")
        return tok

    # entry -------------------------------------------------------------
    def parse_statement(self) -> tuple[Statement, StatementSpans]:
        first = self.peek()
        if first.kind == "ident" and first.value.lower() in UNSUPPORTED_LEADS:
            raise UnsupportedSyntax(f"{first.value.upper()} statements are not supported")
        if first.kind == "ident" and first.value.lower() in UNSUPPORTED_ANYWHERE:
            raise UnsupportedSyntax(f"{first.value.upper()} is not supported")
        start = first.start
        left, left_spans = self.parse_select_core()
        stmt: Statement = left
        spans = StatementSpans(whole=(start, 0))
        spans.branches.append((left_spans, self._last_branch))
        while True:
            op_tok = self.peek()
            if op_tok.kind == "kw" and op_tok.value in ("union", "intersect", "except"):
                self.advance()
                op = op_tok.value
                if op == "union" and self.accept("kw", "all"):
                    op = "union all"
                right, right_spans = self.parse_select_core()
                stmt = SetOpStatement(op=op, left=stmt, right=right)
                spans.branches.append((right_spans, self._last_branch))
                spans.is_set_op = True
            else:
                break
        self.accept("punct", ";")
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(tok.start, f"unexpected trailing token {tok.value!r}")
        spans.whole = (start, len(self.text))
        return stmt, spans

    def parse_select_core(self) -> tuple[SelectStatement, tuple[int, int]]:
        spans = BranchSpans()
        sel_tok = self.expect("kw", "select")
        distinct = bool(self.accept("kw", "distinct"))
        items = [self.parse_select_item()]
        while self.accept("punct", ","):
            items.append(self.parse_select_item())
        from_tok = self.expect("kw", "from")
        spans.clauses.append(("select", sel_tok.start, from_tok.start))
        from_source = self.parse_table_source()
        sources = [from_source]
        joins = []
        where = group_by = having = order_by = limit = None
        from_end = self.peek().start
        spans.clauses.append(("from", from_tok.start, from_end))
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.value in ("join", "inner", "left"):
                join_start = tok.start
                kind = "join"
                if self.accept("kw", "left"):
                    self.accept("kw", "outer")
                    kind = "left join"
                else:
                    self.accept("kw", "inner")
                self.expect("kw", "join")
                source = self.parse_table_source()
                sources.append(source)
                on = None
                if self.accept("kw", "on"):
                    on = self.parse_conditions(spans, context=None)
                joins.append(Join(source=source, on=on, kind=kind))
                spans.clauses.append(("join", join_start, self.peek().start))
            else:
                break
        if self.accept("kw", "where"):
            where_start = self.tokens[self.i - 1].start
            where = self.parse_conditions(spans, context="where")
            spans.clauses.append(("where", where_start, self.peek().start))
        if self.peek().kind == "kw" and self.peek().value == "group":
            g_start = self.advance().start
            self.expect("kw", "by")
            group_by = [self.parse_expr()]
            while self.accept("punct", ","):
                group_by.append(self.parse_expr())
            spans.clauses.append(("group_by", g_start, self.peek().start))
        if self.accept("kw", "having"):
            h_start = self.tokens[self.i - 1].start
            having = self.parse_conditions(spans, context="having")
            spans.clauses.append(("having", h_start, self.peek().start))
        if self.peek().kind == "kw" and self.peek().value == "order":
            o_start = self.advance().start
            self.expect("kw", "by")
            exprs = [self.parse_expr()]
            while self.accept("punct", ","):
                exprs.append(self.parse_expr())
            direction = "asc"
            if self.accept("kw", "desc"):
                direction = "desc"
            elif self.accept("kw", "asc"):
                direction = "asc"
            order_by = OrderBy(exprs=tuple(exprs), direction=direction)
            spans.clauses.append(("order_by", o_start, self.peek().start))
        if self.accept("kw", "limit"):
            l_start = self.tokens[self.i - 1].start
            num = self.expect("number")
            limit = int(float(num.value))
            spans.clauses.append(("limit", l_start, self.peek().start))
        end = self.peek().start if self.peek().kind != "eof" else len(self.text)
        stmt = SelectStatement(
            items=tuple(items),
            from_source=from_source,
            joins=tuple(joins),
            where=where,
            group_by=tuple(group_by or ()),
            having=having,
            order_by=order_by,
            limit=limit,
            distinct=distinct,
        )
        stmt = _resolve_branch(stmt, self.schema, self.unresolved)
        self._last_branch = spans
        return stmt, (sel_tok.start, end)

    # pieces --------------------------------------------------------------
    def parse_select_item(self) -> SelectItem:
        expr = self.parse_expr()
        alias = None
        if self.accept("kw", "as"):
            alias = self.expect("ident").value
        return SelectItem(expr=expr, output_alias=alias)

    def parse_table_source(self) -> TableSource:
        if self.peek().kind == "punct" and self.peek().value == "(":
            raise UnsupportedSyntax("subqueries in FROM are not supported")
        name = self.expect("ident").value
        alias = None
        if self.accept("kw", "as"):
            alias = self.expect("ident").value
        elif self.peek().kind == "ident":
            alias = self.advance().value
        return TableSource(name=name.lower(), alias=alias)

    def parse_conditions(self, spans: BranchSpans, context: str | None) -> ConditionList:
        items = [self.parse_predicate(spans, context)]
        connectors = [""]
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.value in ("and", "or"):
                self.advance()
                connectors.append(tok.value)
                items.append(self.parse_predicate(spans, context))
            else:
                break
        return ConditionList(items=tuple(items), connectors=tuple(connectors))

    def parse_predicate(self, spans: BranchSpans, context: str | None) -> Predicate:
        negated = bool(self.accept("kw", "not"))
        left = self.parse_expr()
        if self.accept("kw", "not"):
            negated = True
        tok = self.peek()
        if tok.kind == "kw" and tok.value == "is":
            self.advance()
            is_not = bool(self.accept("kw", "not"))
            self.expect("kw", "null")
            return Predicate(left=left, op="is", right=Literal(None), negated=negated or is_not)
        if tok.kind == "kw" and tok.value == "between":
            self.advance()
            lo = self.parse_expr()
            self.expect("kw", "and")
            hi = self.parse_expr()
            return Predicate(left=left, op="between", right=(lo, hi), negated=negated)
        if tok.kind == "kw" and tok.value == "like":
            self.advance()
            return Predicate(left=left, op="like", right=self.parse_expr(), negated=negated)
        if tok.kind == "kw" and tok.value == "in":
            self.advance()
            self.expect("punct", "(")
            open_pos = self.tokens[self.i - 1].start
            if self.peek().kind == "kw" and self.peek().value == "select":
                sub, sub_spans = self._parse_substatement()
                close = self.expect("punct", ")")
                self._record_subquery(spans, context, (open_pos, close.end), sub_spans)
                return Predicate(left=left, op="in", right=sub, negated=negated)
            values = [self._parse_scalar()]
            while self.accept("punct", ","):
                values.append(self._parse_scalar())
            self.expect("punct", ")")
            return Predicate(left=left, op="in", right=tuple(values), negated=negated)
        if tok.kind == "op":
            op = self.advance().value
            if op == "<>":
                op = "!="
            if self.peek().kind == "punct" and self.peek().value == "(":
                nxt = self.peek(1)
                if nxt.kind == "kw" and nxt.value == "select":
                    open_pos = self.advance().start
                    sub, sub_spans = self._parse_substatement()
                    close = self.expect("punct", ")")
                    self._record_subquery(spans, context, (open_pos, close.end), sub_spans)
                    return Predicate(left=left, op=op, right=sub, negated=negated)
            right = self.parse_expr()
            return Predicate(left=left, op=op, right=right, negated=negated)
        raise ParseError(tok.start, f"expected a predicate operator, got {tok.value!r}")

    def _parse_substatement(self) -> tuple[Statement, StatementSpans]:
        sub_parser = _Parser.__new__(_Parser)
        sub_parser.text = self.text
        sub_parser.schema = self.schema
        sub_parser.tokens = self.tokens
        sub_parser.i = self.i
        sub_parser.unresolved = self.unresolved
        start = sub_parser.peek().start
        left, left_span = sub_parser.parse_select_core()
        stmt: Statement = left
        spans = StatementSpans(whole=(start, left_span[1]))
        spans.branches.append((left_span, sub_parser._last_branch))
        while True:
            tok = sub_parser.peek()
            if tok.kind == "kw" and tok.value in ("union", "intersect", "except"):
                sub_parser.advance()
                op = tok.value
                if op == "union" and sub_parser.accept("kw", "all"):
                    op = "union all"
                right, right_span = sub_parser.parse_select_core()
                stmt = SetOpStatement(op=op, left=stmt, right=right)
                spans.branches.append((right_span, sub_parser._last_branch))
                spans.is_set_op = True
            else:
                break
        self.i = sub_parser.i
        spans.whole = (start, self.peek().start)
        return stmt, spans

    def _record_subquery(self, spans: BranchSpans, context, span, sub_spans):
        if context == "having":
            spans.having_subqueries.append((span, sub_spans))
        else:
            spans.where_subqueries.append((span, sub_spans))

    def _parse_scalar(self):
        tok = self.peek()
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value, quoted=True)
        if tok.kind == "number":
            self.advance()
            return _number_literal(tok.value)
        if tok.kind == "punct" and tok.value in ("+", "-"):
            self.advance()
            num = self.expect("number")
            value = _number_literal(num.value).value
            return Literal(-value if tok.value == "-" else value)
        raise ParseError(tok.start, f"expected a literal, got {tok.value!r}")

    def parse_expr(self):
        left = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value in ("+", "-", "/"):
                self.advance()
                right = self.parse_term()
                left = Arith(op=tok.value, left=left, right=right)
            elif (
                tok.kind == "punct"
                and tok.value == "*"
                and self.peek(1).kind in ("ident", "number", "string")
            ):
                # multiplication only when something multipliable follows;
                # bare '*' is the star projection
                self.advance()
                right = self.parse_term()
                left = Arith(op="*", left=left, right=right)
            else:
                return left

    def parse_term(self):
        tok = self.peek()
        if tok.kind == "string":
            self.advance()
            return Literal(tok.value, quoted=True)
        if tok.kind == "number":
            self.advance()
            return _number_literal(tok.value)
        if tok.kind == "kw" and tok.value == "null":
            self.advance()
            return Literal(None)
        if tok.kind == "punct" and tok.value == "*":
            self.advance()
            return Star()
        if tok.kind == "punct" and tok.value in ("+", "-"):
            self.advance()
            num = self.expect("number")
            value = _number_literal(num.value).value
            return Literal(-value if tok.value == "-" else value)
        if tok.kind == "ident":
            low = tok.value.lower()
            if low in UNSUPPORTED_ANYWHERE:
                raise UnsupportedSyntax(f"{tok.value.upper()} is not supported")
            if self.peek(1).kind == "punct" and self.peek(1).value == "(" \
                    and low not in AGG_FUNCTIONS:
                raise UnsupportedSyntax(f"function {tok.value!r} is not supported")
            if low in AGG_FUNCTIONS and self.peek(1).kind == "punct" and self.peek(1).value == "(":
                self.advance()
                self.advance()
                distinct = bool(self.accept("kw", "distinct"))
                if self.peek().kind == "punct" and self.peek().value == "*":
                    self.advance()
                    arg = Star()
                else:
                    arg = self.parse_expr()
                self.expect("punct", ")")
                return Agg(fn=low, arg=arg, distinct=distinct)
            self.advance()
            if self.peek().kind == "punct" and self.peek().value == ".":
                self.advance()
                if self.peek().kind == "punct" and self.peek().value == "*":
                    self.advance()
                    return Star(table=tok.value.lower())
                col = self.expect("ident")
                return Col(ColumnRef(table=tok.value.lower(), column=col.value.lower(), resolved=False))
            return Col(ColumnRef(table=None, column=low, resolved=False))
        raise ParseError(tok.start, f"unexpected token {tok.value!r}")


def _number_literal(text: str) -> Literal:
    if re.fullmatch(r"\d+", text):
        return Literal(int(text))
    return Literal(float(text))


# --- alias / schema resolution ----------------------------------------------

def _resolve_branch(stmt: SelectStatement, schema: DatabaseSchema | None, sink: list) -> SelectStatement:
    """Resolve alias prefixes to canonical table names within one branch."""
    frame = [(src.alias.lower() if src.alias else None, src.name, src.alias) for src in stmt.sources]

    def resolve_ref(ref: ColumnRef) -> ColumnRef:
        if ref.resolved:
            return ref
        prefix = ref.table
        if prefix is not None:
            for alias_low, name, alias in frame:
                if prefix == alias_low or prefix == name:
                    ok = schema is None or schema.has_column(name, ref.column)
                    out = ColumnRef(table=name, column=ref.column, alias=alias, resolved=ok)
                    if not ok:
                        sink.append(out)
                    return out
            out = ColumnRef(table=prefix, column=ref.column, resolved=False)
            sink.append(out)
            return out
        if schema is not None:
            for alias_low, name, alias in frame:
                if schema.has_column(name, ref.column):
                    return ColumnRef(table=name, column=ref.column, alias=alias, resolved=True)
        out = ColumnRef(table=None, column=ref.column, resolved=False)
        if schema is not None:
            sink.append(out)
        return out

    def resolve_star(star: Star) -> Star:
        if star.table is None:
            return star
        for alias_low, name, _alias in frame:
            if star.table == alias_low or star.table == name:
                return Star(table=name)
        return star

    def resolve_expr(expr):
        if isinstance(expr, Col):
            return Col(resolve_ref(expr.ref))
        if isinstance(expr, Star):
            return resolve_star(expr)
        if isinstance(expr, Agg):
            return replace(expr, arg=resolve_expr(expr.arg))
        if isinstance(expr, Arith):
            return replace(expr, left=resolve_expr(expr.left), right=resolve_expr(expr.right))
        return expr

    def resolve_right(right):
        if right is None or isinstance(right, (SelectStatement, SetOpStatement)):
            return right  # subquery branches resolved on their own scope
        if isinstance(right, tuple):
            return tuple(resolve_right(r) for r in right)
        return resolve_expr(right)

    def resolve_conds(conds: ConditionList | None):
        if conds is None:
            return None
        return ConditionList(
            items=tuple(
                replace(p, left=resolve_expr(p.left), right=resolve_right(p.right))
                for p in conds.items
            ),
            connectors=conds.connectors,
        )

    return replace(
        stmt,
        items=tuple(replace(i, expr=resolve_expr(i.expr)) for i in stmt.items),
        joins=tuple(replace(j, on=resolve_conds(j.on)) for j in stmt.joins),
        where=resolve_conds(stmt.where),
        group_by=tuple(resolve_expr(g) for g in stmt.group_by),
        having=resolve_conds(stmt.having),
        order_by=replace(stmt.order_by, exprs=tuple(resolve_expr(e) for e in stmt.order_by.exprs))
        if stmt.order_by
        else None,
    )


# --- public operations -------------------------------------------------------

def parse(sql_text: str, schema: DatabaseSchema | None = None, db_id: str | None = None) -> SqlQuery:
    """Parse one SELECT-form statement and decompose it into query units."""
    parser = _Parser(sql_text, schema)
    statement, spans = parser.parse_statement()
    query = SqlQuery(
        raw_text=sql_text,
        statement=statement,
        unresolved=parser.unresolved,
        db_id=db_id or (schema.db_id if schema else None),
    )
    query._spans = spans
    query.units = decompose(query)
    return query


def decompose(query: SqlQuery) -> list[QueryUnit]:
    """One unit per top-level clause; subqueries become single nested units."""
    spans: StatementSpans | None = getattr(query, "_spans", None)
    if spans is None:
        # constructed tree: re-parse the rendered text to recover spans
        reparsed = parse(render_statement(query.statement))
        spans = reparsed._spans
        text_len = len(reparsed.raw_text)
    else:
        text_len = len(query.raw_text)

    branches = flatten_branches(query.statement)
    branch_units = [
        _branch_units(branch, branch_spans, text_len if idx == len(branches) - 1 else None)
        for idx, (branch, (_span, branch_spans)) in enumerate(zip(branches, spans.branches))
    ]
    if not spans.is_set_op:
        return branch_units[0]
    unit = QueryUnit(clause_kind="set_op", source_span=(spans.whole[0], text_len))
    for (branch_span, _), units in zip(spans.branches, branch_units):
        child = QueryUnit(
            clause_kind="set_op",
            source_span=branch_span,
            is_subquery=True,
            children=units,
        )
        unit.children.append(child)
    return [unit]


def _branch_units(branch: SelectStatement, spans: BranchSpans, extend_to: int | None) -> list[QueryUnit]:
    units = []
    clauses = sorted(spans.clauses, key=lambda c: c[1])
    join_sources = iter(branch.joins)
    for idx, (kind, start, end) in enumerate(clauses):
        if extend_to is not None and idx == len(clauses) - 1:
            end = extend_to
        unit = QueryUnit(clause_kind=kind, source_span=(start, end))
        if kind == "select":
            unit.elements = [_expr_elements(i.expr) for i in branch.items]
            unit.elements = [e for sub in unit.elements for e in sub]
        elif kind == "from":
            unit.elements = [UnitElement(kind="table", table=branch.from_source.name)]
        elif kind == "join":
            join = next(join_sources)
            unit.elements = [UnitElement(kind="table", table=join.source.name)]
            if join.on:
                for pred in join.on:
                    unit.elements.extend(_predicate_elements(pred))
        elif kind == "where" and branch.where:
            for pred in branch.where:
                unit.elements.extend(_predicate_elements(pred))
            _attach_subqueries(unit, spans.where_subqueries, branch.where)
        elif kind == "group_by":
            for g in branch.group_by:
                unit.elements.extend(_expr_elements(g))
        elif kind == "having" and branch.having:
            for pred in branch.having:
                unit.elements.extend(_predicate_elements(pred))
            _attach_subqueries(unit, spans.having_subqueries, branch.having)
        elif kind == "order_by" and branch.order_by:
            for e in branch.order_by.exprs:
                unit.elements.extend(_expr_elements(e))
        elif kind == "limit":
            unit.elements = [UnitElement(kind="literal", value=branch.limit)]
        units.append(unit)
    return units


def _attach_subqueries(unit: QueryUnit, recorded, conds: ConditionList):
    subs = [
        p.right
        for p in conds.items
        if isinstance(p.right, (SelectStatement, SetOpStatement))
    ]
    for (span, sub_spans), sub_stmt in zip(recorded, subs):
        sub_query = SqlQuery(raw_text="", statement=sub_stmt)
        sub_query._spans = sub_spans
        child = QueryUnit(
            clause_kind=unit.clause_kind,
            source_span=span,
            is_subquery=True,
            children=decompose(sub_query),
        )
        unit.children.append(child)
        unit.elements.append(UnitElement(kind="subquery", value=sub_stmt))


def _expr_elements(expr) -> list[UnitElement]:
    if isinstance(expr, Col):
        return [UnitElement(kind="column", column=expr.ref)]
    if isinstance(expr, Star):
        return [UnitElement(kind="star", table=expr.table)]
    if isinstance(expr, Agg):
        inner = None
        if isinstance(expr.arg, Col):
            inner = expr.arg.ref
        elem = UnitElement(kind="aggregate", column=inner, fn=expr.fn)
        if isinstance(expr.arg, Star):
            return [elem, UnitElement(kind="star", table=expr.arg.table)]
        return [elem]
    if isinstance(expr, Arith):
        return _expr_elements(expr.left) + _expr_elements(expr.right)
    if isinstance(expr, Literal):
        return [UnitElement(kind="literal", value=expr.value)]
    return []


def _predicate_elements(pred: Predicate) -> list[UnitElement]:
    elements = _expr_elements(pred.left)
    right = pred.right
    if isinstance(right, (SelectStatement, SetOpStatement)):
        pass  # nested unit carries it
    elif isinstance(right, tuple):
        for r in right:
            elements.extend(_expr_elements(r))
    elif right is not None:
        elements.extend(_expr_elements(right))
    return elements


def referenced_columns(query: SqlQuery) -> set[ColumnRef]:
    """Every column referenced in any clause, deduplicated by (table, column).

    Asterisk elements contribute a ``column='*'`` marker reference.
    """
    from .sqlast import iter_statement_columns

    refs: set[ColumnRef] = set()
    for ref in iter_statement_columns(query.statement):
        refs.add(ColumnRef(table=ref.table, column=ref.column, resolved=ref.resolved))
    for star in _iter_stars(query.statement):
        refs.add(ColumnRef(table=star.table, column="*"))
    return refs


def _iter_stars(stmt: Statement):
    # only projection asterisks count as referenced-column markers; a star
    # inside a predicate aggregate (HAVING count(*)) names no column
    for branch in flatten_branches(stmt):
        for item in branch.items:
            yield from _expr_stars(item.expr)
        for conds in _branch_condition_lists(branch):
            for pred in conds:
                if isinstance(pred.right, (SelectStatement, SetOpStatement)):
                    yield from _iter_stars(pred.right)


def _expr_stars(expr):
    if isinstance(expr, Star):
        yield expr
    elif isinstance(expr, Agg):
        yield from _expr_stars(expr.arg)
    elif isinstance(expr, Arith):
        yield from _expr_stars(expr.left)
        yield from _expr_stars(expr.right)


def _branch_condition_lists(branch: SelectStatement):
    for join in branch.joins:
        if join.on:
            yield join.on
    if branch.where:
        yield branch.where
    if branch.having:
        yield branch.having
