"""Provenance graph construction and rule-based explanation generation.

The pipeline for one result row: summarize the result set, build the graph
over the enriched provenance, discover join semantics by matching the joined
tables' foreign-key graph against a pool of known topologies, verbalize each
labeled element, and stitch the pieces together with fixed connectives.

Everything here is deterministic for fixed inputs; phrase wording comes from
templates plus a small lexicon stored as package data, so the pool and the
wording can grow without code changes.  An optional polishing hook can
rewrite the final text for readability; the polished form is never used for
verification.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import networkx as nx
from networkx.algorithms import isomorphism

from .annotator import (
    AggregatePayload,
    Annotation,
    EnrichedProvenanceTable,
    PredicatePayload,
    SubqueryPayload,
    annotate,
    operation_only_semantics,
)
from .errors import EmptyProvenance
from .gateway import DbGateway
from .rewriter import AggDescriptor, ResultRow, ResultSet, rewrite
from .schema import DatabaseSchema
from .sqlast import ColumnRef, SqlQuery

_NUMBER_WORDS = ["zero", "one", "two", "three", "four", "five", "six", "seven",
                 "eight", "nine", "ten"]


def _load_data(name: str):
    return json.loads(resources.files("cyclesql.data").joinpath(name).read_text("utf-8"))


class Lexicon:
    def __init__(self, raw: dict | None = None):
        raw = raw or _load_data("phrase_lexicon.json")
        self.irregular_plurals = raw.get("irregular_plurals", {})
        self.column_adjectives = raw.get("column_adjectives", {})
        self.column_verbs = raw.get("column_verbs", {})
        self.generic_columns = set(raw.get("generic_columns", []))
        self.aggregate_names = raw.get("aggregate_names", {})

    def display(self, identifier: str) -> str:
        return identifier.lower().replace("_", " ")

    def plural(self, word: str) -> str:
        word = self.display(word)
        if word in self.irregular_plurals:
            return self.irregular_plurals[word]
        if word.endswith("s"):
            return word
        if word.endswith("y") and len(word) > 1 and word[-2] not in "aeiou":
            return word[:-1] + "ies"
        return word + "s"

    def singular(self, word: str) -> str:
        return self.display(word)

    def adjective(self, column: str) -> str:
        return self.column_adjectives.get(column.lower(), "")

    def verb(self, column: str) -> str:
        return self.column_verbs.get(column.lower(), "has")

    def aggregate_name(self, fn: str) -> str:
        return self.aggregate_names.get(fn, fn)


_DEFAULT_LEXICON: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = Lexicon()
    return _DEFAULT_LEXICON


# --- graph -------------------------------------------------------------------

@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: str  # table | joint-table | column | value
    label: str
    ref: ColumnRef | None = None
    value: object = None
    is_pk: bool = False


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    kind: str  # hasAttribute | hasValue


@dataclass
class ProvenanceGraph:
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    labels: dict[str, list[Annotation]]
    tables: list[str]
    annotations: list[Annotation] = field(default_factory=list)
    set_ops: list[str] = field(default_factory=list)

    def node(self, node_id: str) -> GraphNode | None:
        for node in self.nodes:
            if node.id == node_id:
                return node
        return None

    @property
    def root(self) -> GraphNode:
        return self.nodes[0]

    def column_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.kind == "column"]

    def value_of(self, ref: ColumnRef):
        for node in self.nodes:
            if node.kind == "column" and node.ref and node.ref.key() == ref.key():
                for edge in self.edges:
                    if edge.src == node.id and edge.kind == "hasValue":
                        target = self.node(edge.dst)
                        return target.value if target else None
        return None

    def validate(self) -> None:
        """Raise AssertionError when a structural invariant is broken."""
        incoming: dict[str, list[GraphEdge]] = {}
        for edge in self.edges:
            incoming.setdefault(edge.dst, []).append(edge)
        for node in self.nodes:
            arrived = incoming.get(node.id, [])
            if node.kind == "column":
                assert len([e for e in arrived if e.kind == "hasAttribute"]) == 1, node
            if node.kind == "value":
                assert len(arrived) == 1 and arrived[0].kind == "hasValue", node
        graph = nx.DiGraph()
        graph.add_nodes_from(n.id for n in self.nodes)
        graph.add_edges_from((e.src, e.dst) for e in self.edges)
        assert nx.is_directed_acyclic_graph(graph)


def build_graph(enriched: EnrichedProvenanceTable) -> ProvenanceGraph:
    """Root (table or joint-table), hasAttribute edges to provenance columns,
    hasValue edges to the pinned tuple's values, annotation labels copied on."""
    tables: list[str] = []
    if enriched.base is not None:
        for branch in enriched.base.source_query.branches:
            for src in branch.query.sources:
                if src.name not in tables:
                    tables.append(src.name)
    else:
        for annotation in enriched.annotations:
            if annotation.kind == "table_scope" and annotation.origin == "from" \
                    and annotation.payload not in tables:
                tables.append(annotation.payload)

    root_kind = "joint-table" if len(tables) > 1 else "table"
    root_label = "-".join(tables) if tables else "result"
    root = GraphNode(id=f"table:{root_label}", kind=root_kind, label=root_label)
    nodes = [root]
    edges: list[GraphEdge] = []
    labels: dict[str, list[Annotation]] = {root.id: []}

    column_refs: list[ColumnRef] = []
    pk_keys: set = set()
    if enriched.base is not None:
        column_refs = list(enriched.base.columns)
        pk_keys = {("col",) + key for key in enriched.base.pk_columns}
    else:
        seen = set()
        for annotation in enriched.all_annotations:
            if isinstance(annotation.target, ColumnRef) and annotation.target.key() not in seen:
                seen.add(annotation.target.key())
                column_refs.append(annotation.target)

    node_by_key: dict[tuple, GraphNode] = {}
    for ref in column_refs:
        node = GraphNode(
            id=f"column:{ref.table}.{ref.column}",
            kind="column",
            label=f"{ref.table}.{ref.column}" if ref.table else ref.column,
            ref=ref,
            is_pk=ref.key() in pk_keys,
        )
        nodes.append(node)
        edges.append(GraphEdge(src=root.id, dst=node.id, kind="hasAttribute"))
        labels[node.id] = []
        node_by_key[ref.key()] = node

    if enriched.base is not None and enriched.base.rows:
        pinned = enriched.base.rows[0]
        for idx, ref in enumerate(enriched.base.columns):
            value = pinned[idx]
            if value is None:
                continue
            column_node = node_by_key[ref.key()]
            value_node = GraphNode(
                id=f"value:{ref.table}.{ref.column}",
                kind="value",
                label=str(value),
                value=value,
            )
            nodes.append(value_node)
            edges.append(GraphEdge(src=column_node.id, dst=value_node.id, kind="hasValue"))

    ordered_annotations = sorted(enriched.all_annotations, key=lambda a: a.sort_key())
    set_ops = []
    for annotation in ordered_annotations:
        if annotation.kind == "set_op":
            set_ops.append(annotation.payload)
        if isinstance(annotation.target, ColumnRef):
            node = node_by_key.get(annotation.target.key())
            target_id = node.id if node else root.id
        else:
            target_id = root.id
        labels[target_id].append(annotation)

    return ProvenanceGraph(
        nodes=nodes,
        edges=edges,
        labels=labels,
        tables=tables,
        annotations=ordered_annotations,
        set_ops=set_ops,
    )


# --- join semantics ------------------------------------------------------------

@dataclass(frozen=True)
class JoinSemantics:
    pattern_id: str | None
    rendered_phrase: str
    tables: tuple

    def __post_init__(self):
        assert self.rendered_phrase


def _topology_pool():
    return _load_data("join_topologies.json")


def discover_join_semantics(
    schema: DatabaseSchema | None,
    join_tables: list[str],
    join_conditions: list | None = None,
    lexicon: Lexicon | None = None,
) -> JoinSemantics:
    """Match the joined tables' FK graph against the topology pool; fall back
    to plain table-name concatenation when nothing is isomorphic."""
    lexicon = lexicon or default_lexicon()
    tables = [t.lower() for t in join_tables]
    fallback = " and ".join(lexicon.display(t) for t in tables)

    graph = nx.DiGraph()
    graph.add_nodes_from(tables)
    fk_order: dict[str, list[str]] = {t: [] for t in tables}
    if schema is not None:
        for child, _ccol, parent, _pcol in schema.fk_edges():
            if child in tables and parent in tables and child != parent:
                graph.add_edge(child, parent)
                fk_order[child].append(parent)

    for pattern in _topology_pool():
        if pattern["node_count"] != len(tables):
            continue
        pattern_graph = nx.DiGraph()
        pattern_graph.add_nodes_from(pattern["nodes"])
        pattern_graph.add_edges_from(pattern["edges"])
        matcher = isomorphism.DiGraphMatcher(graph, pattern_graph)
        if not matcher.is_isomorphic():
            continue
        roles = {role: table for table, role in matcher.mapping.items()}
        if pattern["pattern_id"] == "subject-relationship-object":
            bridge = roles["bridge"]
            parents = fk_order.get(bridge, [])
            if len(parents) >= 2:
                roles["left"], roles["right"] = parents[0], parents[1]
        phrase = _instantiate_template(pattern["phrase_template"], roles, lexicon)
        return JoinSemantics(pattern_id=pattern["pattern_id"], rendered_phrase=phrase,
                             tables=tuple(tables))
    return JoinSemantics(pattern_id=None, rendered_phrase=fallback, tables=tuple(tables))


def _instantiate_template(template: str, roles: dict[str, str], lexicon: Lexicon) -> str:
    def substitute(match):
        role, form = match.group(1), match.group(2)
        name = roles[role]
        return lexicon.plural(name) if form == "plural" else lexicon.singular(name)

    return re.sub(r"\{(\w+):(\w+)\}", substitute, template)


# --- summary --------------------------------------------------------------------

def _count_word(n: int) -> str:
    return _NUMBER_WORDS[n] if 0 <= n < len(_NUMBER_WORDS) else str(n)


def _rows_phrase(n: int) -> str:
    return "one row" if n == 1 else f"{n} rows"


def summarize(result: ResultSet) -> str:
    """Brief result-set description: column count, aggregate types, row count.

    No trailing period; the composer finishes the sentence.
    """
    n_cols = len(result.columns)
    n_rows = result.row_count
    agg_origins = [c.origin for c in result.columns if isinstance(c.origin, AggDescriptor)]
    if n_rows == 0:
        plural = "s" if n_cols != 1 else ""
        return f"The query returns a result with {n_cols} column{plural} and 0 rows"
    if n_cols == 1 and agg_origins:
        fn = agg_origins[0].fn
        return (
            "The query returns a result with one column of aggregation type "
            f"({fn}) and {_rows_phrase(n_rows)}"
        )
    if n_cols == 1:
        return f"The query returns a result set with one column and {_rows_phrase(n_rows)}"
    return f"The query result has {_count_word(n_cols)} columns with {_rows_phrase(n_rows)}"


# --- phrase generation ------------------------------------------------------------

def _annotation_value(annotation: Annotation):
    payload = annotation.payload
    if isinstance(payload, PredicatePayload):
        return payload.value
    if isinstance(payload, AggregatePayload):
        return payload.value
    return None


def _find_anchor(annotations: list[Annotation], driving: str | None) -> Annotation | None:
    """The original equality filter that names the row: a text literal on a
    name-like column, preferring the driving table."""
    candidates = []
    for annotation in annotations:
        if annotation.kind != "filter" or annotation.origin != "where":
            continue
        payload = annotation.payload
        if not isinstance(payload, PredicatePayload) or payload.op != "=" or payload.negated:
            continue
        if not isinstance(payload.value, str):
            continue
        target = annotation.target
        if isinstance(target, ColumnRef) and target.column.endswith("name"):
            candidates.append(annotation)
    for annotation in candidates:
        if annotation.target.table == driving:
            return annotation
    return candidates[0] if candidates else None


def _subject_pin(annotations: list[Annotation]) -> Annotation | None:
    pins = [
        a for a in annotations
        if a.kind == "filter" and a.origin == "result_pin"
        and isinstance(a.target, ColumnRef)
        and isinstance(a.payload, PredicatePayload)
    ]
    named = [p for p in pins if p.target.column.endswith("name") and isinstance(p.payload.value, str)]
    if named:
        return named[0]
    texty = [p for p in pins if isinstance(p.payload.value, str)]
    if texty:
        return texty[0]
    return pins[0] if pins else None


def _pk_clause(graph: ProvenanceGraph, subject_table: str, used_columns: set,
               lexicon: Lexicon) -> str:
    if len(graph.tables) < 2:
        return ""
    for node in graph.column_nodes():
        if not node.is_pk or node.ref is None or node.ref.table != subject_table:
            continue
        if node.ref.key() in used_columns:
            continue
        value = graph.value_of(node.ref)
        if isinstance(value, str):
            table = lexicon.singular(subject_table)
            column = lexicon.display(node.ref.column)
            return f", whose {table} {column} is {value}"
    return ""


def generate_phrases(
    graph: ProvenanceGraph,
    join_sem: JoinSemantics | None = None,
    lexicon: Lexicon | None = None,
) -> list[str]:
    """One phrase per labeled element: row context first, then aggregates,
    groupings, and remaining projections."""
    lexicon = lexicon or default_lexicon()
    annotations = graph.annotations
    driving = graph.tables[0] if graph.tables else None
    has_data = any(node.kind == "value" for node in graph.nodes)

    if not any(graph.labels.values()):
        return []
    if not has_data:
        return _operation_only_phrases(annotations, lexicon, driving)

    phrases: list[str] = []
    used_columns: set = set()

    anchor = _find_anchor(annotations, driving)
    has_subject = False
    if anchor is not None and anchor.target.table == driving:
        has_subject = True
        subject = f"{lexicon.singular(driving)} {anchor.payload.value}"
        used_columns.add(anchor.target.key())
        subject += _pk_clause(graph, driving, used_columns, lexicon)
        phrases.append(subject)
    elif anchor is not None:
        join_phrase = join_sem.rendered_phrase if join_sem else lexicon.plural(driving or "")
        phrases.append(f"for {join_phrase} {anchor.payload.value}")
        used_columns.add(anchor.target.key())
    else:
        pin = _subject_pin(annotations)
        if pin is not None:
            has_subject = True
            subject_table = pin.target.table
            subject = f"{lexicon.singular(subject_table)} {pin.payload.value}"
            used_columns.add(pin.target.key())
            subject += _pk_clause(graph, subject_table, used_columns, lexicon)
            phrases.append(subject)

    merged = _merged_branch_filters(annotations, graph.set_ops, lexicon)
    phrases.extend(merged.values())
    for key in merged:
        used_columns.add(key)

    for annotation in annotations:
        if annotation.kind != "aggregate":
            continue
        payload = annotation.payload
        if not isinstance(payload, AggregatePayload):
            continue
        phrases.extend(_aggregate_phrases(payload, driving, lexicon))

    for annotation in annotations:
        if annotation.kind == "grouping" and isinstance(annotation.target, ColumnRef):
            phrases.append(f"grouped by {lexicon.display(annotation.target.column)}")

    for annotation in annotations:
        if annotation.kind != "projection" or not isinstance(annotation.target, ColumnRef):
            continue
        ref = annotation.target
        if ref.key() in used_columns:
            continue
        value = graph.value_of(ref)
        if value is None:
            continue
        used_columns.add(ref.key())
        if has_subject:
            verb = lexicon.verb(ref.column)
            phrases.append(f"{verb} the {lexicon.display(ref.column)} {value}")
        else:
            phrases.append(f"the {lexicon.display(ref.column)} is {value}")

    for annotation in annotations:
        if annotation.kind != "ordering":
            continue
        payload = annotation.payload
        if isinstance(payload, PredicatePayload) and payload.op in ("asc", "desc") \
                and isinstance(annotation.target, ColumnRef):
            direction = "ascending" if payload.op == "asc" else "descending"
            phrases.append(f"ordered by {lexicon.display(annotation.target.column)} {direction}")
        elif isinstance(payload, AggregatePayload) and payload.predicate is not None:
            direction = "descending" if payload.predicate.op == "desc" else "ascending"
            if payload.fn == "count":
                noun = lexicon.plural(payload.arg.column) if payload.arg else "rows"
                phrases.append(f"ordered by the count of {noun} {direction}")
            else:
                column = lexicon.display(payload.arg.column) if payload.arg else "value"
                name = lexicon.aggregate_name(payload.fn)
                phrases.append(f"ordered by the {name} of {column} {direction}")

    return _dedupe(phrases)


def _merged_branch_filters(annotations, set_ops, lexicon: Lexicon) -> dict:
    """INTERSECT/UNION branch filters on the same column become one phrase,
    e.g. "where its languages include English and French"."""
    by_column: dict[tuple, list[Annotation]] = {}
    for annotation in annotations:
        if annotation.kind != "filter" or annotation.origin != "where":
            continue
        if annotation.branch is None or not isinstance(annotation.target, ColumnRef):
            continue
        payload = annotation.payload
        if isinstance(payload, PredicatePayload) and payload.op == "=" and not payload.negated:
            by_column.setdefault(annotation.target.key(), []).append(annotation)
    joiner = " or " if any(op.startswith("union") for op in set_ops) else " and "
    merged = {}
    for key, group in by_column.items():
        branches = {a.branch for a in group}
        if len(branches) < 2:
            continue
        values = []
        for annotation in sorted(group, key=lambda a: a.branch):
            value = str(annotation.payload.value)
            if value not in values:
                values.append(value)
        column = group[0].target.column
        merged[key] = f"where its {lexicon.plural(column)} include {joiner.join(values)}"
    return merged


def _aggregate_phrases(payload: AggregatePayload, driving: str | None,
                       lexicon: Lexicon) -> list[str]:
    value = payload.value
    if payload.fn == "count":
        counted_home = payload.arg.table if payload.arg else driving
        if payload.distinct and payload.arg is not None:
            # count(DISTINCT x) counts distinct x values wherever x lives
            noun = f"distinct {lexicon.plural(payload.arg.column)}"
            if value is None:
                return [f"counts the {noun}"]
            return [f"there are {value} {noun} in total"]
        if payload.arg is None or counted_home == driving:
            noun = lexicon.plural(driving or (payload.arg.column if payload.arg else "row"))
            if value is None:
                return [f"counts the {noun}"]
            return [f"there are {value} {noun} in total"]
        noun = lexicon.plural(payload.arg.column)
        if value is None:
            return [f"counts the {noun}"]
        adjective = lexicon.adjective(payload.arg.column)
        described = f"{adjective} {noun}".strip()
        return [f"has {value} {described}", f"the count of {noun} is {value}"]
    name = lexicon.aggregate_name(payload.fn)
    column = lexicon.display(payload.arg.column) if payload.arg else "value"
    if value is None:
        return [f"computes the {name} of {column}"]
    return [f"the {name} of {column} is {value}"]


def _operation_only_phrases(annotations, lexicon: Lexicon, driving) -> list[str]:
    phrases = []
    for annotation in annotations:
        if annotation.kind == "aggregate" and isinstance(annotation.payload, AggregatePayload):
            phrases.extend(_aggregate_phrases(annotation.payload, driving, lexicon))
        elif annotation.kind == "projection":
            if isinstance(annotation.target, ColumnRef):
                phrases.append(f"returns the {lexicon.display(annotation.target.column)}")
            else:
                table = annotation.payload or driving
                phrases.append(f"returns every column of {lexicon.display(table)}"
                               if table else "returns every column")
    return _dedupe(phrases)


def _dedupe(phrases: list[str]) -> list[str]:
    seen = set()
    out = []
    for phrase in phrases:
        if phrase not in seen:
            seen.add(phrase)
            out.append(phrase)
    return out


# --- filter fragment (summary tail) -------------------------------------------------

_OP_WORDS = {
    ">": "greater than",
    ">=": "greater than or equal to",
    "<": "less than",
    "<=": "less than or equal to",
    "!=": "not equal to",
    "=": "equal to",
}


def _filter_text(annotation: Annotation, lexicon: Lexicon) -> str | None:
    target = annotation.target
    payload = annotation.payload
    if isinstance(payload, SubqueryPayload):
        inner_parts = [
            text for text in (
                _filter_text(a, lexicon) for a in payload.inner_annotations if a.kind == "filter"
            ) if text
        ]
        inner = " and ".join(inner_parts) if inner_parts else "a nested condition holds"
        mode = "excludes" if payload.negated else "keeps only"
        return f"{mode} entries where {inner}"
    if not isinstance(payload, PredicatePayload):
        if isinstance(payload, AggregatePayload) and payload.predicate is not None:
            if payload.arg is not None:
                noun = f"count of {lexicon.plural(payload.arg.column)}" \
                    if payload.fn == "count" else \
                    f"{lexicon.aggregate_name(payload.fn)} of {lexicon.display(payload.arg.column)}"
            else:
                noun = lexicon.aggregate_name(payload.fn)
            op_words = _OP_WORDS.get(payload.predicate.op, payload.predicate.op)
            return f"{noun} {op_words} {payload.predicate.value}"
        return None
    column = target.column if isinstance(target, ColumnRef) else ""
    prefix = ""
    if isinstance(target, ColumnRef) and column in lexicon.generic_columns and target.table:
        prefix = f"{lexicon.singular(target.table)} "
    shown = f"{prefix}{lexicon.display(column)}" if column else "value"
    value = payload.value
    if payload.op == "=" and not payload.negated:
        return f"{shown} {value}"
    if payload.op == "is":
        return f"{shown} is {'not ' if payload.negated else ''}null"
    if payload.op == "like":
        return f"{shown} like {value}"
    if payload.op == "between":
        return f"{shown} between {value} and {payload.high_value}"
    if payload.op == "in":
        values = ", ".join(str(v) for v in value) if isinstance(value, tuple) else value
        mode = "not in" if payload.negated else "in"
        return f"{shown} {mode} ({values})"
    op_words = _OP_WORDS.get(payload.op, payload.op)
    if payload.negated:
        op_words = f"not {op_words}"
    return f"{shown} {op_words} {value}"


def filter_fragment(
    enriched: EnrichedProvenanceTable,
    anchor: Annotation | None,
    driving: str | None,
    lexicon: Lexicon | None = None,
) -> str:
    """The ", filtered by ..." tail appended to the summary sentence."""
    lexicon = lexicon or default_lexicon()
    parts: list[str] = []
    branch_values: dict[tuple, list] = {}
    excluded: list[str] = []

    for annotation in enriched.all_annotations:
        if annotation.kind != "filter":
            continue
        if annotation.origin == "result_pin":
            continue
        if anchor is not None and annotation is anchor and \
                isinstance(anchor.target, ColumnRef) and anchor.target.table != driving:
            continue  # joined-table anchors surface as the row-context phrase
        if annotation.branch is not None and isinstance(annotation.payload, PredicatePayload) \
                and annotation.payload.op == "=" and isinstance(annotation.target, ColumnRef):
            key = annotation.target.key()
            branch_values.setdefault(key, [])
            column = annotation.target.column
            value = str(annotation.payload.value)
            if value not in branch_values[key]:
                branch_values[key].append(value)
            if key not in excluded:
                excluded.append(key)
                parts.append(("__branch__", key, column))
            continue
        text = _filter_text(annotation, lexicon)
        if text:
            parts.append(text)

    rendered = []
    for part in parts:
        if isinstance(part, tuple):
            _, key, column = part
            values = branch_values[key]
            if len(values) > 1:
                rendered.append(f"{lexicon.display(column)} {' or '.join(values)}")
            else:
                rendered.append(f"{lexicon.display(column)} {values[0]}")
        else:
            rendered.append(part)
    if not rendered:
        return ""
    return ", filtered by " + " and ".join(rendered)


# --- composition ------------------------------------------------------------------

@dataclass
class Explanation:
    summary: str
    phrases: list[str]
    text: str
    subject_row: ResultRow | None = None
    polished: str | None = None


_CONCLUSION = re.compile(r"^the (count|sum|average|maximum|minimum) of ")
_MULTIROW = re.compile(r"\b(\d+) rows")


def compose(summary: str, phrases: list[str], *, operation_level: bool = False) -> Explanation:
    """Join summary and phrases with fixed connectives; deterministic."""
    summary_sentence = summary if summary.endswith(".") else summary + "."
    if not phrases:
        return Explanation(summary=summary, phrases=[], text=summary_sentence)

    if operation_level or "0 rows" in summary:
        body = "Specifically, the query " + ", ".join(phrases) + "."
        return Explanation(summary=summary, phrases=list(phrases),
                           text=f"{summary_sentence} {body}")

    rows_match = _MULTIROW.search(summary)
    multi_row = bool(rows_match and int(rows_match.group(1)) > 1)
    if multi_row:
        connective = "Among them, for example, "
    elif phrases[0].startswith("for "):
        connective = "That is, "
    else:
        connective = "Here, "

    main = list(phrases)
    tail = None
    if len(main) > 1 and _CONCLUSION.match(main[-1]):
        tail = main.pop()
    body = connective + ", ".join(main) + "."
    if tail:
        body += f" So {tail}."
    return Explanation(summary=summary, phrases=list(phrases),
                       text=f"{summary_sentence} {body}")


# --- end-to-end -----------------------------------------------------------------

class Explainer:
    """Runs the full rewrite -> provenance -> annotate -> graph -> phrase
    pipeline against one gateway.  Pure given its inputs; safe to share."""

    def __init__(self, gateway: DbGateway, polish=None):
        self.gateway = gateway
        self.polish = polish
        self.lexicon = default_lexicon()

    def explain(
        self,
        db_id: str,
        query: SqlQuery,
        result: ResultSet,
        row: ResultRow | None = None,
        rng=None,
    ) -> Explanation:
        if row is None and result.rows:
            row = rng.choice(result.rows) if rng is not None else result.rows[0]
        schema = self.gateway.catalog.databases.get(db_id)
        rewritten = rewrite(query, row, result, schema)
        if rewritten is None:
            return self._operation_only(query, result, row)
        try:
            prov = self.gateway.fetch_provenance(db_id, rewritten)
        except EmptyProvenance:
            return self._operation_only(query, result, row)

        enriched = annotate(prov, query, rewritten)
        enriched.result_row = row
        enriched.result_columns = result.columns
        graph = build_graph(enriched)
        join_sem = None
        if len(graph.tables) >= 2:
            join_conditions = [p for b in rewritten.branches for p in b.join_conditions]
            join_sem = discover_join_semantics(schema, graph.tables, join_conditions,
                                               self.lexicon)
        phrases = generate_phrases(graph, join_sem, self.lexicon)
        anchor = _find_anchor(graph.annotations, graph.tables[0] if graph.tables else None)
        fragment = filter_fragment(enriched, anchor,
                                   graph.tables[0] if graph.tables else None, self.lexicon)
        explanation = compose(summarize(result) + fragment, phrases)
        explanation.subject_row = row
        if self.polish is not None:
            explanation.polished = self.polish(explanation.text)
        return explanation

    def _operation_only(self, query: SqlQuery, result: ResultSet,
                        row: ResultRow | None) -> Explanation:
        enriched = operation_only_semantics(query)
        graph = build_graph(enriched)
        phrases = generate_phrases(graph, None, self.lexicon)
        fragment = filter_fragment(enriched, None,
                                   graph.tables[0] if graph.tables else None, self.lexicon)
        explanation = compose(summarize(result) + fragment, phrases, operation_level=True)
        explanation.subject_row = row
        if self.polish is not None:
            explanation.polished = self.polish(explanation.text)
        return explanation


def explain(question_context: dict, gateway: DbGateway, polish=None) -> Explanation:
    """Functional wrapper: context carries the parsed query, its result set,
    and optionally the row to explain."""
    explainer = Explainer(gateway, polish=polish)
    return explainer.explain(
        db_id=question_context.get("db_id") or question_context["query"].db_id,
        query=question_context["query"],
        result=question_context["result"],
        row=question_context.get("row"),
    )
