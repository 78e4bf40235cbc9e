from cyclesql.annotator import (
    AggregatePayload,
    PredicatePayload,
    SubqueryPayload,
    WHOLE_TABLE,
    annotate,
    operation_only_semantics,
)
from cyclesql.parser import parse
from cyclesql.rewriter import rewrite
from cyclesql.sqlast import ColumnRef

from conftest import (
    EUROPE_CITIES_SQL,
    FLIGHT_COUNT_SQL,
    LANGUAGE_GROUP_SQL,
)


def _enrich(gateway, schema, db_id, sql, row=None):
    query = parse(sql, schema, db_id=db_id)
    result = gateway.execute(db_id, query)
    pick = row if row is not None else result.rows[0]
    rewritten = rewrite(query, pick, result, schema)
    prov = gateway.fetch_provenance(db_id, rewritten)
    return annotate(prov, query, rewritten), query


def test_flight_annotations(gateway, flight_schema):
    enriched, _ = _enrich(gateway, flight_schema, "flight_2", FLIGHT_COUNT_SQL)
    filters = [a for a in enriched.annotations if a.kind == "filter" and a.origin == "where"]
    assert len(filters) == 1
    assert filters[0].target == ColumnRef(table="aircraft", column="name", alias="T2")
    assert filters[0].payload == PredicatePayload(op="=", value="Airbus A340-300")
    counts = [a for a in enriched.removed_aggregate_annotations if a.kind == "aggregate"]
    assert len(counts) == 1
    assert counts[0].target == WHOLE_TABLE
    assert counts[0].payload.fn == "count" and counts[0].payload.value == 2


def test_plain_projection_annotation(gateway, world_schema):
    enriched, _ = _enrich(gateway, world_schema, "world_1",
                          "SELECT name FROM country WHERE code = 'ABW'")
    projections = [a for a in enriched.annotations if a.kind == "projection"]
    assert len(projections) == 1
    assert projections[0].target.column == "name"


def test_group_query_annotations(gateway, world_schema):
    enriched, _ = _enrich(
        gateway, world_schema, "world_1", LANGUAGE_GROUP_SQL, row=(5, "Iraq")
    )
    groupings = [a for a in enriched.annotations if a.kind == "grouping"]
    assert [g.target.column for g in groupings] == ["name"]
    having = [a for a in enriched.removed_aggregate_annotations if a.origin == "having"]
    assert len(having) == 1
    assert having[0].kind == "filter"
    assert having[0].payload.predicate == PredicatePayload(op=">", value=2)
    aggs = [a for a in enriched.removed_aggregate_annotations if a.kind == "aggregate"]
    assert len(aggs) == 1
    assert aggs[0].target == ColumnRef(table="countrylanguage", column="language", alias="T2")
    assert aggs[0].payload.value == 5


def test_subquery_nested_filter(gateway, world_schema):
    enriched, _ = _enrich(gateway, world_schema, "world_1", EUROPE_CITIES_SQL)
    nested = [
        a for a in enriched.annotations
        if a.kind == "filter" and isinstance(a.payload, SubqueryPayload)
    ]
    assert len(nested) == 1
    assert nested[0].payload.negated is True
    inner_filters = [
        a for a in nested[0].payload.inner_annotations if a.kind == "filter"
    ]
    assert {a.payload.value for a in inner_filters} == {"T", "English"}


def test_annotate_idempotent(gateway, flight_schema):
    query = parse(FLIGHT_COUNT_SQL, flight_schema, db_id="flight_2")
    result = gateway.execute("flight_2", query)
    rewritten = rewrite(query, result.rows[0], result, flight_schema)
    prov = gateway.fetch_provenance("flight_2", rewritten)
    first = annotate(prov, query, rewritten)
    second = annotate(prov, query, rewritten)
    assert [a for a in first.all_annotations] == [a for a in second.all_annotations]


def test_annotation_completeness(gateway, world_schema):
    enriched, query = _enrich(gateway, world_schema, "world_1", LANGUAGE_GROUP_SQL,
                              row=(5, "Iraq"))
    covered = set()
    for annotation in enriched.all_annotations + enriched.unattached:
        if isinstance(annotation.target, ColumnRef):
            covered.add((annotation.target.table, annotation.target.column))
        if isinstance(annotation.payload, AggregatePayload) and annotation.payload.arg:
            covered.add((annotation.payload.arg.table, annotation.payload.arg.column))

    def walk_units(units):
        for unit in units:
            for element in unit.elements:
                if element.kind in ("column", "aggregate") and element.column is not None:
                    yield (element.column.table, element.column.column)
            yield from walk_units(unit.children)

    for pair in walk_units(query.units):
        assert pair in covered, pair


def test_operation_only_flight(flight_schema):
    query = parse(FLIGHT_COUNT_SQL, flight_schema, db_id="flight_2")
    enriched = operation_only_semantics(query)
    assert enriched.base is None
    kinds = {(a.kind, a.origin) for a in enriched.annotations}
    assert ("filter", "where") in kinds
    assert ("aggregate", "select") in kinds


def test_operation_only_star_filter(flight_schema):
    query = parse("SELECT * FROM flight WHERE flno > 5", flight_schema, db_id="flight_2")
    enriched = operation_only_semantics(query)
    stars = [a for a in enriched.annotations
             if a.kind == "projection" and a.target == WHOLE_TABLE]
    filters = [a for a in enriched.annotations if a.kind == "filter"]
    assert len(stars) == 1 and len(filters) == 1


def test_operation_only_subquery(world_schema):
    query = parse(EUROPE_CITIES_SQL, world_schema, db_id="world_1")
    enriched = operation_only_semantics(query)
    assert enriched.base is None
    filters = [a for a in enriched.annotations if a.kind == "filter"]
    payloads = {type(a.payload).__name__ for a in filters}
    assert payloads == {"PredicatePayload", "SubqueryPayload"}


def test_asterisk_rule_single_whole_table_annotation(flight_schema):
    query = parse("SELECT * FROM flight", flight_schema, db_id="flight_2")
    enriched = operation_only_semantics(query)
    star_annotations = [
        a for a in enriched.annotations
        if a.kind == "projection"
    ]
    assert len(star_annotations) == 1
    assert star_annotations[0].target == WHOLE_TABLE
