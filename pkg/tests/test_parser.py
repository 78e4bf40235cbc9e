import pytest

from cyclesql.errors import ParseError, UnsupportedSyntax
from cyclesql.parser import decompose, parse, referenced_columns
from cyclesql.sqlast import ColumnRef, render_statement

from conftest import (
    ANGUILLA_CONTINENT_SQL,
    BILINGUAL_INTERSECT_SQL,
    EUROPE_CITIES_SQL,
    FLIGHT_COUNT_SQL,
    LANGUAGE_GROUP_SQL,
)


def test_simple_select_has_three_units(world_schema):
    query = parse(ANGUILLA_CONTINENT_SQL, world_schema)
    kinds = [u.clause_kind for u in query.units]
    assert kinds == ["select", "from", "where"]


def test_star_select_single_element(flight_schema):
    query = parse("SELECT * FROM flight", flight_schema)
    select_unit = query.units[0]
    assert select_unit.clause_kind == "select"
    assert len(select_unit.elements) == 1
    assert select_unit.elements[0].kind == "star"


def test_intersect_yields_one_set_op_unit(world_schema):
    query = parse(BILINGUAL_INTERSECT_SQL, world_schema)
    assert len(query.units) == 1
    top = query.units[0]
    assert top.clause_kind == "set_op"
    assert len(top.children) == 2
    assert all(child.is_subquery for child in top.children)


def test_decompose_elements(world_schema):
    query = parse(ANGUILLA_CONTINENT_SQL, world_schema)
    where_unit = query.units[2]
    columns = [e.column.column for e in where_unit.elements if e.kind == "column"]
    assert columns == ["name"]
    literals = [e.value for e in where_unit.elements if e.kind == "literal"]
    assert literals == ["Anguilla"]


def test_decompose_count_star(flight_schema):
    query = parse("SELECT count(*) FROM flight", flight_schema)
    select_unit = query.units[0]
    kinds = [e.kind for e in select_unit.elements]
    assert "aggregate" in kinds and "star" in kinds


def test_not_in_subquery_is_single_nested_unit(world_schema):
    query = parse(EUROPE_CITIES_SQL, world_schema)
    where_unit = next(u for u in query.units if u.clause_kind == "where")
    assert len(where_unit.children) == 1
    child = where_unit.children[0]
    assert child.is_subquery
    assert [u.clause_kind for u in child.children] == ["select", "from", "join", "where"]


def test_span_coverage_partitions_text(world_schema, flight_schema):
    for sql, schema in [
        (ANGUILLA_CONTINENT_SQL, world_schema),
        (FLIGHT_COUNT_SQL, flight_schema),
        (LANGUAGE_GROUP_SQL, world_schema),
        (BILINGUAL_INTERSECT_SQL, world_schema),
        (EUROPE_CITIES_SQL, world_schema),
    ]:
        query = parse(sql, schema)
        spans = sorted(u.source_span for u in query.units)
        assert spans[0][0] == 0
        assert spans[-1][1] == len(sql)
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert end == start


def test_round_trip_stability(world_schema, flight_schema):
    for sql, schema in [
        (ANGUILLA_CONTINENT_SQL, world_schema),
        (FLIGHT_COUNT_SQL, flight_schema),
        (LANGUAGE_GROUP_SQL, world_schema),
        (BILINGUAL_INTERSECT_SQL, world_schema),
        (EUROPE_CITIES_SQL, world_schema),
        ("SELECT * FROM flight WHERE flno BETWEEN 5 AND 40", flight_schema),
        ("SELECT origin FROM flight WHERE destination IN ('Tokyo', 'Boston')", flight_schema),
        ("SELECT name FROM aircraft WHERE distance > 4000 ORDER BY name DESC LIMIT 3", flight_schema),
        ("SELECT count(DISTINCT origin) FROM flight", flight_schema),
    ]:
        once = parse(sql, schema)
        rendered = render_statement(once.statement)
        twice = parse(rendered, schema)
        assert once.key() == twice.key(), sql


def test_alias_resolution_canonicalizes(world_schema):
    query = parse(LANGUAGE_GROUP_SQL, world_schema)
    branch = query.statement
    agg_item = branch.items[0].expr
    assert agg_item.arg.ref == ColumnRef(
        table="countrylanguage", column="language", alias="T2"
    )
    assert branch.group_by[0].ref.table == "country"


def test_unresolved_columns_flagged(world_schema):
    query = parse("SELECT nocolumn FROM country", world_schema)
    assert query.unresolved
    assert query.unresolved[0].column == "nocolumn"


def test_referenced_columns_flight(flight_schema):
    refs = {(r.table, r.column) for r in referenced_columns(parse(FLIGHT_COUNT_SQL, flight_schema))}
    assert {("aircraft", "name"), ("flight", "flno")} <= refs
    assert refs <= {
        ("aircraft", "name"), ("flight", "flno"), ("flight", "aid"), ("aircraft", "aid"),
    }


def test_referenced_columns_star_marker(flight_schema):
    refs = referenced_columns(parse("SELECT * FROM flight", flight_schema))
    assert {(r.table, r.column) for r in refs} == {(None, "*")}


def test_referenced_columns_group_query(world_schema):
    refs = {(r.table, r.column) for r in referenced_columns(parse(LANGUAGE_GROUP_SQL, world_schema))}
    assert refs == {
        ("countrylanguage", "language"),
        ("country", "name"),
        ("country", "code"),
        ("countrylanguage", "countrycode"),
    }


def test_referenced_columns_within_from_closure(world_schema):
    query = parse(EUROPE_CITIES_SQL, world_schema)
    tables = {"country", "city", "countrylanguage"}
    for ref in referenced_columns(query):
        if ref.column != "*":
            assert ref.table in tables


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as excinfo:
        parse("SELECT FROM WHERE")
    assert excinfo.value.position >= 0


def test_dml_rejected():
    with pytest.raises(UnsupportedSyntax):
        parse("INSERT INTO t VALUES (1)")
    with pytest.raises(UnsupportedSyntax):
        parse("DROP TABLE t")


def test_cte_and_window_rejected():
    with pytest.raises(UnsupportedSyntax):
        parse("WITH x AS (SELECT 1) SELECT * FROM x")
    with pytest.raises(UnsupportedSyntax):
        parse("SELECT rank() OVER (ORDER BY a) FROM t")


def test_decompose_total_on_parsed(world_schema):
    query = parse(ANGUILLA_CONTINENT_SQL, world_schema)
    assert decompose(query)
