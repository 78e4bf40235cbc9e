import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclesql.errors import EmptyProvenance, SqlExecutionError
from cyclesql.gateway import bag_equal, load_catalog, normalize_row
from cyclesql.parser import parse
from cyclesql.rewriter import rewrite

from conftest import ARUBA_COUNT_SQL, FLIGHT_COUNT_SQL, LANGUAGE_GROUP_SQL


# --- catalog loading -------------------------------------------------------------

def test_catalog_world_has_four_tables(gateway):
    assert len(gateway.schema("world_1").tables) == 4


def test_catalog_empty_list(tmp_path):
    tables = tmp_path / "tables.json"
    tables.write_text("[]", encoding="utf-8")
    catalog = load_catalog(tmp_path, tables)
    assert catalog.databases == {}


def test_catalog_flight_tables_and_rows(gateway):
    schema = gateway.schema("flight_2")
    assert set(schema.tables) == {"flight", "aircraft"}
    flights, _ = gateway.execute_raw("flight_2", "SELECT count(*) FROM flight")
    aircraft, _ = gateway.execute_raw("flight_2", "SELECT count(*) FROM aircraft")
    assert flights[0][0] == 10 and aircraft[0][0] == 10


def test_catalog_malformed_raises(tmp_path):
    from cyclesql.errors import MalformedCatalog

    bad = tmp_path / "tables.json"
    bad.write_text(json.dumps([{"db_id": "x"}]), encoding="utf-8")
    with pytest.raises(MalformedCatalog):
        load_catalog(tmp_path, bad)
    bad.write_text(json.dumps([{
        "db_id": "x",
        "table_names_original": ["t"],
        "column_names_original": [[-1, "*"], [0, "a"]],
        "column_types": ["text", "text"],
        "primary_keys": [],
        "foreign_keys": [[1, 99]],
    }]), encoding="utf-8")
    with pytest.raises(MalformedCatalog):
        load_catalog(tmp_path, bad)


def test_catalog_missing_db_recorded(tmp_path, dataset_root):
    tables = json.loads((dataset_root / "tables.json").read_text())
    target = tmp_path / "tables.json"
    target.write_text(json.dumps(tables), encoding="utf-8")
    catalog = load_catalog(tmp_path, target)
    assert catalog.warnings


# --- execute ----------------------------------------------------------------------

def test_execute_flight_count(gateway, flight_schema):
    result = gateway.execute("flight_2", FLIGHT_COUNT_SQL)
    assert result.rows == [(2,)]
    assert result.columns[0].origin.fn == "count"


def test_execute_zero_count(gateway):
    result = gateway.execute("flight_2", "SELECT count(*) FROM flight WHERE 1 = 0")
    assert result.rows == [(0,)]


def test_execute_language_count(gateway):
    result = gateway.execute("world_1", ARUBA_COUNT_SQL)
    assert result.rows == [(4,)]


def test_execute_bad_sql_raises(gateway, flight_schema):
    query = parse("SELECT nosuch FROM flight", flight_schema, db_id="flight_2")
    with pytest.raises(SqlExecutionError):
        gateway.execute("flight_2", query)


def test_execute_truncation_flag(gateway):
    from cyclesql.gateway import ExecutionLimits

    result = gateway.execute("flight_2", "SELECT flno FROM flight",
                             ExecutionLimits(max_rows=3))
    assert result.truncated and len(result.rows) == 3


def test_execute_deterministic_up_to_bag(gateway):
    first = gateway.execute("flight_2", "SELECT origin FROM flight")
    second = gateway.execute("flight_2", "SELECT origin FROM flight")
    assert bag_equal(first, second)


# --- provenance -------------------------------------------------------------------

def _flight_provenance(gateway, flight_schema):
    query = parse(FLIGHT_COUNT_SQL, flight_schema, db_id="flight_2")
    result = gateway.execute("flight_2", query)
    rewritten = rewrite(query, result.rows[0], result, flight_schema)
    return gateway.fetch_provenance("flight_2", rewritten)


def test_fetch_provenance_tuple_ids(gateway, flight_schema):
    prov = _flight_provenance(gateway, flight_schema)
    assert prov.tuple_ids == ["F2", "F3"]
    by_name = {str(c): i for i, c in enumerate(prov.columns)}
    aids = {row[by_name["flight.aid"]] for row in prov.rows}
    flnos = {row[by_name["flight.flno"]] for row in prov.rows}
    names = {row[by_name["aircraft.name"]] for row in prov.rows}
    assert aids == {3} and flnos == {7, 13} and names == {"Airbus A340-300"}


def test_fetch_provenance_empty_raises(gateway, flight_schema):
    query = parse(
        "SELECT origin FROM flight WHERE destination = 'Sydney'",
        flight_schema, db_id="flight_2",
    )
    result = gateway.execute("flight_2", query)
    rewritten = rewrite(query, result.rows[0], result, flight_schema)
    # re-pin to a row that no longer matches anything by emptying the table view
    rewritten_missing = rewrite(
        parse("SELECT origin FROM flight WHERE destination = 'Atlantis'",
              flight_schema, db_id="flight_2"),
        ("Los Angeles",),
        result,
        flight_schema,
    )
    with pytest.raises(EmptyProvenance):
        gateway.fetch_provenance("flight_2", rewritten_missing)


def test_fetch_provenance_iraq_languages(gateway, world_schema):
    query = parse(LANGUAGE_GROUP_SQL, world_schema, db_id="world_1")
    result = gateway.execute("world_1", query)
    iraq_row = next(r for r in result.rows if r[1] == "Iraq")
    rewritten = rewrite(query, iraq_row, result, world_schema)
    prov = gateway.fetch_provenance("world_1", rewritten)
    direct, _ = gateway.execute_raw(
        "world_1", "SELECT count(*) FROM countrylanguage WHERE countrycode = 'IRQ'"
    )
    assert len(prov.rows) == direct[0][0] == 5


def test_provenance_rows_satisfy_pin(gateway, world_schema):
    query = parse("SELECT continent FROM country WHERE name = 'Anguilla'",
                  world_schema, db_id="world_1")
    result = gateway.execute("world_1", query)
    rewritten = rewrite(query, result.rows[0], result, world_schema)
    prov = gateway.fetch_provenance("world_1", rewritten)
    assert len(prov.rows) >= 1
    idx = next(i for i, c in enumerate(prov.columns) if c.column == "continent")
    assert all(row[idx] == "North America" for row in prov.rows)


# --- bag semantics -----------------------------------------------------------------

def test_bag_equal_order_irrelevant():
    assert bag_equal([(1, "a"), (2, "b")], [(2, "b"), (1, "a")])


def test_bag_equal_multiplicity_matters():
    assert not bag_equal([(1, "a"), (1, "a")], [(1, "a")])


def test_bag_equal_numeric_normalization():
    assert bag_equal([(1,)], [(1.0,)])
    assert normalize_row((1,)) == normalize_row((1.0,))
    # oracle: SQLite affinity comparison agrees
    import sqlite3

    assert sqlite3.connect(":memory:").execute("SELECT 1 = 1.0").fetchone()[0] == 1


def test_bag_equal_string_exact():
    assert not bag_equal([("a",)], [("A",)])


rows_strategy = st.lists(
    st.tuples(st.integers(-5, 5), st.text(max_size=3)), max_size=8
)


@given(rows=rows_strategy, seed=st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_bag_equal_permutation_invariant(rows, seed):
    import random

    shuffled = list(rows)
    random.Random(seed).shuffle(shuffled)
    assert bag_equal(rows, shuffled)
    assert bag_equal(rows, rows)  # reflexive
    if not bag_equal(rows, shuffled[:-1] if shuffled else [(0, "x")]):
        pass  # smoke only; multiplicity covered above
