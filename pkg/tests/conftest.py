import pytest

from cyclesql.fixtures import build_dataset
from cyclesql.gateway import DbGateway

# the wrong (aggregating) translation and the intended listing query for the
# flight/aircraft walkthrough
FLIGHT_COUNT_SQL = (
    "SELECT count(T1.flno) FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'"
)
FLIGHT_LIST_SQL = (
    "SELECT T1.flno FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'"
)
FLIGHT_QUESTION = "What are the flight numbers of all flights with aircraft Airbus A340-300?"

ARUBA_COUNT_SQL = (
    "SELECT count(T2.language) FROM country AS T1 JOIN countrylanguage AS T2 "
    "ON T1.code = T2.countrycode WHERE T1.name = 'Aruba'"
)
ANGUILLA_CONTINENT_SQL = "SELECT continent FROM country WHERE name = 'Anguilla'"
BILINGUAL_INTERSECT_SQL = (
    "SELECT T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
    "ON T1.code = T2.countrycode WHERE T2.language = 'English' "
    "INTERSECT "
    "SELECT T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
    "ON T1.code = T2.countrycode WHERE T2.language = 'French'"
)
EUROPE_CITIES_SQL = (
    "SELECT DISTINCT T2.name FROM country AS T1 JOIN city AS T2 "
    "ON T1.code = T2.countrycode WHERE T1.continent = 'Europe' AND T1.name NOT IN ("
    "SELECT T3.name FROM country AS T3 JOIN countrylanguage AS T4 "
    "ON T3.code = T4.countrycode WHERE T4.isofficial = 'T' AND T4.language = 'English')"
)
LANGUAGE_GROUP_SQL = (
    "SELECT count(T2.language), T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
    "ON T1.code = T2.countrycode GROUP BY T1.name HAVING count(*) > 2"
)


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("dataset")
    build_dataset(root)
    return root


@pytest.fixture(scope="session")
def gateway(dataset_root):
    return DbGateway(dataset_root)


@pytest.fixture(scope="session")
def flight_schema(gateway):
    return gateway.schema("flight_2")


@pytest.fixture(scope="session")
def world_schema(gateway):
    return gateway.schema("world_1")
