#!/usr/bin/env python3
"""Explanations over the miniature world database: one query per shape.

Covers a join with an aggregate, a plain lookup, an INTERSECT, a negated
subquery, and a GROUP BY/HAVING query.  Each row of output shows the query,
the result row being explained, and the generated explanation.
"""

import tempfile

from cyclesql.explainer import Explainer
from cyclesql.fixtures import build_dataset
from cyclesql.gateway import DbGateway
from cyclesql.parser import parse

CASES = [
    ("How many languages are spoken in Aruba?",
     "SELECT count(T2.language) FROM country AS T1 JOIN countrylanguage AS T2 "
     "ON T1.code = T2.countrycode WHERE T1.name = 'Aruba'", None),
    ("Which continent does Anguilla belong to?",
     "SELECT continent FROM country WHERE name = 'Anguilla'", None),
    ("Which nations speak both English and French?",
     "SELECT T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
     "ON T1.code = T2.countrycode WHERE T2.language = 'English' "
     "INTERSECT "
     "SELECT T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
     "ON T1.code = T2.countrycode WHERE T2.language = 'French'",
     ("Seychelles",)),
    ("Which cities are in European countries where English is not official?",
     "SELECT DISTINCT T2.name FROM country AS T1 JOIN city AS T2 "
     "ON T1.code = T2.countrycode WHERE T1.continent = 'Europe' AND T1.name NOT IN ("
     "SELECT T3.name FROM country AS T3 JOIN countrylanguage AS T4 "
     "ON T3.code = T4.countrycode WHERE T4.isofficial = 'T' AND T4.language = 'English')",
     ("Nabereznyje Tšelny",)),
    ("Name each country speaking at least 3 languages, with the count.",
     "SELECT count(T2.language), T1.name FROM country AS T1 JOIN countrylanguage AS T2 "
     "ON T1.code = T2.countrycode GROUP BY T1.name HAVING count(*) > 2",
     (5, "Iraq")),
]


def main():
    root = build_dataset(tempfile.mkdtemp(prefix="cyclesql_demo_"))
    gateway = DbGateway(root)
    schema = gateway.schema("world_1")
    explainer = Explainer(gateway)

    for question, sql, row in CASES:
        query = parse(sql, schema, db_id="world_1")
        result = gateway.execute("world_1", query)
        explained_row = row if row is not None else result.rows[0]
        explanation = explainer.explain("world_1", query, result, row=row)
        print(f"question: {question}")
        print(f"rows:     {result.rows}")
        print(f"explains: {explained_row}")
        print(f"text:     {explanation.text}")
        print("-" * 78)


if __name__ == "__main__":
    main()
