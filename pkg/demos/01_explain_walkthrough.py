#!/usr/bin/env python3
"""Step-by-step walkthrough: from a suspect SQL translation to its
data-grounded explanation.

The question asks for *all flight numbers* of flights with a given aircraft,
but the translation below counts them instead.  Watching the pipeline run
makes the mistake visible: the provenance names the two flight rows behind
the count, and the final sentence says "there are 2 flights in total", which
does not answer a question about flight numbers.
"""

import tempfile

from cyclesql.annotator import annotate
from cyclesql.explainer import Explainer, build_graph, summarize
from cyclesql.fixtures import build_dataset
from cyclesql.gateway import DbGateway
from cyclesql.parser import parse
from cyclesql.rewriter import rewrite
from cyclesql.sqlast import render_statement

QUESTION = "What are the flight numbers of all flights with aircraft Airbus A340-300?"
TRANSLATED = (
    "SELECT count(T1.flno) FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'"
)


def main():
    root = build_dataset(tempfile.mkdtemp(prefix="cyclesql_demo_"))
    gateway = DbGateway(root)
    schema = gateway.schema("flight_2")

    print(f"question:   {QUESTION}")
    print(f"translated: {TRANSLATED}\n")

    # 1. parse and execute
    query = parse(TRANSLATED, schema, db_id="flight_2")
    result = gateway.execute("flight_2", query)
    print(f"result:  {result.rows}")
    print(f"summary: {summarize(result)}\n")

    # 2. rewrite for provenance: pin the row, widen the projection, drop the aggregate
    rewritten = rewrite(query, result.rows[0], result, schema)
    print("rewritten query:")
    print(f"  {render_statement(rewritten.query)}\n")

    # 3. fetch the provenance table
    prov = gateway.fetch_provenance("flight_2", rewritten)
    header = ["tupleID"] + [str(c) for c in prov.columns]
    print(" | ".join(header))
    for tuple_id, row in zip(prov.tuple_ids, prov.rows):
        print(" | ".join([tuple_id] + [str(v) for v in row]))
    print()

    # 4. annotate and graph
    enriched = annotate(prov, query, rewritten)
    for annotation in enriched.all_annotations:
        print(f"annotation: kind={annotation.kind:<11} target={annotation.target} "
              f"origin={annotation.origin}")
    graph = build_graph(enriched)
    print(f"\ngraph root: {graph.root.label} ({graph.root.kind}); "
          f"{len(graph.column_nodes())} column nodes\n")

    # 5. the explanation
    explanation = Explainer(gateway).explain("flight_2", query, result)
    print(f"explanation: {explanation.text}")


if __name__ == "__main__":
    main()
