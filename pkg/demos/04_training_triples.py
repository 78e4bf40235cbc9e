#!/usr/bin/env python3
"""Building verifier training data from gold pairs and model mistakes.

Positives come from gold question/SQL pairs (explain a random result row);
negatives come from predictions whose execution diverges from gold under
bag semantics.  The emitted JSONL is exactly what `nli-train` consumes:

    nli-train --triples triples.jsonl --out checkpoint --epochs 40 \
        --learning-rate 1e-3
    nli-serve --model checkpoint --port 8321
    CYCLESQL_VERIFIER_URL=http://127.0.0.1:8321 cyclesql loop --verifier remote ...
"""

import tempfile
from pathlib import Path

from cyclesql.fixtures import build_dataset
from cyclesql.gateway import DbGateway
from cyclesql.harness import GoldExample, gen_training_triples, write_jsonl

GOLD = [
    GoldExample(
        id="g1",
        question="Which continent does Anguilla belong to?",
        gold_sql="SELECT continent FROM country WHERE name = 'Anguilla'",
        db_id="world_1",
    ),
    GoldExample(
        id="g2",
        question="What are the flight numbers of all flights with aircraft Airbus A340-300?",
        gold_sql="SELECT T1.flno FROM flight AS T1 JOIN aircraft AS T2 "
                 "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'",
        db_id="flight_2",
    ),
]

PREDICTIONS = {
    "g1": ["SELECT continent FROM country WHERE name = 'Aruba'"],
    "g2": [
        "SELECT count(T1.flno) FROM flight AS T1 JOIN aircraft AS T2 "
        "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'",
    ],
}


def main():
    root = build_dataset(tempfile.mkdtemp(prefix="cyclesql_demo_"))
    gateway = DbGateway(root)

    out = Path(tempfile.mkdtemp(prefix="cyclesql_demo_")) / "triples.jsonl"
    count = write_jsonl(out, gen_training_triples(GOLD, PREDICTIONS, gateway, seed=17))
    print(f"wrote {count} triples to {out}\n")

    for triple in gen_training_triples(GOLD, PREDICTIONS, gateway, seed=17):
        explanation, result, sql = triple.premise.split(" | ")
        sign = "+1" if triple.label == 1 else "-1"
        print(f"[{sign}] {triple.hypothesis}")
        print(f"     explanation: {explanation}")
        print(f"     result:      {result}")
        print(f"     sql:         {sql}")
        print()


if __name__ == "__main__":
    main()
