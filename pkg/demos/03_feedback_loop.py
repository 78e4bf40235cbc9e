#!/usr/bin/env python3
"""The feedback loop over a ranked candidate list.

A beam of four candidates for one question: the top-ranked one counts
instead of listing, the second fails to execute, the third is correct.
The oracle verifier (entailment iff the execution result matches the gold
answer) shows the intended selection; the heuristic backend shows what a
cheap text-only verifier does on the same trail.
"""

import tempfile

from cyclesql.fixtures import build_dataset
from cyclesql.gateway import DbGateway
from cyclesql.loop import LoopConfig, TranslationTask, run_task
from cyclesql.schema import NlQuery
from cyclesql.verifier import HeuristicVerifier, OracleVerifier

QUESTION = "What are the flight numbers of all flights with aircraft Airbus A340-300?"
GOLD = (
    "SELECT T1.flno FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'"
)
CANDIDATES = [
    "SELECT count(T1.flno) FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Airbus A340-300'",
    "SELECT flno FROM flights_typo WHERE name = 'Airbus A340-300'",
    GOLD,
    "SELECT T1.flno FROM flight AS T1 JOIN aircraft AS T2 "
    "ON T1.aid = T2.aid WHERE T2.name = 'Boeing 747-400'",
]


def show(result):
    for entry in result.trail:
        verdict = entry.verdict.label if entry.verdict else "skipped"
        print(f"  rank {entry.rank}: parse={entry.parse_ok} exec={entry.exec_ok} "
              f"verdict={verdict}")
        if entry.note:
            print(f"           note: {entry.note}")
    print(f"  -> chose rank {result.chosen_rank} "
          f"(fallback={result.fallback_used}, {result.iterations} iterations)")
    if result.explanation:
        print(f"  -> explanation: {result.explanation.text}")
    print()


def main():
    root = build_dataset(tempfile.mkdtemp(prefix="cyclesql_demo_"))
    gateway = DbGateway(root)
    task = TranslationTask(
        id="demo",
        question=NlQuery(text=QUESTION, db_id="flight_2"),
        db_id="flight_2",
        candidates=CANDIDATES,
    )

    print("oracle verifier (execution-equivalence gold standard):")
    show(run_task(task, gateway, OracleVerifier(gateway, {"demo": GOLD}), LoopConfig()))

    print("heuristic verifier (token overlap + number agreement):")
    show(run_task(task, gateway, HeuristicVerifier(), LoopConfig()))


if __name__ == "__main__":
    main()
