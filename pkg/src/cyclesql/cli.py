"""Command-line interface: explain, verify, loop, gen-train, eval."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CycleSqlError
from .explainer import Explainer
from .gateway import DbGateway
from .harness import (
    evaluate,
    gen_training_triples,
    read_gold,
    read_predictions_jsonl,
    read_results_jsonl,
    read_tasks_jsonl,
    write_jsonl,
)
from .loop import LoopConfig, run_dataset
from .parser import parse
from .verifier import (
    AlwaysEntailVerifier,
    HeuristicVerifier,
    NliInput,
    OracleVerifier,
    RemoteVerifier,
    assemble_premise,
    verify,
)


def _gateway(args) -> DbGateway:
    return DbGateway(args.db_root, tables_json=getattr(args, "tables_json", None))


def _make_verifier(name: str, gateway: DbGateway, gold_path: str | None):
    if name == "heuristic":
        return HeuristicVerifier()
    if name == "remote":
        return RemoteVerifier()
    if name == "always":
        return AlwaysEntailVerifier()
    if name == "oracle":
        if not gold_path:
            raise SystemExit("--gold is required for the oracle verifier")
        gold = read_gold(gold_path)
        return OracleVerifier(gateway, {g.id: g.gold_sql for g in gold})
    raise SystemExit(f"unknown verifier: {name}")


def cmd_explain(args) -> int:
    gateway = _gateway(args)
    schema = gateway.catalog.databases.get(args.db_id)
    query = parse(args.sql, schema, db_id=args.db_id)
    result = gateway.execute(args.db_id, query)
    row = result.rows[args.row] if args.row is not None and result.rows else None
    explanation = Explainer(gateway).explain(args.db_id, query, result, row=row)
    if args.json:
        print(json.dumps({
            "summary": explanation.summary,
            "phrases": explanation.phrases,
            "text": explanation.text,
            "row": list(explanation.subject_row) if explanation.subject_row else None,
        }, ensure_ascii=False, indent=2))
    else:
        print(explanation.text)
    return 0


def cmd_verify(args) -> int:
    gateway = _gateway(args)
    schema = gateway.catalog.databases.get(args.db_id)
    query = parse(args.sql, schema, db_id=args.db_id)
    result = gateway.execute(args.db_id, query)
    explanation = Explainer(gateway).explain(args.db_id, query, result)
    premise = assemble_premise(explanation, result, query)
    backend = _make_verifier(args.verifier, gateway, None)
    verdict = verify(NliInput(premise=premise, hypothesis=args.question), backend)
    print(json.dumps({
        "label": verdict.label,
        "score": verdict.score,
        "premise": premise,
    }, ensure_ascii=False, indent=2))
    return 0 if verdict.entailed else 1


def cmd_loop(args) -> int:
    gateway = _gateway(args)
    tasks = read_tasks_jsonl(args.dataset)
    backend = _make_verifier(args.verifier, gateway, args.gold)
    config = LoopConfig(k=args.k, row_policy=args.row_policy, seed=args.seed)
    collected = []
    results, stats = run_dataset(tasks, gateway, backend, config,
                                 on_result=collected.append)
    write_jsonl(args.out, collected)
    print(json.dumps(stats.to_json(), indent=2))
    return 0


def cmd_gen_train(args) -> int:
    gateway = _gateway(args)
    gold = read_gold(args.gold)
    predictions = read_predictions_jsonl(args.preds)
    errors: list[str] = []
    triples = gen_training_triples(gold, predictions, gateway, seed=args.seed,
                                   errors=errors)
    count = write_jsonl(args.out, triples)
    print(f"wrote {count} triples to {args.out}")
    for line in errors:
        print(f"skip: {line}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    gateway = _gateway(args)
    gold = read_gold(args.gold)
    results = read_results_jsonl(args.results)
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    report = evaluate(results, gold, gateway, metrics=metrics)
    payload = json.dumps(report.to_json(), indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            handle.write(payload + "\n")
    print(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclesql",
        description="Explain, verify, and select candidate SQL translations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="explain one query result row")
    p_explain.add_argument("--db-root", required=True)
    p_explain.add_argument("--tables-json")
    p_explain.add_argument("--db-id", required=True)
    p_explain.add_argument("--sql", required=True)
    p_explain.add_argument("--row", type=int, default=None,
                           help="0-based result row to explain (default: first)")
    p_explain.add_argument("--json", action="store_true")
    p_explain.set_defaults(func=cmd_explain)

    p_verify = sub.add_parser("verify", help="verify one question/SQL pair")
    p_verify.add_argument("--db-root", required=True)
    p_verify.add_argument("--tables-json")
    p_verify.add_argument("--db-id", required=True)
    p_verify.add_argument("--question", required=True)
    p_verify.add_argument("--sql", required=True)
    p_verify.add_argument("--verifier", choices=["remote", "heuristic"],
                          default="heuristic")
    p_verify.set_defaults(func=cmd_verify)

    p_loop = sub.add_parser("loop", help="run the feedback loop over a task file")
    p_loop.add_argument("--dataset", required=True, help="tasks JSONL")
    p_loop.add_argument("--db-root", required=True)
    p_loop.add_argument("--tables-json")
    p_loop.add_argument("--verifier", choices=["remote", "heuristic", "oracle", "always"],
                        default="heuristic")
    p_loop.add_argument("--gold", help="gold JSON (oracle verifier)")
    p_loop.add_argument("--k", type=int, default=8)
    p_loop.add_argument("--row-policy", choices=["first", "seeded-random"],
                        default="first")
    p_loop.add_argument("--seed", type=int, default=0)
    p_loop.add_argument("--out", required=True)
    p_loop.set_defaults(func=cmd_loop)

    p_train = sub.add_parser("gen-train", help="generate NLI training triples")
    p_train.add_argument("--gold", required=True)
    p_train.add_argument("--preds", required=True)
    p_train.add_argument("--db-root", required=True)
    p_train.add_argument("--tables-json")
    p_train.add_argument("--seed", type=int, default=17)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=cmd_gen_train)

    p_eval = sub.add_parser("eval", help="score loop results against gold")
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--db-root", required=True)
    p_eval.add_argument("--tables-json")
    p_eval.add_argument("--metrics", default="em,ex")
    p_eval.add_argument("--report")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CycleSqlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
