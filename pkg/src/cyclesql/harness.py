"""Dataset ingestion, EM/EX metrics, training-triple generation, reporting.

EM here is clause-component matching after normalization (literals become
placeholders, condition order is ignored, aliases are canonical); it is a
simplified variant of the official evaluator and reports label it "em_lite".
EX is bag-semantics execution equality.  Triple generation is deterministic
under a fixed seed.
"""

from __future__ import annotations

import json
import random
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CycleSqlError, MissingGold
from .explainer import Explainer
from .gateway import DbGateway, bag_equal
from .parser import parse
from .schema import NlQuery
from .sqlast import (
    Agg,
    Arith,
    Col,
    ConditionList,
    Literal,
    Predicate,
    SelectStatement,
    SetOpStatement,
    SqlQuery,
    Star,
)

NEGATIVES_PER_GOLD = 4


@dataclass
class GoldExample:
    id: str
    question: str
    gold_sql: str
    db_id: str
    difficulty: str | None = None


@dataclass(frozen=True)
class NliTriple:
    premise: str
    hypothesis: str
    label: int  # +1 entailment, -1 contradiction

    def to_json(self) -> dict:
        return {"premise": self.premise, "hypothesis": self.hypothesis, "label": self.label}


# --- exact match (EM-lite) -----------------------------------------------------

_PLACEHOLDER = "?"


def _norm_expr(expr):
    if isinstance(expr, Literal):
        return ("lit", _PLACEHOLDER)
    if isinstance(expr, Star):
        return ("star", expr.table)
    if isinstance(expr, Col):
        return ("col", expr.ref.table, expr.ref.column)
    if isinstance(expr, Agg):
        return ("agg", expr.fn, expr.distinct, _norm_expr(expr.arg))
    if isinstance(expr, Arith):
        return ("arith", expr.op, _norm_expr(expr.left), _norm_expr(expr.right))
    return ("other", repr(expr))


def _norm_right(right):
    if right is None:
        return None
    if isinstance(right, (SelectStatement, SetOpStatement)):
        return _norm_statement(right)
    if isinstance(right, tuple):
        return ("tuple", len(right))
    if isinstance(right, Literal):
        return ("lit", _PLACEHOLDER)
    return _norm_expr(right)


def _norm_predicate(pred: Predicate):
    return ("pred", pred.op, pred.negated, _norm_expr(pred.left), _norm_right(pred.right))


def _norm_conditions(conds: ConditionList | None):
    if conds is None or not conds.items:
        return None
    normalized = [_norm_predicate(p) for p in conds.items]
    if all(c in ("", "and") for c in conds.connectors):
        return ("and_set", _multiset(normalized))
    return ("ordered", tuple(conds.connectors), tuple(normalized))


def _multiset(items) -> tuple:
    return tuple(sorted(Counter(items).items(), key=repr))


def _norm_branch(branch: SelectStatement):
    join_conds = []
    for join in branch.joins:
        if join.on:
            join_conds.extend(_norm_predicate(p) for p in join.on)
    order = None
    if branch.order_by:
        order = (branch.order_by.direction, tuple(_norm_expr(e) for e in branch.order_by.exprs))
    return (
        "branch",
        branch.distinct,
        _multiset([_norm_expr(i.expr) for i in branch.items]),
        _multiset([s.name for s in branch.sources]),
        _multiset(join_conds),
        _norm_conditions(branch.where),
        _multiset([_norm_expr(g) for g in branch.group_by]),
        _norm_conditions(branch.having),
        order,
        _PLACEHOLDER if branch.limit is not None else None,
    )


def _norm_statement(stmt):
    if isinstance(stmt, SelectStatement):
        return _norm_branch(stmt)
    left = _norm_statement(stmt.left)
    right = _norm_statement(stmt.right)
    if stmt.op in ("union", "union all", "intersect"):
        return ("setop", stmt.op, _multiset([left, right]))
    return ("setop", stmt.op, (left, right))


def exact_match(pred: SqlQuery, gold: SqlQuery) -> bool:
    """Clause components match after normalization; literal values ignored."""
    return _norm_statement(pred.statement) == _norm_statement(gold.statement)


# --- execution match -------------------------------------------------------------

def execution_match(pred_sql: str, gold_sql: str, db_id: str, gateway: DbGateway,
                    reasons: list | None = None) -> bool:
    """Bag-equality of execution results; any failure of the prediction is a
    mismatch (the gold query is assumed to execute)."""
    try:
        gold_result = gateway.execute(db_id, gold_sql)
    except CycleSqlError as exc:
        if reasons is not None:
            reasons.append(f"gold failed: {exc}")
        return False
    try:
        pred_result = gateway.execute(db_id, pred_sql)
    except CycleSqlError as exc:
        if reasons is not None:
            reasons.append(f"prediction failed: {exc}")
        return False
    return bag_equal(pred_result, gold_result)


# --- training triples -------------------------------------------------------------

def _stable_rng(*parts) -> random.Random:
    seed = zlib.crc32(":".join(str(p) for p in parts).encode("utf-8"))
    return random.Random(seed)


def gen_training_triples(
    gold: list[GoldExample],
    predictions: dict[str, list[str]],
    gateway: DbGateway,
    seed: int = 17,
    negatives_per_gold: int = NEGATIVES_PER_GOLD,
    errors: list | None = None,
):
    """Yield (+1) triples from gold pairs and (-1) triples from erroneous
    predictions, deterministically for a fixed seed."""
    from .verifier import assemble_premise

    explainer = Explainer(gateway)
    for example in gold:
        schema = gateway.catalog.databases.get(example.db_id)
        try:
            gold_query = parse(example.gold_sql, schema, db_id=example.db_id)
            gold_result = gateway.execute(example.db_id, gold_query)
        except CycleSqlError as exc:
            if errors is not None:
                errors.append(f"{example.id}: gold failed: {exc}")
            continue

        rng = _stable_rng(seed, example.id)
        row = rng.choice(gold_result.rows) if gold_result.rows else None
        explanation = explainer.explain(example.db_id, gold_query, gold_result, row=row)
        premise = assemble_premise(explanation, gold_result, gold_query)
        yield NliTriple(premise=premise, hypothesis=example.question, label=1)

        emitted = 0
        seen_keys = set()
        for idx, pred_sql in enumerate(predictions.get(example.id, [])):
            if emitted >= negatives_per_gold:
                break
            try:
                pred_query = parse(pred_sql, schema, db_id=example.db_id)
                pred_result = gateway.execute(example.db_id, pred_query)
            except CycleSqlError as exc:
                if errors is not None:
                    errors.append(f"{example.id}: prediction skipped: {exc}")
                continue
            key = pred_query.key()
            if key in seen_keys:
                continue
            seen_keys.add(key)
            if bag_equal(pred_result, gold_result):
                continue  # not erroneous: no negative
            pred_rng = _stable_rng(seed, example.id, idx)
            pred_row = pred_rng.choice(pred_result.rows) if pred_result.rows else None
            pred_explanation = explainer.explain(
                example.db_id, pred_query, pred_result, row=pred_row
            )
            pred_premise = assemble_premise(pred_explanation, pred_result, pred_query)
            yield NliTriple(premise=pred_premise, hypothesis=example.question, label=-1)
            emitted += 1


# --- evaluation --------------------------------------------------------------------

@dataclass
class Report:
    n: int
    metrics: dict = field(default_factory=dict)
    mean_iterations: float = 0.0
    by_difficulty: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"n": self.n, "mean_iterations": self.mean_iterations}
        out.update(self.metrics)
        if self.by_difficulty:
            out["by_difficulty"] = self.by_difficulty
        return out


def evaluate(
    results: list[dict],
    gold: list[GoldExample],
    gateway: DbGateway,
    metrics: tuple = ("em", "ex"),
) -> Report:
    """Score loop results against gold; per-difficulty breakdown when the
    gold entries carry one."""
    gold_by_id = {g.id: g for g in gold}
    missing = [r["id"] for r in results if r["id"] not in gold_by_id]
    if missing:
        raise MissingGold(f"results reference unknown ids: {missing[:5]}")

    per_metric = {m: 0 for m in metrics}
    per_difficulty: dict[str, dict] = {}
    total_iterations = 0

    for row in results:
        example = gold_by_id[row["id"]]
        total_iterations += row.get("iterations", 0)
        schema = gateway.catalog.databases.get(example.db_id)
        outcome = {}
        if "em" in metrics:
            try:
                pred_query = parse(row["chosen_sql"], schema, db_id=example.db_id)
                gold_query = parse(example.gold_sql, schema, db_id=example.db_id)
                outcome["em"] = exact_match(pred_query, gold_query)
            except CycleSqlError:
                outcome["em"] = False
        if "ex" in metrics:
            outcome["ex"] = execution_match(
                row["chosen_sql"], example.gold_sql, example.db_id, gateway
            )
        for metric, ok in outcome.items():
            per_metric[metric] += int(ok)
        if example.difficulty:
            bucket = per_difficulty.setdefault(
                example.difficulty, {m: 0 for m in metrics} | {"n": 0}
            )
            bucket["n"] += 1
            for metric, ok in outcome.items():
                bucket[metric] += int(ok)

    n = len(results)
    report = Report(n=n)
    report.mean_iterations = (total_iterations / n) if n else 0.0
    for metric in metrics:
        report.metrics[metric if metric != "em" else "em_lite"] = (
            per_metric[metric] / n if n else 0.0
        )
    for difficulty, bucket in per_difficulty.items():
        report.by_difficulty[difficulty] = {
            (m if m != "em" else "em_lite"): (bucket[m] / bucket["n"] if bucket["n"] else 0.0)
            for m in metrics
        } | {"n": bucket["n"]}
    return report


# --- file formats -------------------------------------------------------------------

def read_gold(path: str | Path) -> list[GoldExample]:
    """Spider-style JSON array with question/query/db_id; extra fields kept
    only when useful (id, difficulty)."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for idx, entry in enumerate(entries):
        out.append(
            GoldExample(
                id=str(entry.get("id", idx)),
                question=entry["question"],
                gold_sql=entry["query"],
                db_id=entry["db_id"],
                difficulty=entry.get("difficulty"),
            )
        )
    return out


def read_tasks_jsonl(path: str | Path):
    from .loop import TranslationTask

    tasks = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            tasks.append(
                TranslationTask(
                    id=str(obj["id"]),
                    question=NlQuery(text=obj["question"], db_id=obj["db_id"]),
                    db_id=obj["db_id"],
                    candidates=list(obj["candidates"]),
                )
            )
    return tasks


def read_predictions_jsonl(path: str | Path) -> dict[str, list[str]]:
    """One object per line: {"id": ..., "sql": ...}; multiple lines per id
    accumulate in file order."""
    predictions: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            predictions.setdefault(str(obj["id"]), []).append(obj["sql"])
    return predictions


def write_jsonl(path: str | Path, rows) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            payload = row.to_json() if hasattr(row, "to_json") else row
            handle.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_results_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
