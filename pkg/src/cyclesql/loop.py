"""Feedback loop over ranked candidate translations.

Candidates are tried strictly in rank order: parse, execute, explain a
representative row, assemble the premise, and ask the verifier.  The first
entailed candidate wins; when none is validated the top-1 candidate is the
outcome (fallback).  Candidates that fail to parse or execute are recorded
in the trail but never reach the verifier.  Tasks are independent and may
run concurrently; within a task the order is inherent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import CycleSqlError, ParseError, TaskError, UnsupportedSyntax
from .explainer import Explainer, Explanation
from .gateway import DbGateway, ExecutionLimits
from .parser import parse
from .schema import NlQuery
from .verifier import NliInput, Verdict, assemble_premise, verify

DEFAULT_K = 8


@dataclass
class TranslationTask:
    id: str
    question: NlQuery
    db_id: str
    candidates: list[str]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"task {self.id} has no candidates")


@dataclass
class LoopConfig:
    k: int = DEFAULT_K
    row_policy: str = "first"  # or "seeded-random"
    seed: int = 0
    timeout: float = 30.0
    threshold: float | None = None  # reserved for score-threshold backends


@dataclass
class TrailEntry:
    candidate: str
    rank: int
    parse_ok: bool
    exec_ok: bool
    verdict: Verdict | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate,
            "rank": self.rank,
            "parse_ok": self.parse_ok,
            "exec_ok": self.exec_ok,
            "verdict": None if self.verdict is None else {
                "label": self.verdict.label, "score": self.verdict.score,
            },
            "note": self.note,
        }


@dataclass
class LoopResult:
    task_id: str
    chosen_sql: str
    chosen_rank: int  # 1-based index into the original candidate list
    iterations: int  # == len(trail): candidates attempted
    verifier_calls: int
    trail: list[TrailEntry]
    explanation: Explanation | None = None
    fallback_used: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.task_id,
            "chosen_sql": self.chosen_sql,
            "chosen_rank": self.chosen_rank,
            "iterations": self.iterations,
            "verifier_calls": self.verifier_calls,
            "fallback_used": self.fallback_used,
            "explanation": self.explanation.text if self.explanation else None,
            "trail": [t.to_json() for t in self.trail],
        }


@dataclass
class DatasetStats:
    tasks: int = 0
    errors: int = 0
    mean_iterations: float = 0.0
    entailed_fraction: float = 0.0

    def to_json(self) -> dict:
        return {
            "tasks": self.tasks,
            "errors": self.errors,
            "mean_iterations": self.mean_iterations,
            "entailed_fraction": self.entailed_fraction,
        }


def _dedupe_candidates(candidates: list[str], gateway: DbGateway, db_id: str,
                       k: int) -> list[tuple[int, str]]:
    """Keep the first occurrence of each structurally identical candidate,
    preserving original 1-based ranks; consider only the top-k."""
    schema = gateway.catalog.databases.get(db_id)
    seen: set = set()
    kept: list[tuple[int, str]] = []
    for rank, sql in enumerate(candidates[:k], start=1):
        try:
            key = parse(sql, schema, db_id=db_id).key()
        except (ParseError, UnsupportedSyntax, CycleSqlError):
            key = ("unparsed", " ".join(sql.split()).lower())
        if key in seen:
            continue
        seen.add(key)
        kept.append((rank, sql))
    return kept


def run_task(
    task: TranslationTask,
    gateway: DbGateway,
    verifier_backend,
    config: LoopConfig | None = None,
) -> LoopResult:
    """Validate candidates in rank order; first entailment wins."""
    config = config or LoopConfig()
    explainer = Explainer(gateway)
    limits = ExecutionLimits(timeout=config.timeout)
    schema = gateway.catalog.databases.get(task.db_id)
    rng = random.Random(config.seed) if config.row_policy == "seeded-random" else None

    trail: list[TrailEntry] = []
    verifier_calls = 0
    any_parsed = False

    for rank, sql in _dedupe_candidates(task.candidates, gateway, task.db_id, config.k):
        entry = TrailEntry(candidate=sql, rank=rank, parse_ok=False, exec_ok=False)
        trail.append(entry)
        try:
            query = parse(sql, schema, db_id=task.db_id)
            entry.parse_ok = True
            any_parsed = True
        except (ParseError, UnsupportedSyntax) as exc:
            entry.note = f"parse: {exc}"
            continue
        try:
            result = gateway.execute(task.db_id, query, limits)
            entry.exec_ok = True
        except CycleSqlError as exc:
            entry.note = f"execute: {exc}"
            continue

        explanation = explainer.explain(task.db_id, query, result, rng=rng)
        premise = assemble_premise(explanation, result, query)
        verdict = verify(
            NliInput(premise=premise, hypothesis=task.question.text),
            verifier_backend,
            context={"task_id": task.id, "db_id": task.db_id, "candidate_sql": sql},
        )
        verifier_calls += 1
        entry.verdict = verdict
        if verdict.entailed:
            return LoopResult(
                task_id=task.id,
                chosen_sql=sql,
                chosen_rank=rank,
                iterations=len(trail),
                verifier_calls=verifier_calls,
                trail=trail,
                explanation=explanation,
                fallback_used=False,
            )

    if not any_parsed:
        raise TaskError(f"task {task.id}: no candidate parses")

    return LoopResult(
        task_id=task.id,
        chosen_sql=task.candidates[0],
        chosen_rank=1,
        iterations=len(trail),
        verifier_calls=verifier_calls,
        trail=trail,
        explanation=None,
        fallback_used=True,
    )


def run_dataset(
    tasks,
    gateway: DbGateway,
    verifier_backend,
    config: LoopConfig | None = None,
    on_result=None,
):
    """Run every task, tolerating per-task errors; returns results plus
    aggregate statistics (mean iterations, entailed fraction)."""
    results: list[LoopResult] = []
    stats = DatasetStats()
    total_iterations = 0
    entailed = 0
    for task in tasks:
        stats.tasks += 1
        try:
            result = run_task(task, gateway, verifier_backend, config)
        except CycleSqlError as exc:
            stats.errors += 1
            result = LoopResult(
                task_id=task.id, chosen_sql=task.candidates[0], chosen_rank=1,
                iterations=0, verifier_calls=0, trail=[],
                fallback_used=True,
            )
            result.error = str(exc)  # type: ignore[attr-defined]
        results.append(result)
        total_iterations += result.iterations
        if not result.fallback_used:
            entailed += 1
        if on_result is not None:
            on_result(result)
    if stats.tasks:
        stats.mean_iterations = total_iterations / stats.tasks
        stats.entailed_fraction = entailed / stats.tasks
    return results, stats
