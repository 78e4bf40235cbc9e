import pytest

from cyclesql.errors import TaskError
from cyclesql.loop import LoopConfig, TranslationTask, run_dataset, run_task
from cyclesql.schema import NlQuery
from cyclesql.verifier import AlwaysEntailVerifier, HeuristicVerifier, OracleVerifier

from conftest import FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL, FLIGHT_QUESTION


def _task(task_id, candidates, question=FLIGHT_QUESTION, db_id="flight_2"):
    return TranslationTask(
        id=task_id,
        question=NlQuery(text=question, db_id=db_id),
        db_id=db_id,
        candidates=candidates,
    )


@pytest.fixture
def oracle(gateway):
    return OracleVerifier(gateway, {
        "wrong_then_right": FLIGHT_LIST_SQL,
        "right_first": FLIGHT_LIST_SQL,
        "all_wrong": FLIGHT_LIST_SQL,
        "dupes": FLIGHT_LIST_SQL,
        "mono_a": FLIGHT_LIST_SQL,
        "mono_b": FLIGHT_LIST_SQL,
        "skip_bad": FLIGHT_LIST_SQL,
    })


def test_second_candidate_wins(gateway, oracle):
    task = _task("wrong_then_right", [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL])
    result = run_task(task, gateway, oracle)
    assert result.chosen_rank == 2
    assert result.chosen_sql == FLIGHT_LIST_SQL
    assert result.iterations == 2 == len(result.trail)
    assert not result.fallback_used
    assert result.explanation is not None


def test_first_candidate_wins(gateway, oracle):
    task = _task("right_first", [FLIGHT_LIST_SQL, FLIGHT_COUNT_SQL])
    result = run_task(task, gateway, oracle)
    assert result.chosen_rank == 1 and result.iterations == 1


def test_all_rejected_falls_back_to_top1(gateway, oracle):
    wrong_two = "SELECT origin FROM flight WHERE flno = 2"
    task = _task("all_wrong", [FLIGHT_COUNT_SQL, wrong_two])
    result = run_task(task, gateway, oracle)
    assert result.fallback_used
    assert result.chosen_rank == 1
    assert result.chosen_sql == FLIGHT_COUNT_SQL
    assert all(t.verdict is None or not t.verdict.entailed for t in result.trail)


def test_duplicates_consume_one_verifier_call(gateway, oracle):
    task = _task("dupes", [FLIGHT_COUNT_SQL,
                           FLIGHT_COUNT_SQL.replace("SELECT", "select"),
                           FLIGHT_LIST_SQL])
    result = run_task(task, gateway, oracle)
    assert result.chosen_rank == 3
    assert result.verifier_calls == 2  # the case-folded duplicate is skipped


def test_unexecutable_candidate_skips_verifier(gateway, oracle):
    task = _task("skip_bad", ["SELECT nothing FROM nowhere", FLIGHT_LIST_SQL])
    result = run_task(task, gateway, oracle)
    assert result.chosen_rank == 2
    entry = result.trail[0]
    assert entry.parse_ok and not entry.exec_ok and entry.verdict is None
    assert result.verifier_calls == 1
    assert result.iterations == len(result.trail) == 2


def test_task_error_when_nothing_parses(gateway):
    task = _task("hopeless", ["SELEC broken", "also broken ("])
    with pytest.raises(TaskError):
        run_task(task, gateway, AlwaysEntailVerifier())


def test_chosen_sql_always_from_candidates(gateway, oracle):
    for candidates in ([FLIGHT_COUNT_SQL], [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL]):
        task = _task("mono_a", list(candidates))
        result = run_task(task, gateway, oracle)
        assert result.chosen_sql in candidates


def test_monotonicity_appending_after_choice(gateway, oracle):
    base = _task("mono_a", [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL])
    chosen = run_task(base, gateway, oracle)
    extended = _task("mono_b", [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL,
                                "SELECT origin FROM flight"])
    again = run_task(extended, gateway, oracle)
    assert (chosen.chosen_rank, chosen.chosen_sql) == (again.chosen_rank, again.chosen_sql)


def test_k_truncates_candidates(gateway, oracle):
    candidates = [FLIGHT_COUNT_SQL] * 5 + [FLIGHT_LIST_SQL]
    task = _task("all_wrong", candidates)
    result = run_task(task, gateway, oracle, LoopConfig(k=3))
    assert result.fallback_used  # the correct candidate sits beyond k


def test_run_dataset_mean_iterations(gateway, oracle):
    tasks = [
        _task("wrong_then_right", [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL]),
        _task("right_first", [FLIGHT_LIST_SQL]),
    ]
    results, stats = run_dataset(tasks, gateway, oracle)
    assert [r.iterations for r in results] == [2, 1]
    assert stats.mean_iterations == pytest.approx(1.5, abs=1e-12)
    assert stats.entailed_fraction == 1.0


def test_run_dataset_always_entail_is_top1(gateway):
    tasks = [
        _task("a", [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL]),
        _task("b", [FLIGHT_LIST_SQL, FLIGHT_COUNT_SQL]),
    ]
    results, stats = run_dataset(tasks, gateway, AlwaysEntailVerifier())
    assert all(r.chosen_rank == 1 for r in results)
    assert stats.mean_iterations == 1.0


def test_run_dataset_survives_task_errors(gateway):
    tasks = [
        _task("broken", ["SELEC nonsense"]),
        _task("fine", [FLIGHT_LIST_SQL]),
    ]
    results, stats = run_dataset(tasks, gateway, AlwaysEntailVerifier())
    assert stats.errors == 1
    assert len(results) == 2
    assert results[1].chosen_sql == FLIGHT_LIST_SQL


def test_heuristic_loop_on_flight_question(gateway):
    # the premise of the listing query covers the question's vocabulary
    task = _task("h1", [FLIGHT_LIST_SQL])
    result = run_task(task, gateway, HeuristicVerifier())
    assert result.chosen_rank == 1


def test_geometric_verdict_pattern_mean(gateway):
    """100 tasks whose correct candidate sits at rank (i mod 4) + 1: the mean
    iteration count equals the closed-form expectation (1+2+3+4)/4."""
    wrong_pool = [
        "SELECT destination FROM flight WHERE flno = 7",
        "SELECT origin FROM flight WHERE flno = 2",
        "SELECT origin FROM flight WHERE flno = 99",
    ]
    tasks, gold_map = [], {}
    for i in range(100):
        rank = (i % 4) + 1
        candidates = wrong_pool[: rank - 1] + [FLIGHT_LIST_SQL] + wrong_pool[rank - 1:]
        task_id = f"geo{i}"
        tasks.append(_task(task_id, candidates))
        gold_map[task_id] = FLIGHT_LIST_SQL
    from cyclesql.verifier import OracleVerifier

    _results, stats = run_dataset(tasks, gateway, OracleVerifier(gateway, gold_map))
    assert abs(stats.mean_iterations - 2.5) < 1e-9


def test_seeded_random_row_policy_deterministic(gateway):
    config = LoopConfig(row_policy="seeded-random", seed=11)
    task = _task("rowpol", ["SELECT origin FROM flight WHERE aid = 9"])
    first = run_task(task, gateway, AlwaysEntailVerifier(), config)
    second = run_task(task, gateway, AlwaysEntailVerifier(), config)
    assert first.explanation.text == second.explanation.text
