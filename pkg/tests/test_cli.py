import json

from cyclesql.cli import main

from conftest import ANGUILLA_CONTINENT_SQL, FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL, FLIGHT_QUESTION


def test_cli_explain_text(dataset_root, capsys):
    code = main([
        "explain", "--db-root", str(dataset_root), "--db-id", "flight_2",
        "--sql", FLIGHT_COUNT_SQL,
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "2 flights in total" in out


def test_cli_explain_json_row(dataset_root, capsys):
    code = main([
        "explain", "--db-root", str(dataset_root), "--db-id", "world_1",
        "--sql", ANGUILLA_CONTINENT_SQL, "--row", "0", "--json",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["row"] == ["North America"]
    assert "North America" in payload["text"]


def test_cli_verify_heuristic(dataset_root, capsys):
    code = main([
        "verify", "--db-root", str(dataset_root), "--db-id", "flight_2",
        "--question", FLIGHT_QUESTION, "--sql", FLIGHT_LIST_SQL,
        "--verifier", "heuristic",
    ])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["label"] == "entailment"
    assert payload["premise"].count(" | ") == 2


def test_cli_loop_eval_round_trip(dataset_root, tmp_path, capsys):
    tasks_file = tmp_path / "tasks.jsonl"
    with open(tasks_file, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({
            "id": "t0", "db_id": "flight_2", "question": FLIGHT_QUESTION,
            "candidates": [FLIGHT_COUNT_SQL, FLIGHT_LIST_SQL],
        }) + "\n")
    gold_file = tmp_path / "gold.json"
    gold_file.write_text(json.dumps([
        {"id": "t0", "question": FLIGHT_QUESTION, "query": FLIGHT_LIST_SQL,
         "db_id": "flight_2"},
    ]), encoding="utf-8")
    results_file = tmp_path / "results.jsonl"

    code = main([
        "loop", "--dataset", str(tasks_file), "--db-root", str(dataset_root),
        "--verifier", "oracle", "--gold", str(gold_file), "--k", "8",
        "--out", str(results_file),
    ])
    assert code == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["tasks"] == 1

    rows = [json.loads(l) for l in results_file.read_text().splitlines()]
    assert rows[0]["chosen_rank"] == 2
    assert rows[0]["iterations"] == 2
    assert {"id", "chosen_sql", "chosen_rank", "iterations", "fallback_used",
            "explanation", "trail"} <= set(rows[0])

    report_file = tmp_path / "report.json"
    code = main([
        "eval", "--results", str(results_file), "--gold", str(gold_file),
        "--db-root", str(dataset_root), "--metrics", "em,ex",
        "--report", str(report_file),
    ])
    assert code == 0
    report = json.loads(report_file.read_text())
    assert report["ex"] == 1.0
    assert report["mean_iterations"] == 2.0


def test_cli_gen_train(dataset_root, tmp_path, capsys):
    gold_file = tmp_path / "gold.json"
    gold_file.write_text(json.dumps([
        {"id": "g0", "question": FLIGHT_QUESTION, "query": FLIGHT_LIST_SQL,
         "db_id": "flight_2"},
    ]), encoding="utf-8")
    preds_file = tmp_path / "preds.jsonl"
    preds_file.write_text(json.dumps({"id": "g0", "sql": FLIGHT_COUNT_SQL}) + "\n",
                          encoding="utf-8")
    out_file = tmp_path / "triples.jsonl"

    code = main([
        "gen-train", "--gold", str(gold_file), "--preds", str(preds_file),
        "--db-root", str(dataset_root), "--seed", "17", "--out", str(out_file),
    ])
    assert code == 0
    triples = [json.loads(l) for l in out_file.read_text().splitlines()]
    assert sorted(t["label"] for t in triples) == [-1, 1]
    for triple in triples:
        assert set(triple) == {"premise", "hypothesis", "label"}
        assert triple["premise"].count(" | ") == 2


def test_cli_error_exit_code(dataset_root, capsys):
    code = main([
        "explain", "--db-root", str(dataset_root), "--db-id", "flight_2",
        "--sql", "SELECT nosuch FROM nowhere",
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err
