import json

import pytest

from nli_service.train import TrainConfig, read_triples, train

from conftest import SMOKE_CONFIG


def test_read_triples_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"premise": "p", "hypothesis": "h", "label": 2}\n')
    with pytest.raises(SystemExit) as excinfo:
        read_triples(path)
    assert "bad.jsonl:1" in str(excinfo.value)


def test_smoke_training_loss_decreases(checkpoint):
    metrics = [json.loads(line) for line in
               (checkpoint / "metrics.jsonl").read_text().splitlines()]
    running = [m["running_mean"] for m in metrics if "running_mean" in m and m["epoch"] == 0]
    assert len(running) >= 3
    # monotone decrease across every logged mean of the first epoch
    for earlier, later in zip(running, running[1:]):
        assert later <= earlier + 1e-12, running
    assert running[-1] < running[0]
    print("\nACCEPTANCE nli-service smoke training (first-epoch means decrease "
          "monotonically): PASS", flush=True)


def test_checkpoint_contents(checkpoint):
    assert (checkpoint / "model.pt").exists()
    assert (checkpoint / "vocab.json").exists()
    config = json.loads((checkpoint / "config.json").read_text())
    assert config["gamma"] == SMOKE_CONFIG.gamma
    assert tuple(config["class_weights"]) == SMOKE_CONFIG.class_weights


def test_default_config_mirrors_training_settings():
    config = TrainConfig()
    assert config.gamma == 2.0
    assert config.alpha == 0.75
    assert config.class_weights == (2.7, 1.0)
    assert config.learning_rate == 5e-6


def test_train_cli(tmp_path, triples_file):
    from nli_service.train import main

    out = tmp_path / "cli_ckpt"
    code = main([
        "--triples", str(triples_file), "--out", str(out),
        "--epochs", "1", "--learning-rate", "1e-3", "--batch-size", "32",
    ])
    assert code == 0
    assert (out / "model.pt").exists()
