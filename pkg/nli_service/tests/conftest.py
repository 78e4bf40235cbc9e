import json
import random

import pytest

from nli_service.train import TrainConfig, train

WORDS = ["amber", "basalt", "cedar", "delta", "ember", "flint", "garnet", "harbor"]

SMOKE_CONFIG = TrainConfig(
    learning_rate=1e-3,
    epochs=40,
    batch_size=16,
    dim=64,
    heads=4,
    layers=2,
    max_len=64,
    seed=42,
    log_interval=2,
)


def synth_triples(n: int, seed: int) -> list[dict]:
    """Learnable toy task: entailment iff the hypothesis word appears in the
    premise.  Premises follow the three-segment shape of real inputs."""
    rng = random.Random(seed)
    triples = []
    for i in range(n):
        word = rng.choice(WORDS)
        if i % 2 == 0:
            premise = (
                f"The query returns one row with value {word}. | "
                f"value: {word} (1 row) | SELECT value FROM things WHERE tag = '{word}'"
            )
            label = 1
            hypothesis = f"which thing has value {word}?"
        else:
            other = rng.choice([w for w in WORDS if w != word])
            premise = (
                f"The query returns one row with value {other}. | "
                f"value: {other} (1 row) | SELECT value FROM things WHERE tag = '{other}'"
            )
            label = -1
            hypothesis = f"which thing has value {word}?"
        triples.append({"premise": premise, "hypothesis": hypothesis, "label": label})
    return triples


@pytest.fixture(scope="session")
def triples_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("train") / "triples.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for triple in synth_triples(200, seed=5):
            handle.write(json.dumps(triple) + "\n")
    return path


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory, triples_file):
    out = tmp_path_factory.mktemp("ckpt") / "model"
    return train(triples_file, out, SMOKE_CONFIG)
