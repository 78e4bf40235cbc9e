"""Training loop over premise/hypothesis/label triples.

Reads JSONL triples ({"premise", "hypothesis", "label"} with +1/-1 labels),
builds a vocabulary, and optimizes the encoder with the focal-loss
objective.  Logs a running per-epoch mean at every interval to
``metrics.jsonl`` inside the checkpoint directory.
"""

from __future__ import annotations

import argparse
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from .loss import focal_loss_tensor
from .model import EncoderClassifier, Vocabulary, pad_batch, save_checkpoint


@dataclass
class TrainConfig:
    gamma: float = 2.0
    alpha: float = 0.75
    class_weights: tuple = (2.7, 1.0)
    learning_rate: float = 5e-6
    epochs: int = 1
    batch_size: int = 16
    base_model: str = "tiny-transformer"
    dim: int = 96
    heads: int = 4
    layers: int = 2
    max_len: int = 256
    vocab_size: int = 12000
    seed: int = 13
    log_interval: int = 2  # batches between metric log lines

    def __post_init__(self):
        assert self.gamma >= 0
        assert 0.0 <= self.alpha <= 1.0
        assert self.class_weights[0] > 0 and self.class_weights[1] > 0


def read_triples(path: str | Path) -> list[dict]:
    triples = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                premise, hypothesis = obj["premise"], obj["hypothesis"]
                label = int(obj["label"])
                assert label in (1, -1)
            except (json.JSONDecodeError, KeyError, ValueError, AssertionError) as exc:
                raise SystemExit(f"{path}:{line_number}: bad triple: {exc}")
            triples.append({"premise": premise, "hypothesis": hypothesis, "label": label})
    if not triples:
        raise SystemExit(f"{path}: no triples found")
    return triples


def train(triples_path: str | Path, out_dir: str | Path,
          config: TrainConfig | None = None) -> Path:
    config = config or TrainConfig()
    torch.manual_seed(config.seed)
    torch.set_num_threads(1)
    rng = random.Random(config.seed)

    triples = read_triples(triples_path)
    vocab = Vocabulary.build(
        [t["premise"] for t in triples] + [t["hypothesis"] for t in triples],
        max_size=config.vocab_size,
    )

    model = EncoderClassifier(
        vocab_size=len(vocab), dim=config.dim, heads=config.heads,
        layers=config.layers, max_len=config.max_len,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"
    metrics_log = open(metrics_path, "w", encoding="utf-8")

    step = 0
    for epoch in range(config.epochs):
        order = list(range(len(triples)))
        rng.shuffle(order)
        epoch_loss_sum = 0.0
        epoch_examples = 0
        batches_done = 0
        for start in range(0, len(order), config.batch_size):
            batch = [triples[i] for i in order[start:start + config.batch_size]]
            token_ids = pad_batch([
                vocab.encode_pair(t["hypothesis"], t["premise"], config.max_len)
                for t in batch
            ])
            labels = torch.tensor([t["label"] for t in batch], dtype=torch.long)
            probs = model(token_ids)
            loss = focal_loss_tensor(
                probs, labels, config.gamma, config.alpha, tuple(config.class_weights)
            )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            step += 1
            batches_done += 1
            epoch_loss_sum += float(loss.item()) * len(batch)
            epoch_examples += len(batch)
            if batches_done % config.log_interval == 0:
                metrics_log.write(json.dumps({
                    "step": step,
                    "epoch": epoch,
                    "batch_loss": float(loss.item()),
                    "running_mean": epoch_loss_sum / epoch_examples,
                }) + "\n")
        metrics_log.write(json.dumps({
            "step": step,
            "epoch": epoch,
            "epoch_mean": epoch_loss_sum / max(epoch_examples, 1),
        }) + "\n")
    metrics_log.close()

    payload = asdict(config)
    payload["class_weights"] = list(config.class_weights)
    return save_checkpoint(out_dir, model, vocab, payload)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nli-train")
    parser.add_argument("--triples", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--config", help="JSON file overriding TrainConfig fields")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--batch-size", type=int)
    args = parser.parse_args(argv)

    overrides = {}
    if args.config:
        overrides.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.learning_rate is not None:
        overrides["learning_rate"] = args.learning_rate
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    if "class_weights" in overrides:
        overrides["class_weights"] = tuple(overrides["class_weights"])
    config = TrainConfig(**overrides)
    out = train(args.triples, args.out, config)
    print(f"checkpoint written to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
