"""Tokenizer, vocabulary, and the joint premise/hypothesis encoder.

The hypothesis and premise are concatenated around a separator token,
encoded by a small transformer, mean-pooled over non-padding positions, and
classified by a linear head into P(entailment).  The base encoder is a
configuration choice; this from-scratch module keeps smoke training fast
and fully offline.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import torch
from torch import nn

PAD, UNK, SEP = 0, 1, 2
_TOKEN_RE = re.compile(r"[a-z0-9_']+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    def __init__(self, tokens_to_ids: dict[str, int] | None = None):
        self.tokens_to_ids = tokens_to_ids or {}

    @classmethod
    def build(cls, texts, max_size: int = 12000) -> "Vocabulary":
        counts: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                counts[token] = counts.get(token, 0) + 1
        ordered = sorted(counts, key=lambda t: (-counts[t], t))[: max_size - 3]
        return cls({token: idx + 3 for idx, token in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.tokens_to_ids) + 3

    def encode_pair(self, hypothesis: str, premise: str, max_len: int) -> list[int]:
        ids = [self.tokens_to_ids.get(t, UNK) for t in tokenize(hypothesis)]
        ids.append(SEP)
        ids.extend(self.tokens_to_ids.get(t, UNK) for t in tokenize(premise))
        return ids[:max_len]

    def to_json(self) -> dict:
        return self.tokens_to_ids

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        return cls(dict(data))


class EncoderClassifier(nn.Module):
    def __init__(self, vocab_size: int, dim: int = 96, heads: int = 4,
                 layers: int = 2, max_len: int = 256):
        super().__init__()
        self.max_len = max_len
        self.embed = nn.Embedding(vocab_size, dim, padding_idx=PAD)
        self.position = nn.Embedding(max_len, dim)
        encoder_layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=dim * 2,
            dropout=0.0, batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(encoder_layer, num_layers=layers)
        self.head = nn.Linear(dim, 1)

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        """token_ids: (batch, seq) padded with PAD; returns P(entailment)."""
        mask = token_ids.eq(PAD)
        positions = torch.arange(token_ids.size(1), device=token_ids.device)
        hidden = self.embed(token_ids) + self.position(positions)[None, :, :]
        encoded = self.encoder(hidden, src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).float()
        pooled = (encoded * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        logits = self.head(pooled).squeeze(-1)
        return torch.sigmoid(logits.double())


def pad_batch(sequences: list[list[int]]) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    return torch.tensor(
        [s + [PAD] * (width - len(s)) for s in sequences], dtype=torch.long
    )


def save_checkpoint(directory: str | Path, model: EncoderClassifier,
                    vocab: Vocabulary, config: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), directory / "model.pt")
    (directory / "vocab.json").write_text(json.dumps(vocab.to_json()), encoding="utf-8")
    (directory / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return directory


def load_checkpoint(directory: str | Path) -> tuple[EncoderClassifier, Vocabulary, dict]:
    directory = Path(directory)
    config = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    vocab = Vocabulary.from_json(json.loads((directory / "vocab.json").read_text(encoding="utf-8")))
    model = EncoderClassifier(
        vocab_size=len(vocab),
        dim=config["dim"],
        heads=config["heads"],
        layers=config["layers"],
        max_len=config["max_len"],
    )
    model.load_state_dict(torch.load(directory / "model.pt", weights_only=True))
    model.eval()
    return model, vocab, config
