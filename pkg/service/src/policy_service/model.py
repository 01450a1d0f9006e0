"""Recurrent next-rule model: rule embeddings with the condition pair
concatenated at every timestep, a (bi)directional GRU, and a softmax head
over the nine rules, masked to the grammatically valid ones."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import torch
import torch.nn as nn
from torch.nn.utils.rnn import pack_padded_sequence

from .vocab import N_RULES, valid_mask, vocab_hash

MASK_FILL = -1e9


@dataclass
class ModelConfig:
    embedding_dim: int = 10
    recurrent_units: int = 64
    bidirectional: bool = True
    conditioned: bool = True
    max_sequence: int = 100

    @staticmethod
    def paper_scale(conditioned: bool = True) -> "ModelConfig":
        return ModelConfig(recurrent_units=1000, conditioned=conditioned)


class NextRuleModel(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(N_RULES, config.embedding_dim)
        self.gru = nn.GRU(config.embedding_dim + 2, config.recurrent_units,
                          batch_first=True, bidirectional=config.bidirectional)
        width = config.recurrent_units * (2 if config.bidirectional else 1)
        self.head = nn.Linear(width, N_RULES)

    def forward(self, rules: torch.Tensor, lengths: torch.Tensor,
                conditions: torch.Tensor) -> torch.Tensor:
        """rules (B, T) int64 padded, lengths (B,), conditions (B, 2) float;
        returns unmasked logits (B, 9)."""
        emb = self.embed(rules)
        if not self.config.conditioned:
            conditions = torch.zeros_like(conditions)
        cond = conditions.unsqueeze(1).expand(-1, rules.shape[1], -1)
        x = torch.cat([emb, cond], dim=2)
        packed = pack_padded_sequence(x, lengths.cpu(), batch_first=True,
                                      enforce_sorted=False)
        _, h = self.gru(packed)
        if self.config.bidirectional:
            h = torch.cat([h[0], h[1]], dim=1)
        else:
            h = h[0]
        return self.head(h)


def batch_tensors(prefixes, conditions):
    """Pad a list of rule prefixes into model inputs."""
    lengths = torch.tensor([len(p) for p in prefixes], dtype=torch.int64)
    max_len = int(lengths.max())
    rules = torch.zeros((len(prefixes), max_len), dtype=torch.int64)
    for i, p in enumerate(prefixes):
        rules[i, : len(p)] = torch.tensor(p, dtype=torch.int64)
    cond = torch.tensor(conditions, dtype=torch.float32)
    return rules, lengths, cond


def masked_probs(model: NextRuleModel, rules_prefix, c0: int, cinf: int) -> list[float]:
    """Serving path: masked, renormalized distribution for one request."""
    mask = valid_mask(list(rules_prefix))
    if not rules_prefix:
        # Fresh derivation: only the start rule is valid, nothing to encode.
        n = sum(mask)
        return [1.0 / n if m else 0.0 for m in mask]
    with torch.no_grad():
        model.eval()
        r, lengths, cond = batch_tensors([list(rules_prefix)], [(float(c0), float(cinf))])
        logits = model(r, lengths, cond)[0]
        fill = torch.tensor([0.0 if m else MASK_FILL for m in mask])
        probs = torch.softmax(logits + fill, dim=0)
    # Renormalize in double precision: the reply contract is an exact unit
    # sum, tighter than float32 softmax can hold.
    values = [float(p) for p in probs]
    total = sum(values)
    return [v / total for v in values]


def save_artifact(out_dir, model: NextRuleModel, metrics: dict) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "model": asdict(model.config),
        "vocab_hash": vocab_hash(),
        "metrics": metrics,
    }
    with open(out_dir / "config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    torch.save(model.state_dict(), out_dir / "model.pt")


class ArtifactError(RuntimeError):
    pass


def load_artifact(model_dir) -> NextRuleModel:
    model_dir = Path(model_dir)
    try:
        with open(model_dir / "config.json") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"cannot read artifact config: {exc}")
    if config.get("vocab_hash") != vocab_hash():
        raise ArtifactError(
            "artifact was trained against a different rule vocabulary "
            f"(hash {config.get('vocab_hash')!r})")
    model = NextRuleModel(ModelConfig(**config["model"]))
    state = torch.load(model_dir / "model.pt", map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model
