"""Training loop: masked-softmax cross-entropy on randomly cut prefixes,
exponential learning-rate decay, early stopping on validation loss."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .data import Sequence, draw_example
from .model import MASK_FILL, ModelConfig, NextRuleModel, batch_tensors
from .vocab import valid_mask


@dataclass
class TrainConfig:
    batch_size: int = 128
    lr: float = 1e-3
    decay_base: float = 0.99
    decay_every: int = 100_000
    max_steps: int = 4000
    eval_every: int = 250
    patience: int = 8
    val_examples: int = 2048
    seed: int = 0

    @staticmethod
    def paper_scale() -> "TrainConfig":
        return TrainConfig(batch_size=256, max_steps=10_000_000)


def _make_batch(sequences: list[Sequence], rng, n: int):
    prefixes, conds, labels, masks = [], [], [], []
    for _ in range(n):
        prefix, c0, cinf, label = draw_example(sequences, rng)
        prefixes.append(list(prefix))
        conds.append((float(c0), float(cinf)))
        labels.append(label)
        masks.append(valid_mask(list(prefix)))
    rules, lengths, cond = batch_tensors(prefixes, conds)
    label_t = torch.tensor(labels, dtype=torch.int64)
    mask_t = torch.tensor(masks, dtype=torch.bool)
    return rules, lengths, cond, label_t, mask_t


def _masked_loss(model: NextRuleModel, batch) -> torch.Tensor:
    rules, lengths, cond, labels, mask = batch
    logits = model(rules, lengths, cond)
    logits = logits.masked_fill(~mask, MASK_FILL)
    return F.cross_entropy(logits, labels)


def _accuracy(model: NextRuleModel, batch) -> float:
    rules, lengths, cond, labels, mask = batch
    with torch.no_grad():
        logits = model(rules, lengths, cond).masked_fill(~mask, MASK_FILL)
        pred = logits.argmax(dim=1)
    return float((pred == labels).float().mean())


def train(train_sequences: list[Sequence], val_sequences: list[Sequence],
          model_cfg: ModelConfig, train_cfg: TrainConfig,
          log=None) -> tuple[NextRuleModel, dict]:
    """Returns (best model, metrics).  Raises RuntimeError on divergence."""
    torch.manual_seed(train_cfg.seed)
    rng = random.Random(train_cfg.seed)
    model = NextRuleModel(model_cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)

    val_rng = random.Random(train_cfg.seed + 1)
    val_batch = _make_batch(val_sequences, val_rng, train_cfg.val_examples)

    def val_loss() -> float:
        model.eval()
        with torch.no_grad():
            loss = float(_masked_loss(model, val_batch))
        model.train()
        return loss

    initial_val = val_loss()
    best_val = initial_val
    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    best_step = 0
    evals_since_best = 0
    history = []

    model.train()
    for step in range(1, train_cfg.max_steps + 1):
        batch = _make_batch(train_sequences, rng, train_cfg.batch_size)
        optimizer.zero_grad()
        loss = _masked_loss(model, batch)
        loss_val = loss.item()
        if not math.isfinite(loss_val):
            raise RuntimeError(f"training diverged at step {step}: loss={loss_val}")
        loss.backward()
        optimizer.step()
        if step % train_cfg.decay_every == 0:
            for group in optimizer.param_groups:
                group["lr"] *= train_cfg.decay_base
        if step % train_cfg.eval_every == 0:
            v = val_loss()
            history.append({"step": step, "train_loss": loss_val, "val_loss": v})
            if log is not None:
                log.append(f"step {step}: train {loss_val:.4f} val {v:.4f}")
            if v < best_val:
                best_val = v
                best_state = {k: t.detach().clone() for k, t in model.state_dict().items()}
                best_step = step
                evals_since_best = 0
            else:
                evals_since_best += 1
                if evals_since_best >= train_cfg.patience:
                    break

    model.load_state_dict(best_state)
    model.eval()
    metrics = {
        "initial_val_loss": initial_val,
        "best_val_loss": best_val,
        "best_step": best_step,
        "final_train_accuracy": _accuracy(model, _make_batch(train_sequences,
                                                             random.Random(9), 2048)),
        "history": history,
    }
    return model, metrics
