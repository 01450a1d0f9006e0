#!/usr/bin/env python3
"""Train and save the committed desk-scale artifacts: the conditioned model
(desk_nn) and its unconditioned ablation (desk_nnnc), both 64-unit
bidirectional, trained on data/desk with fixed seeds."""

import sys
import time
from pathlib import Path

import torch

from policy_service import ModelConfig, TrainConfig, read_corpus, save_artifact, train

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
DESK = REPO_ROOT / "data" / "desk"
OUT = Path(__file__).resolve().parent.parent / "artifacts"


def main() -> int:
    torch.set_num_threads(4)
    train_seqs = read_corpus(DESK / "train.jsonl")
    val_seqs = read_corpus(DESK / "validation.jsonl")
    for name, conditioned in (("desk_nn", True), ("desk_nnnc", False)):
        t0 = time.time()
        log: list[str] = []
        model, metrics = train(
            train_seqs, val_seqs,
            ModelConfig(recurrent_units=64, conditioned=conditioned),
            TrainConfig(max_steps=4000, seed=0),
            log,
        )
        save_artifact(OUT / name, model, metrics)
        print(f"{name}: val {metrics['initial_val_loss']:.3f} -> "
              f"{metrics['best_val_loss']:.3f} (step {metrics['best_step']}), "
              f"train acc {metrics['final_train_accuracy']:.3f}, "
              f"{time.time() - t0:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
