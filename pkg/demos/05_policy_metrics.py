#!/usr/bin/env python3
"""Generative-model metrics on the desk corpus: per-condition success rate,
mean L1 distance to the desired leading powers, and novelty, for the
empirical baseline policies."""

from pathlib import Path

from asymreg.corpus import read_jsonl
from asymreg.metrics import (
    TrainingIndex,
    aggregate,
    cell_metrics,
    generate_batch,
    grid_conditions,
)
from asymreg.policies import UniformPolicy, build_empirical

DATA = Path(__file__).resolve().parent.parent / "data" / "desk"
train = read_jsonl(DATA / "train.jsonl")
index = TrainingIndex.from_records(train)
print(f"training corpus: {len(train)} expressions, "
      f"{len({(r.c0, r.cinf) for r in train})} conditions\n")

MODELS = {
    "random": UniformPolicy(),
    "fh": build_empirical(train, "fh"),
    "fhnc": build_empirical(train, "fhnc"),
    "lhnc:8": build_empirical(train, "lhnc", l=8),
}

print(f"{'model':8s} {'in-sample suc%':>14s} {'syn%':>6s} {'sem%':>6s} "
      f"{'L1<=4':>6s} {'L1@5':>6s} {'L1@6':>6s} {'out suc':>8s}")
for name, policy in MODELS.items():
    grid = {}
    for cond in grid_conditions():
        batch = generate_batch(policy, cond, k=25, length_limit=100, rng_seed=1)
        grid[(cond.c0, cond.cinf)] = cell_metrics(batch, index)
    rep = aggregate(grid, name)
    ins, outs, l1 = rep["in_sample"], rep["out_of_sample"], rep["mean_l1_by_m"]
    print(f"{name:8s} {100 * ins['success_rate_avg']:14.1f} "
          f"{100 * ins['syn_rate_avg']:6.1f} {100 * ins['sem_rate_avg']:6.1f} "
          f"{l1['le4']:6.2f} {l1['m5']:6.2f} {l1['m6']:6.2f} "
          f"{outs['success_total']:8d}")

print("\nThe full-history lookup reproduces its training set exactly (so it is")
print("never novel and fails outright off-distribution); the unconditioned")
print("variants generate the same mixture everywhere.  Closing this gap is")
print("the conditioned neural policy's job (see the service package).")
