#!/usr/bin/env python3
"""The dataset pipeline at toy scale: enumerate every short expression,
group by canonical form, keep the shortest per group, grow the pool by leaf
replacement, then balance per condition and split."""

from collections import Counter

from asymreg.corpus import (
    DatasetConfig,
    build_dataset,
    downsample,
    enumerate_records,
    space_size,
)

print("Expression-space size by maximum rule-sequence length:")
for n in (10, 19, 31, 100):
    print(f"  within {n:3d} rules: {float(space_size(n)):9.3g} expressions")

records = list(enumerate_records(8))
print(f"\nExhaustive enumeration within 8 rules: {len(records)} complete expressions")
groups = Counter(r.key for r in records)
print(f"  distinct canonical forms: {len(groups)}")
print(f"  largest group: {groups.most_common(1)[0]}")
kept = downsample(records, keep=20)
print(f"  after per-group downsampling (20 shortest each): {len(kept)} kept")

config = DatasetConfig(max_rules=10, rounds=1, per_condition_cap=10,
                       holdout_per_condition=2, seed=0)
result = build_dataset(config)
print("\nToy dataset build (one augmentation round, cap 10 per condition):")
for line in result.log:
    print(f"  {line}")
for name, split in result.splits().items():
    conds = len({(r.c0, r.cinf) for r in split})
    print(f"  {name:14s} {len(split):4d} expressions over {conds} conditions")
