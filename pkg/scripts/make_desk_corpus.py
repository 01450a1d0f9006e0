#!/usr/bin/env python3
"""Regenerate the committed desk-scale corpus under data/desk.

The committed corpus runs the full four downsample/augment rounds (not the
two-round desk default) with desk-sized caps: the fourth round is what
brings training coverage to all 41 in-sample conditions, which the
policy-model comparisons rely on.  Takes a minute or two.
"""

import sys
from pathlib import Path

from asymreg.corpus import DatasetConfig, build_dataset, write_dataset

OUT = Path(__file__).resolve().parent.parent / "data" / "desk"


def main() -> int:
    config = DatasetConfig(max_rules=10, rounds=4, per_condition_cap=40,
                           holdout_per_condition=5, seed=0)
    stats = write_dataset(build_dataset(config), config, OUT)
    for name, s in stats["splits"].items():
        print(f"{name}: {s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
