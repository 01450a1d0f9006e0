"""Corpus ingestion and training-example sampling.

Corpus files are JSONL rows with at least {"rules": [ints], "c0": int,
"cinf": int}; rows without a defined condition are skipped.  A training
example is a uniformly drawn (expression, cut position t) pair: the input is
the prefix r_1..r_t with the condition, the label is r_{t+1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Sequence:
    rules: tuple[int, ...]
    c0: int
    cinf: int


def read_corpus(path) -> list[Sequence]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if row.get("c0") is None or row.get("cinf") is None:
                continue
            rules = tuple(int(r) for r in row["rules"])
            if len(rules) < 2:
                continue
            out.append(Sequence(rules, int(row["c0"]), int(row["cinf"])))
    if not out:
        raise ValueError(f"no usable sequences in {path}")
    return out


def draw_example(sequences: list[Sequence], rng) -> tuple[tuple[int, ...], int, int, int]:
    """One (prefix, c0, cinf, next_rule) draw: expression uniform, then cut
    position t uniform over 1..L-1."""
    seq = sequences[rng.randrange(len(sequences))]
    t = rng.randrange(1, len(seq.rules))
    return seq.rules[:t], seq.c0, seq.cinf, seq.rules[t]
