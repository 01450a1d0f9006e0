"""Generative-model metrics: per-condition success rate, mean L1 distance to
the desired leading powers, syntactic / semantic novelty against a training
corpus, grid aggregation and diversity curves.

The condition grid covers |p0| <= 9 and |pinf| <= 9 (361 cells); cells with
M <= 4 form the in-sample region (41 cells).  In-sample metrics aggregate as
averages over conditions, out-of-sample as totals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import grammar
from .grammar import Incomplete
from .policies import UnseenContextError
from .rational import DEFINED, Condition, canonicalize, leading_powers

GRID_BOUND = 9
IN_SAMPLE_M = 4

# L1 distance charged to generations with no defined leading powers
# (non-terminal or undefined): the distance between (0,0) and (9,9).
L1_SENTINEL = 18.0


def grid_conditions(bound: int = GRID_BOUND) -> list[Condition]:
    return [Condition(a, b) for a in range(-bound, bound + 1)
            for b in range(-bound, bound + 1)]


@dataclass(frozen=True)
class Generation:
    """One sampled expression: text/key/condition when complete, or the
    incomplete marker."""

    text: str | None
    key: str | None
    achieved: Condition | None

    @property
    def complete(self) -> bool:
        return self.text is not None


@dataclass
class GenerationBatch:
    condition: Condition
    generations: list[Generation]

    @property
    def k(self) -> int:
        return len(self.generations)


@dataclass(frozen=True)
class TrainingIndex:
    texts: frozenset
    keys: frozenset

    @staticmethod
    def from_records(records) -> "TrainingIndex":
        return TrainingIndex(frozenset(r.expr for r in records),
                             frozenset(r.key for r in records))


def _observe(result) -> Generation:
    if isinstance(result, Incomplete):
        return Generation(None, None, None)
    text = grammar.render(result)
    key = canonicalize(result).text
    lp = leading_powers(result)
    achieved = Condition(lp.p0, lp.pinf) if lp.status == DEFINED else None
    return Generation(text, key, achieved)


def condition_seed(base_seed: int, condition: Condition) -> int:
    # Seeds derive from the condition itself, not the iteration order, so a
    # permuted grid reproduces identical per-condition batches.
    return (base_seed * 524287 + (condition.c0 + 16) * 64 + (condition.cinf + 16)) % (2 ** 63)


def generate_batch(policy, condition: Condition, k: int, length_limit: int = 100,
                   rng_seed: int = 0) -> GenerationBatch:
    """Sample k expressions for one condition; refused or capped samples are
    recorded as incomplete."""
    rng = random.Random(condition_seed(rng_seed, condition))
    gens = []
    for _ in range(k):
        try:
            result = grammar.sample_with_rng(policy, condition, rng, length_limit)
        except UnseenContextError:
            result = Incomplete(grammar.fresh_state(length_limit))
        gens.append(_observe(result))
    return GenerationBatch(condition, gens)


def success_rate(batch: GenerationBatch) -> float:
    if not batch.generations:
        return 0.0
    hits = sum(1 for g in batch.generations if g.achieved == batch.condition)
    return hits / batch.k


def mean_l1(batch: GenerationBatch) -> float:
    """Mean L1 distance between achieved and desired powers, with the
    sentinel substituted for generations lacking defined powers."""
    if not batch.generations:
        return 0.0
    total = 0.0
    c = batch.condition
    for g in batch.generations:
        if g.achieved is None:
            total += L1_SENTINEL
        else:
            total += abs(c.c0 - g.achieved.c0) + abs(c.cinf - g.achieved.cinf)
    return total / batch.k


def novelty(batch: GenerationBatch, index: TrainingIndex) -> tuple[float, float]:
    """(syntactic rate, semantic rate): unique condition-matching generations
    absent from the training set by text, respectively by canonical key,
    divided by k."""
    syn, sem = novelty_counts(batch, index)
    if batch.k == 0:
        return 0.0, 0.0
    return syn / batch.k, sem / batch.k


def novelty_counts(batch: GenerationBatch, index: TrainingIndex) -> tuple[int, int]:
    syn_texts = set()
    sem_keys = set()
    for g in batch.generations:
        if g.achieved != batch.condition:
            continue
        if g.text not in index.texts:
            syn_texts.add(g.text)
            if g.key not in index.keys:
                sem_keys.add(g.key)
    return len(syn_texts), len(sem_keys)


@dataclass
class CellMetrics:
    condition: Condition
    k: int
    success_rate: float
    success_count: int
    mean_l1: float
    syn_unique: int
    sem_unique: int

    @property
    def syn_rate(self) -> float:
        return self.syn_unique / self.k if self.k else 0.0

    @property
    def sem_rate(self) -> float:
        return self.sem_unique / self.k if self.k else 0.0


def cell_metrics(batch: GenerationBatch, index: TrainingIndex) -> CellMetrics:
    syn, sem = novelty_counts(batch, index)
    sr = success_rate(batch)
    return CellMetrics(batch.condition, batch.k, sr, round(sr * batch.k),
                       mean_l1(batch), syn, sem)


def condition_grid(policy_for, k: int, index: TrainingIndex, rng_seed: int = 0,
                   bound: int = GRID_BOUND, length_limit: int = 100) -> dict:
    """Evaluate one model over the full condition grid.

    ``policy_for`` maps a condition to the policy object to sample from (a
    constant function for most models; lets connection-backed policies
    recycle one handle).
    """
    grid = {}
    for cond in grid_conditions(bound):
        batch = generate_batch(policy_for(cond), cond, k, length_limit, rng_seed)
        grid[(cond.c0, cond.cinf)] = cell_metrics(batch, index)
    return grid


def aggregate(grid: dict, model: str = "") -> dict:
    """Collapse a condition grid into the standard comparison row: in-sample
    averages, out-of-sample totals, and mean L1 by condition complexity."""
    in_cells = [c for c in grid.values() if c.condition.m <= IN_SAMPLE_M]
    out_cells = [c for c in grid.values() if c.condition.m > IN_SAMPLE_M]

    def avg(values):
        values = list(values)
        return sum(values) / len(values) if values else 0.0

    report = {
        "model": model,
        "in_sample": {
            "conditions": len(in_cells),
            "success_rate_avg": avg(c.success_rate for c in in_cells),
            "syn_rate_avg": avg(c.syn_rate for c in in_cells),
            "sem_rate_avg": avg(c.sem_rate for c in in_cells),
            "mean_l1": avg(c.mean_l1 for c in in_cells),
        },
        "out_of_sample": {
            "conditions": len(out_cells),
            "success_total": sum(c.success_count for c in out_cells),
            "syn_total": sum(c.syn_unique for c in out_cells),
            "sem_total": sum(c.sem_unique for c in out_cells),
            "conditions_with_success": sum(1 for c in out_cells if c.success_count > 0),
        },
        "mean_l1_by_m": {
            "le4": avg(c.mean_l1 for c in in_cells),
            "m5": avg(c.mean_l1 for c in grid.values() if c.condition.m == 5),
            "m6": avg(c.mean_l1 for c in grid.values() if c.condition.m == 6),
            "m7": avg(c.mean_l1 for c in grid.values() if c.condition.m == 7),
        },
    }
    return report


def diversity_curve(generations, condition: Condition) -> tuple[list[int], list[int]]:
    """Cumulative counts of unique condition-matching texts and canonical
    keys among the first n generations; both curves are non-decreasing and
    the semantic curve never exceeds the syntactic one."""
    texts = set()
    keys = set()
    syn_curve = []
    sem_curve = []
    for g in generations:
        if g.achieved == condition:
            texts.add(g.text)
            keys.add(g.key)
        syn_curve.append(len(texts))
        sem_curve.append(len(keys))
    return syn_curve, sem_curve


def write_grid_csv(grid: dict, path) -> None:
    """Emit the grid as (c0, cinf, metric, value) rows for external plotting."""
    with open(path, "w") as fh:
        fh.write("c0,cinf,metric,value\n")
        for (c0, cinf) in sorted(grid):
            cell = grid[(c0, cinf)]
            for metric, value in (
                ("success_rate", cell.success_rate),
                ("mean_l1", cell.mean_l1),
                ("syn_rate", cell.syn_rate),
                ("sem_rate", cell.sem_rate),
            ):
                fh.write(f"{c0},{cinf},{metric},{value}\n")
