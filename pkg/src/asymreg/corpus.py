"""Dataset pipeline: exhaustive enumeration, canonical-group downsampling,
leaf-replacement augmentation, per-condition balancing and splits.

The pipeline shape is enumerate -> (downsample -> augment) x rounds ->
downsample -> balance -> split, then holdout pools are drawn per condition.
All stages are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import grammar
from .grammar import Expr, fresh_state, from_rules, parse_text, render, to_rules
from .objective import EXTRAPOLATION_XS, INTERPOLATION_XS, TRAIN_XS, eval_tree
from .rational import Condition, canonicalize, condition_of

# Replacement atoms for augmentation, substituted for one '1' or 'x' leaf.
REPLACEMENTS = (
    "( 1 / x )",
    "( x / ( 1 + x ) )",
    "( x / ( 1 - x ) )",
    "( 1 / ( 1 + x ) )",
    "( 1 / ( 1 - x ) )",
    "( 1 - x )",
    "( 1 + x )",
    "( x * x )",
    "( x * ( 1 + x ) )",
    "( x * ( 1 - x ) )",
)

_REPLACEMENT_TREES = tuple(parse_text(t) for t in REPLACEMENTS)

_SAMPLE_XS = TRAIN_XS + INTERPOLATION_XS + EXTRAPOLATION_XS


@dataclass(frozen=True)
class CorpusRecord:
    expr: str
    rules: tuple[int, ...]
    key: str
    c0: int | None
    cinf: int | None
    m: int | None
    length: int

    @staticmethod
    def from_tree(tree: Expr) -> "CorpusRecord":
        text = render(tree)
        rules = tuple(to_rules(tree))
        key = canonicalize(tree).text
        cond = condition_of(tree)
        if isinstance(cond, Condition):
            return CorpusRecord(text, rules, key, cond.c0, cond.cinf, cond.m, len(rules))
        return CorpusRecord(text, rules, key, None, None, None, len(rules))

    def to_json(self) -> dict:
        return {
            "expr": self.expr,
            "rules": list(self.rules),
            "key": self.key,
            "c0": self.c0,
            "cinf": self.cinf,
            "m": self.m,
            "len": self.length,
        }

    @staticmethod
    def from_json(obj: dict) -> "CorpusRecord":
        return CorpusRecord(
            obj["expr"], tuple(obj["rules"]), obj["key"],
            obj["c0"], obj["cinf"], obj["m"], obj["len"],
        )


def enumerate_trees(max_rules: int):
    """Yield every complete expression tree with a rule sequence of length
    <= max_rules, each exactly once, in deterministic rule-lexicographic
    order."""
    if max_rules < 2:
        raise ValueError("max_rules must be at least 2")

    def walk(state):
        if state.complete:
            tree = from_rules(state.rules)
            assert isinstance(tree, Expr)
            yield tree
            return
        for r in range(grammar.N_RULES):
            if grammar.RULE_LHS[r] != state.stack[-1]:
                continue
            nxt = state.apply(r)
            if len(nxt.rules) + nxt.min_rules_to_complete() > max_rules:
                continue
            yield from walk(nxt)

    yield from walk(fresh_state())


def enumerate_records(max_rules: int):
    for tree in enumerate_trees(max_rules):
        yield CorpusRecord.from_tree(tree)


def space_size(max_rules: int) -> int:
    """Number of expressions (including non-terminal ones) within the given
    maximum rule-sequence length, by the counting recursion

        N_S[i] = 4 * sum_{p=0}^{i-1} N_S[p] * N_T[i-1-p] + N_T[i-1]
        N_T[i] = N_S[i-1] + 2,  N_S[0] = N_T[0] = 1

    and N_O[i] = N_S[i-1] since the first rule is always O -> S.
    """
    if max_rules < 1:
        raise ValueError("max_rules must be at least 1")
    ns = [1]
    nt = [1]
    for i in range(1, max_rules):
        nt.append(ns[i - 1] + 2)
        conv = sum(ns[p] * nt[i - 1 - p] for p in range(i))
        ns.append(4 * conv + nt[i - 1])
    return ns[max_rules - 1]


def leaf_positions(tree: Expr) -> list[tuple[int, ...]]:
    """Preorder paths of every '1' and 'x' leaf."""
    out: list[tuple[int, ...]] = []

    def walk(node, path):
        if node.kind in ("var_x", "const_1"):
            out.append(path)
            return
        for i, child in enumerate(node.children):
            walk(child, path + (i,))

    walk(tree, ())
    return out


def replace_at(tree: Expr, path: tuple[int, ...], replacement: Expr) -> Expr:
    if not path:
        return replacement
    i = path[0]
    children = list(tree.children)
    children[i] = replace_at(children[i], path[1:], replacement)
    return Expr(tree.kind, tuple(children))


def downsample(records: list[CorpusRecord], keep: int = 20) -> list[CorpusRecord]:
    """Keep the ``keep`` shortest expressions (by string length, ties broken
    lexicographically, then by input order) within each canonical group."""
    order: dict[str, list[tuple[int, str, int]]] = {}
    for idx, rec in enumerate(records):
        order.setdefault(rec.key, []).append((len(rec.expr), rec.expr, idx))
    survivors = set()
    for group in order.values():
        group.sort()
        for _, _, idx in group[:keep]:
            survivors.add(idx)
    return [rec for idx, rec in enumerate(records) if idx in survivors]


def augment(records: list[CorpusRecord], rng: random.Random, children_per_record: int = 5) -> list[CorpusRecord]:
    """For each record create ``children_per_record`` new expressions by
    substituting one uniformly chosen '1'/'x' leaf with one of the ten
    replacement atoms; originals are retained in the output."""
    out = list(records)
    for rec in records:
        tree = parse_text(rec.expr)
        leaves = leaf_positions(tree)
        for _ in range(children_per_record):
            path = leaves[rng.randrange(len(leaves))]
            repl = _REPLACEMENT_TREES[rng.randrange(len(_REPLACEMENT_TREES))]
            out.append(CorpusRecord.from_tree(replace_at(tree, path, repl)))
    return out


def dedup_by_text(records: list[CorpusRecord]) -> list[CorpusRecord]:
    seen = set()
    out = []
    for rec in records:
        if rec.expr not in seen:
            seen.add(rec.expr)
            out.append(rec)
    return out


@dataclass
class DatasetConfig:
    max_rules: int = 10
    rounds: int = 2
    per_condition_cap: int = 40
    holdout_per_condition: int = 5
    train_fraction: float = 0.703
    val_fraction: float = 0.100
    m_max: int = 4
    downsample_keep: int = 20
    children_per_record: int = 5
    seed: int = 0

    @staticmethod
    def paper_scale() -> "DatasetConfig":
        return DatasetConfig(max_rules=10, rounds=4, per_condition_cap=1000,
                             holdout_per_condition=50)


@dataclass
class DatasetResult:
    train: list[CorpusRecord]
    validation: list[CorpusRecord]
    holdout_m_le4: list[CorpusRecord]
    holdout_m5: list[CorpusRecord]
    holdout_m6: list[CorpusRecord]
    log: list[str] = field(default_factory=list)

    def splits(self):
        return {
            "train": self.train,
            "validation": self.validation,
            "holdout_m_le4": self.holdout_m_le4,
            "holdout_m5": self.holdout_m5,
            "holdout_m6": self.holdout_m6,
        }


def _finite_on_sample_points(rec: CorpusRecord) -> bool:
    tree = parse_text(rec.expr)
    return all(eval_tree(tree, x) is not None for x in _SAMPLE_XS)


def _balance(records: list[CorpusRecord], cap: int, m_max: int) -> list[CorpusRecord]:
    by_cond: dict[tuple[int, int], list[tuple[int, str, int]]] = {}
    for idx, rec in enumerate(records):
        if rec.m is not None and rec.m <= m_max:
            by_cond.setdefault((rec.c0, rec.cinf), []).append((len(rec.expr), rec.expr, idx))
    survivors = set()
    for group in by_cond.values():
        group.sort()
        for _, _, idx in group[:cap]:
            survivors.add(idx)
    return [rec for idx, rec in enumerate(records) if idx in survivors]


def build_dataset(config: DatasetConfig) -> DatasetResult:
    rng = random.Random(config.seed)
    log = []

    pool = list(enumerate_records(config.max_rules))
    log.append(f"enumerated {len(pool)} expressions within {config.max_rules} rules")

    for rnd in range(config.rounds):
        kept = downsample(pool, config.downsample_keep)
        pool = dedup_by_text(augment(kept, rng, config.children_per_record))
        log.append(f"round {rnd + 1}: kept {len(kept)}, pool {len(pool)} after augmentation")
    pool = downsample(pool, config.downsample_keep)
    log.append(f"final downsample: {len(pool)}")

    balanced = _balance(pool, config.per_condition_cap, config.m_max)
    conditions = sorted({(r.c0, r.cinf) for r in balanced})
    log.append(f"balanced: {len(balanced)} expressions over {len(conditions)} conditions")

    # Random split by expression text; holdout candidates come from the
    # leftover slice plus the unbalanced remainder of the pool.
    balanced = sorted(balanced, key=lambda r: (r.expr,))
    rng.shuffle(balanced)
    n_train = round(config.train_fraction * len(balanced))
    n_val = round(config.val_fraction * len(balanced))
    train = balanced[:n_train]
    validation = balanced[n_train:n_train + n_val]
    leftover = balanced[n_train + n_val:]

    reserved_keys: dict[tuple[int, int], set[str]] = {}
    for rec in train + validation:
        reserved_keys.setdefault((rec.c0, rec.cinf), set()).add(rec.key)

    balanced_texts = {r.expr for r in balanced}
    extra = [r for r in pool if r.m is not None and r.m <= config.m_max
             and r.expr not in balanced_texts]
    holdout_m_le4 = _draw_holdout(leftover + extra, config.holdout_per_condition,
                                  reserved_keys, rng, log, "M<=4")

    holdout_m5 = _draw_holdout([r for r in pool if r.m == 5],
                               config.holdout_per_condition, {}, rng, log, "M=5")
    holdout_m6 = _draw_holdout([r for r in pool if r.m == 6],
                               config.holdout_per_condition, {}, rng, log, "M=6")

    return DatasetResult(train, validation, holdout_m_le4, holdout_m5, holdout_m6, log)


def _draw_holdout(candidates, per_condition, reserved_keys, rng, log, label):
    """Per condition, draw up to ``per_condition`` expressions with pairwise
    distinct canonical keys, none colliding with reserved train/validation
    keys of the same condition, all finite on the evaluation points."""
    by_cond: dict[tuple[int, int], list[CorpusRecord]] = {}
    for rec in candidates:
        if rec.m is None:
            continue
        by_cond.setdefault((rec.c0, rec.cinf), []).append(rec)
    out = []
    for cond in sorted(by_cond):
        group = sorted(by_cond[cond], key=lambda r: r.expr)
        rng.shuffle(group)
        taken_keys = set(reserved_keys.get(cond, set()))
        chosen = []
        for rec in group:
            if len(chosen) >= per_condition:
                break
            if rec.key in taken_keys:
                continue
            if not _finite_on_sample_points(rec):
                continue
            taken_keys.add(rec.key)
            chosen.append(rec)
        if len(chosen) < per_condition:
            log.append(f"insufficient pool for {label} condition {cond}: "
                       f"{len(chosen)}/{per_condition}")
        out.extend(sorted(chosen, key=lambda r: r.expr))
    return out


def split_stats(records: list[CorpusRecord]) -> dict:
    if not records:
        return {"count": 0}
    lengths = [r.length for r in records]
    max_len = max(lengths)
    return {
        "count": len(records),
        "min_len": min(lengths),
        "median_len": statistics.median(lengths),
        "max_len": max_len,
        "space_size": str(space_size(max_len)),
    }


def write_jsonl(records, path: Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")) + "\n")


def read_jsonl(path) -> list[CorpusRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(CorpusRecord.from_json(json.loads(line)))
    return out


def write_dataset(result: DatasetResult, config: DatasetConfig, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = {"config": asdict(config), "log": result.log, "splits": {}}
    for name, records in result.splits().items():
        write_jsonl(records, out_dir / f"{name}.jsonl")
        stats["splits"][name] = split_stats(records)
    with open(out_dir / "stats.json", "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stats
