import filecmp
import json
import random
import statistics
from pathlib import Path

import pytest

from asymreg.corpus import (
    CorpusRecord,
    DatasetConfig,
    augment,
    build_dataset,
    dedup_by_text,
    downsample,
    enumerate_records,
    enumerate_trees,
    read_jsonl,
    space_size,
    write_dataset,
)
from asymreg.grammar import Expr, from_rules, parse_text, render, to_rules
from asymreg.rational import canonicalize


# --- independent oracles -------------------------------------------------
#
# space_size counts, for each exact sequence length, partially expanded
# trees in which every terminal leaf additionally absorbs arbitrary slack.
# The walkers below recount that class top-down; oracle_objects builds the
# objects explicitly for small sizes.

def oracle_count_S(n: int) -> int:
    if n == 0:
        return 1
    total = oracle_count_T(n - 1)  # promotion S -> T
    for a in range(n):
        b = n - 1 - a
        total += 4 * oracle_count_S(a) * oracle_count_T(b)
    return total


def oracle_count_T(n: int) -> int:
    if n == 0:
        return 1
    # terminal leaves x and 1 absorb any slack; plus the parenthesized branch
    return 2 + oracle_count_S(n - 1)


def oracle_space_size(max_rules: int) -> int:
    return oracle_count_S(max_rules - 1)


def oracle_objects_S(n: int):
    if n == 0:
        yield ("S?",)
        return
    for t in oracle_objects_T(n - 1):
        yield ("promote", t)
    for a in range(n):
        for s in oracle_objects_S(a):
            for t in oracle_objects_T(n - 1 - a):
                for op in "+-*/":
                    yield (op, s, t)


def oracle_objects_T(n: int):
    if n == 0:
        yield ("T?",)
        return
    yield ("x", n - 1)
    yield ("one", n - 1)
    for s in oracle_objects_S(n - 1):
        yield ("paren", s)


def complete_count_by_length(max_len: int) -> list[int]:
    """Complete derivations from the start symbol with exactly i rules,
    counted by an independent recursion (no tree construction)."""
    cs = [0] * (max_len + 1)
    ct = [0] * (max_len + 1)
    for i in range(1, max_len + 1):
        ct[i] = cs[i - 1] + (2 if i == 1 else 0)
        conv = sum(cs[p] * ct[i - 1 - p] for p in range(i))
        cs[i] = 4 * conv + ct[i - 1]
    # from O: one extra leading rule
    return [0] + cs[:max_len]


class TestSpaceSize:
    def test_paper_scale_values(self):
        def round2(v):
            from decimal import Decimal

            s = f"{Decimal(v):.1e}"
            return s

        assert f"{float(space_size(31)):.1e}" == "2.2e+27"
        assert f"{float(space_size(39)):.1e}" == "8.9e+34"
        assert f"{float(space_size(43)):.1e}" == "5.8e+38"
        assert f"{float(space_size(100)):.0e}" == "3e+93"

    def test_matches_bruteforce_walk_up_to_9(self):
        for n in range(1, 10):
            assert space_size(n) == oracle_space_size(n), n

    def test_walk_matches_explicit_objects(self):
        for n in range(0, 7):
            assert sum(1 for _ in oracle_objects_S(n)) == oracle_count_S(n), n

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            space_size(0)


class TestEnumerate:
    def test_three_rules(self):
        assert [render(t) for t in enumerate_trees(3)] == ["x", "1"]

    def test_counts_match_independent_recursion(self):
        per_length = complete_count_by_length(8)
        for max_rules in (3, 5, 7, 8):
            expected = sum(per_length[: max_rules + 1])
            assert sum(1 for _ in enumerate_trees(max_rules)) == expected

    def test_no_duplicates_and_roundtrip(self):
        seen = set()
        for rec in enumerate_records(8):
            assert rec.expr not in seen
            seen.add(rec.expr)
            tree = from_rules(rec.rules)
            assert isinstance(tree, Expr)
            assert render(tree) == rec.expr

    def test_rejects_tiny_budget(self):
        with pytest.raises(ValueError):
            list(enumerate_trees(1))


def _rec(text: str) -> CorpusRecord:
    return CorpusRecord.from_tree(parse_text(text))


class TestDownsample:
    def test_large_group_keeps_twenty_shortest(self):
        variants = [_rec("x + 1")]
        base = "x + 1"
        for i in range(1, 26):
            base = "( " + base + " )"
            variants.append(_rec(base))
        kept = downsample(variants, keep=20)
        assert len(kept) == 20
        assert any(r.expr == "x + 1" for r in kept)

    def test_small_group_kept_whole(self):
        group = [_rec("x"), _rec("( x )"), _rec("( ( x ) )")]
        assert downsample(group, keep=20) == group

    def test_groups_independent(self):
        a = [_rec("x"), _rec("( x )")]
        b = [_rec("1"), _rec("( 1 )")]
        combined = downsample(a + b, keep=20)
        assert {r.expr for r in combined} == {r.expr for r in a + b}


class _ScriptedRng:
    """random.Random stand-in with a scripted randrange stream."""

    def __init__(self, values):
        self.values = list(values)

    def randrange(self, n):
        v = self.values.pop(0)
        assert v < n
        return v


class TestAugment:
    def test_single_leaf_forced_replacement(self):
        rng = _ScriptedRng([0, 7] * 5)  # leaf 0, replacement index 7 = ( x * x )
        out = augment([_rec("x")], rng, children_per_record=5)
        assert out[0].expr == "x"
        assert all(r.expr == "( x * x )" for r in out[1:])

    def test_count_is_six_fold_before_dedup(self):
        records = [_rec("x + 1"), _rec("1 / ( x + 1 )")]
        out = augment(records, random.Random(3))
        assert len(out) == 6 * len(records)

    def test_outputs_roundtrip(self):
        records = [_rec("x + 1"), _rec("x * x - 1")]
        for rec in augment(records, random.Random(5)):
            tree = parse_text(rec.expr)
            assert render(tree) == rec.expr
            assert from_rules(to_rules(tree)) == tree

    def test_median_length_nondecreasing(self):
        pool = [_rec(t) for t in ("x", "1", "x + 1", "x * x")]
        before = statistics.median(r.length for r in pool)
        after = statistics.median(r.length for r in augment(pool, random.Random(1)))
        assert after >= before


class TestRecordConsistency:
    def test_fields_match_analysis(self):
        for rec in list(enumerate_records(7))[:50]:
            tree = parse_text(rec.expr)
            assert rec.key == canonicalize(tree).text
            assert rec.length == len(rec.rules)

    def test_json_roundtrip(self):
        rec = _rec("1 / ( x + 1 )")
        assert CorpusRecord.from_json(json.loads(json.dumps(rec.to_json()))) == rec


SMALL = DatasetConfig(max_rules=8, rounds=1, per_condition_cap=6,
                      holdout_per_condition=2, seed=11)


class TestBuildDataset:
    def test_determinism_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            write_dataset(build_dataset(SMALL), SMALL, tmp_path / sub)
        for name in ("train", "validation", "holdout_m_le4", "holdout_m5", "holdout_m6"):
            fa, fb = tmp_path / "a" / f"{name}.jsonl", tmp_path / "b" / f"{name}.jsonl"
            assert fa.read_bytes() == fb.read_bytes(), name

    def test_balance_and_defined_powers(self):
        result = build_dataset(SMALL)
        per_cond = {}
        for rec in result.train + result.validation:
            assert rec.m is not None and rec.m <= SMALL.m_max
            per_cond[(rec.c0, rec.cinf)] = per_cond.get((rec.c0, rec.cinf), 0) + 1
        assert all(n <= SMALL.per_condition_cap for n in per_cond.values())

    def test_no_leakage(self):
        result = build_dataset(SMALL)
        reserved = {}
        for rec in result.train + result.validation:
            reserved.setdefault((rec.c0, rec.cinf), set()).add(rec.key)
        for rec in result.holdout_m_le4:
            assert rec.key not in reserved.get((rec.c0, rec.cinf), set())

    def test_holdout_keys_unique_per_condition(self):
        result = build_dataset(SMALL)
        for split in (result.holdout_m_le4, result.holdout_m5, result.holdout_m6):
            seen = set()
            for rec in split:
                assert ((rec.c0, rec.cinf), rec.key) not in seen
                seen.add(((rec.c0, rec.cinf), rec.key))

    def test_splits_disjoint_by_text(self):
        result = build_dataset(SMALL)
        texts = [r.expr for r in result.train] + [r.expr for r in result.validation] \
            + [r.expr for r in result.holdout_m_le4]
        assert len(texts) == len(set(texts))

    def test_in_sample_condition_lattice_has_41_cells(self):
        cells = [(a, b) for a in range(-9, 10) for b in range(-9, 10)
                 if abs(a) + abs(b) <= 4]
        assert len(cells) == 41

    def test_jsonl_io_roundtrip(self, tmp_path):
        result = build_dataset(SMALL)
        write_dataset(result, SMALL, tmp_path)
        back = read_jsonl(tmp_path / "train.jsonl")
        assert back == result.train
