import random

import pytest

from asymreg.ea import (
    EaConfig,
    GpNode,
    evolve,
    grow,
    init_population,
    tree_to_expr,
)
from asymreg.grammar import from_rules, parse_text, render, to_rules
from asymreg.objective import TargetSpec, eval_tree


def _gp(kind, *children):
    return GpNode(kind, list(children))


def _eval_gp(node: GpNode, x: float):
    if node.kind == "x":
        return x
    if node.kind == "one":
        return 1.0
    a = _eval_gp(node.children[0], x)
    b = _eval_gp(node.children[1], x)
    if a is None or b is None:
        return None
    if node.kind == "add":
        return a + b
    if node.kind == "sub":
        return a - b
    if node.kind == "mul":
        return a * b
    if abs(b) < 1e-12:
        return None
    return a / b


class TestTreeToExpr:
    def test_simple_sum(self):
        expr = tree_to_expr(_gp("add", _gp("x"), _gp("one")))
        assert render(expr) == "x + 1"

    def test_precedence_forces_parens(self):
        gp = _gp("mul", _gp("add", _gp("x"), _gp("one")), _gp("x"))
        expr = tree_to_expr(gp)
        assert render(expr) == "( x + 1 ) * x"
        assert parse_text(render(expr)) == expr

    def test_right_operand_parenthesized(self):
        gp = _gp("div", _gp("x"), _gp("div", _gp("one"), _gp("x")))
        assert render(tree_to_expr(gp)) == "x / ( 1 / x )"

    def test_random_trees_roundtrip_and_agree_numerically(self):
        rng = random.Random(21)
        points = (1.3, 1.9, 2.7, 5.5)
        for _ in range(1000):
            gp = grow(rng, rng.randint(1, 6))
            expr = tree_to_expr(gp)
            text = render(expr)
            tree = parse_text(text)
            assert render(tree) == text
            assert from_rules(to_rules(tree)) == tree
            for x in points:
                want = _eval_gp(gp, x)
                got = eval_tree(tree, x)
                if want is None or got is None:
                    assert want is None and got is None
                else:
                    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestInitPopulation:
    def test_size_and_determinism(self):
        cfg = EaConfig(seed=5)
        a = init_population(cfg, random.Random(5))
        b = init_population(cfg, random.Random(5))
        assert len(a) == cfg.population == 10
        assert [repr(t) for t in a] == [repr(t) for t in b]

    def test_individuals_evaluate_totally(self):
        target = TargetSpec.from_expression("x + 1")
        from asymreg.objective import objective

        for tree in init_population(EaConfig(), random.Random(8)):
            obj = objective(tree_to_expr(tree), target, "data_plus_pw")
            assert obj >= 0.0

    def test_depth_bound(self):
        for tree in init_population(EaConfig(init_depth=6), random.Random(2)):
            assert tree.height() <= 6


class TestEvolve:
    def test_trivial_target_usually_solved(self):
        target = TargetSpec.from_expression("x")
        solved = 0
        for seed in range(6):
            outcome = evolve(target, EaConfig(eval_budget=500, seed=seed, mode="data_plus_pw"))
            if outcome.report.status == "solved":
                solved += 1
        assert solved >= 5

    def test_budget_respected(self):
        target = TargetSpec.from_expression("x + 1")
        outcome = evolve(target, EaConfig(eval_budget=137, seed=3))
        assert outcome.simulations <= 137

    def test_budget_zero_scores_initial_population_only(self):
        target = TargetSpec.from_expression("x + 1")
        outcome = evolve(target, EaConfig(eval_budget=0, seed=3))
        assert outcome.simulations == 10
        assert outcome.best_expr is not None

    def test_determinism(self):
        target = TargetSpec.from_expression("x * x")
        a = evolve(target, EaConfig(eval_budget=200, seed=11))
        b = evolve(target, EaConfig(eval_budget=200, seed=11))
        assert a.to_json() == b.to_json()

    def test_tiny_height_cap_still_runs(self):
        target = TargetSpec.from_expression("x")
        outcome = evolve(target, EaConfig(eval_budget=120, seed=1, max_height=2))
        assert outcome.best_expr is not None

    def test_bad_probability_rejected(self):
        with pytest.raises(ValueError):
            EaConfig(p_mate=1.5)
