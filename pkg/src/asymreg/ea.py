"""Tree-GP baseline: generational evolution over {+,-,*,/,x,1} with subtree
crossover, subtree-replacement mutation and tournament selection, scored by
the same objective as the tree search."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .grammar import Expr, render
from .mcts import SearchOutcome, derive_seed
from .objective import TargetSpec, classify, objective

GP_OPS = ("add", "sub", "mul", "div")
GP_LEAVES = ("x", "one")

# Probability of cutting a branch short during grow initialization; two of
# the six primitives are terminals.
_GROW_LEAF_P = 1.0 / 3.0


class GpNode:
    __slots__ = ("kind", "children")

    def __init__(self, kind: str, children=None):
        self.kind = kind
        self.children = children if children is not None else []

    def clone(self) -> "GpNode":
        return GpNode(self.kind, [c.clone() for c in self.children])

    def height(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.height() for c in self.children)

    def nodes(self) -> list["GpNode"]:
        out = [self]
        for c in self.children:
            out.extend(c.nodes())
        return out

    def __repr__(self):
        if not self.children:
            return self.kind
        return f"({self.kind} {self.children[0]!r} {self.children[1]!r})"


@dataclass
class EaConfig:
    population: int = 10
    p_mate: float = 0.1
    p_mutate: float = 0.5
    max_height: int = 50
    eval_budget: int = 500
    mode: str = "data_plus_pw"
    seed: int = 0
    tournament: int = 3
    init_depth: int = 6

    def __post_init__(self):
        if not (0 <= self.p_mate <= 1 and 0 <= self.p_mutate <= 1):
            raise ValueError("probabilities must be in [0, 1]")
        if self.eval_budget < 0:
            raise ValueError("eval_budget must be nonnegative")


def grow(rng: random.Random, depth: int) -> GpNode:
    if depth <= 0 or rng.random() < _GROW_LEAF_P:
        return GpNode(rng.choice(GP_LEAVES))
    op = rng.choice(GP_OPS)
    return GpNode(op, [grow(rng, depth - 1), grow(rng, depth - 1)])


def init_population(config: EaConfig, rng: random.Random) -> list[GpNode]:
    pop = []
    for _ in range(config.population):
        depth = rng.randint(2, config.init_depth)
        pop.append(grow(rng, depth))
    return pop


def tree_to_expr(node: GpNode) -> Expr:
    """Bridge a GP tree into the grammar: operand-position subtrees get
    explicit parentheses, and a +/- left child under * or / is parenthesized
    so the rendered string reads the same under conventional precedence."""
    if node.kind == "x":
        return Expr("var_x")
    if node.kind == "one":
        return Expr("const_1")
    left = tree_to_expr(node.children[0])
    right = tree_to_expr(node.children[1])
    if node.kind in ("mul", "div") and node.children[0].kind in ("add", "sub"):
        left = Expr("paren", (left,))
    if node.children[1].kind in GP_OPS:
        right = Expr("paren", (right,))
    return Expr(node.kind, (left, right))


class _Individual:
    __slots__ = ("tree", "fitness")

    def __init__(self, tree: GpNode, fitness: float | None = None):
        self.tree = tree
        self.fitness = fitness

    def clone(self) -> "_Individual":
        return _Individual(self.tree.clone(), self.fitness)


def _crossover(a: GpNode, b: GpNode, rng: random.Random) -> None:
    na, nb = a.nodes(), b.nodes()
    sa, sb = na[rng.randrange(len(na))], nb[rng.randrange(len(nb))]
    sa.kind, sb.kind = sb.kind, sa.kind
    sa.children, sb.children = sb.children, sa.children


def _mutate(tree: GpNode, rng: random.Random) -> None:
    nodes = tree.nodes()
    target = nodes[rng.randrange(len(nodes))]
    repl = grow(rng, rng.randint(0, 2))
    target.kind = repl.kind
    target.children = repl.children


def _tournament(pop: list[_Individual], k: int, rng: random.Random) -> _Individual:
    best = None
    for _ in range(k):
        ind = pop[rng.randrange(len(pop))]
        if best is None or ind.fitness < best.fitness:
            best = ind
    return best.clone()


def evolve(target: TargetSpec, config: EaConfig, method: str = "ea") -> SearchOutcome:
    """Evolve against one target until the evaluation budget is spent.

    The initial population is always scored (a best individual must exist);
    the generational loop then runs while the budget allows, so total
    objective calls are max(population, min(budget, consumed)).  Offspring
    exceeding the height bound are replaced by their parent, keeping the
    parent's fitness without a re-evaluation.
    """
    rng = random.Random(config.seed)
    evals = 0
    best_tree: GpNode | None = None
    best_obj = math.inf

    def score(ind: _Individual) -> None:
        nonlocal evals, best_tree, best_obj
        obj = objective(tree_to_expr(ind.tree), target, config.mode)
        evals += 1
        ind.fitness = obj
        if obj < best_obj:
            best_obj = obj
            best_tree = ind.tree.clone()

    population = [_Individual(t) for t in init_population(config, rng)]
    for ind in population:
        score(ind)

    while evals < config.eval_budget:
        selected = [_tournament(population, config.tournament, rng)
                    for _ in range(len(population))]
        offspring = []
        for i in range(len(selected)):
            offspring.append((selected[i], selected[i].clone()))
        # offspring[i] = (parent backup, working copy); the working copy is
        # what variation mutates in place.
        for i in range(1, len(offspring), 2):
            if rng.random() < config.p_mate:
                _crossover(offspring[i - 1][1].tree, offspring[i][1].tree, rng)
                offspring[i - 1][1].fitness = None
                offspring[i][1].fitness = None
        for _, work in offspring:
            if rng.random() < config.p_mutate:
                _mutate(work.tree, rng)
                work.fitness = None
        next_pop = []
        exhausted = False
        for parent, work in offspring:
            if work.tree.height() > config.max_height:
                work = parent  # bloat rejection, parent fitness retained
            if work.fitness is None:
                if evals >= config.eval_budget:
                    exhausted = True
                    break
                score(work)
            next_pop.append(work)
        if exhausted:
            break
        population = next_pop

    tree = tree_to_expr(best_tree) if best_tree is not None else None
    report = classify(tree, target)
    return SearchOutcome(
        target=target,
        method=method,
        best_expr=render(tree) if tree is not None else None,
        report=report,
        best_objective=best_obj,
        simulations=evals,
        seed=config.seed,
    )


def run_batch(targets, config: EaConfig, method: str = "ea", out_path=None):
    rows = []
    outcomes = []
    for idx, target in enumerate(targets):
        cfg = EaConfig(population=config.population, p_mate=config.p_mate,
                       p_mutate=config.p_mutate, max_height=config.max_height,
                       eval_budget=config.eval_budget, mode=config.mode,
                       seed=derive_seed(config.seed, idx), tournament=config.tournament,
                       init_depth=config.init_depth)
        outcome = evolve(target, cfg, method)
        outcomes.append(outcome)
        rows.append(outcome.to_json())
    if out_path is not None:
        with open(out_path, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return rows, outcomes
