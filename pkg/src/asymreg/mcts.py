"""Monte Carlo tree search over partial derivations with PUCT selection.

The prior over actions at each node comes from a pluggable policy: a neural
policy client turns this into neural-guided search, the uniform policy gives
the plain baseline, and the teacher policy is a diagnostic that validates the
machinery.  Rewards shape the nonnegative objective into (0, 1] via
r = 1 / (1 + objective); incomplete rollouts back up 0.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from . import grammar
from .grammar import DerivationState, Expr, Incomplete, N_RULES, fresh_state, from_rules
from .objective import EvalReport, TargetSpec, classify, objective
from .policies import PolicyError

REWARD_SHAPES = ("inverse", "exp")


@dataclass
class MctsConfig:
    simulations: int = 500
    c_puct: float = 50.0
    length_limit: int = 100
    mode: str = "data_plus_pw"
    seed: int = 0
    reward: str = "inverse"

    def __post_init__(self):
        if self.simulations <= 0 or self.c_puct <= 0 or self.length_limit <= 0:
            raise ValueError("simulations, c_puct and length_limit must be positive")
        if self.reward not in REWARD_SHAPES:
            raise ValueError(f"unknown reward shape {self.reward!r}")


class PolicyFailure(Exception):
    def __init__(self, cause: Exception, completed_simulations: int):
        self.cause = cause
        self.completed_simulations = completed_simulations
        super().__init__(f"policy failed after {completed_simulations} simulations: {cause}")


class _Node:
    __slots__ = ("state", "priors", "valid", "n", "w", "children", "expanded", "terminal_objective")

    def __init__(self, state: DerivationState):
        self.state = state
        self.priors = None
        self.valid = ()
        self.n = [0] * N_RULES
        self.w = [0.0] * N_RULES
        self.children: dict[int, _Node] = {}
        self.expanded = False
        self.terminal_objective = None


def puct_score(node: _Node, action: int, c_puct: float) -> float:
    """Q(s,a) + c * P(s,a) * sqrt(sum_b N(s,b)) / (1 + N(s,a))."""
    n = node.n[action]
    q = node.w[action] / n if n else 0.0
    total = sum(node.n)
    u = c_puct * node.priors[action] * math.sqrt(total) / (1 + n)
    return q + u


@dataclass
class SearchOutcome:
    target: TargetSpec
    method: str
    best_expr: str | None
    report: EvalReport
    best_objective: float
    simulations: int
    seed: int
    rollouts_incomplete: int = 0

    def to_json(self) -> dict:
        row = {
            "target": self.target.expr_text,
            "c0": self.target.condition.c0,
            "cinf": self.target.condition.cinf,
            "method": self.method,
            "best_expr": self.best_expr,
            "sims": self.simulations,
            "seed": self.seed,
        }
        row.update(self.report.to_json())
        return row


class _Search:
    def __init__(self, target: TargetSpec, policy, config: MctsConfig, method: str):
        self.target = target
        self.policy = policy
        self.config = config
        self.method = method
        self.rng = random.Random(config.seed)
        self.best_objective = math.inf
        self.best_expr: Expr | None = None
        self.rollouts_incomplete = 0

    def _shape(self, obj: float) -> float:
        if self.config.reward == "exp":
            return math.exp(-obj)
        return 1.0 / (1.0 + obj)

    def _consider(self, expr: Expr) -> float:
        obj = objective(expr, self.target, self.config.mode)
        if obj < self.best_objective:
            self.best_objective = obj
            self.best_expr = expr
        return obj

    def _expand(self, node: _Node) -> None:
        dist = self.policy.next_distribution(node.state, self.target.condition)
        node.priors = dist.masked
        top = node.state.stack[-1]
        node.valid = tuple(i for i in range(N_RULES) if grammar.RULE_LHS[i] == top)
        node.expanded = True

    def _rollout(self, state: DerivationState) -> float:
        result = grammar.sample_with_rng(self.policy, self.target.condition,
                                         self.rng, self.config.length_limit, start=state)
        if isinstance(result, Incomplete):
            self.rollouts_incomplete += 1
            return 0.0
        return self._shape(self._consider(result))

    def run(self) -> SearchOutcome:
        root = _Node(fresh_state(self.config.length_limit))
        completed = 0
        try:
            self._expand(root)
            for _ in range(self.config.simulations):
                self._simulate(root)
                completed += 1
        except PolicyError as exc:
            raise PolicyFailure(exc, completed)
        best_tree = self.best_expr
        report = classify(best_tree, self.target)
        return SearchOutcome(
            target=self.target,
            method=self.method,
            best_expr=grammar.render(best_tree) if best_tree is not None else None,
            report=report,
            best_objective=self.best_objective,
            simulations=completed,
            seed=self.config.seed,
            rollouts_incomplete=self.rollouts_incomplete,
        )

    def _simulate(self, root: _Node) -> None:
        node = root
        path: list[tuple[_Node, int]] = []
        while True:
            if node.state.complete:
                if node.terminal_objective is None:
                    expr = from_rules(node.state.rules)
                    node.terminal_objective = self._consider(expr)
                reward = self._shape(node.terminal_objective)
                break
            if not node.expanded:
                self._expand(node)
                reward = self._rollout(node.state)
                break
            if len(node.state.rules) >= self.config.length_limit:
                # Dead end below the cap: cannot finish, scored like an
                # incomplete rollout.
                reward = 0.0
                break
            action = self._select(node)
            path.append((node, action))
            child = node.children.get(action)
            if child is None:
                child = _Node(node.state.apply(action))
                node.children[action] = child
            node = child
        for parent, action in path:
            parent.n[action] += 1
            parent.w[action] += reward

    def _select(self, node: _Node) -> int:
        best_action = -1
        best_score = -math.inf
        for a in node.valid:
            s = puct_score(node, a, self.config.c_puct)
            if s > best_score:  # strict: ties resolve to the lowest rule id
                best_score = s
                best_action = a
        return best_action


def run_search(target: TargetSpec, policy, config: MctsConfig,
               method: str = "mcts") -> SearchOutcome:
    """Run one PUCT search for one target; deterministic for a fixed
    target/policy/config/seed."""
    return _Search(target, policy, config, method).run()


def derive_seed(base_seed: int, index: int) -> int:
    # Stable arithmetic derivation; avoids Python hash salting.
    return (base_seed * 1_000_003 + index * 7919 + 12345) % (2 ** 63)


def run_batch(targets, policy_factory, config: MctsConfig, method: str,
              out_path=None, log=None):
    """Independent searches over a holdout list with per-target derived seeds.

    ``policy_factory`` is called once per target so connection-backed
    policies get a fresh handle.  Per-target failures are recorded and the
    batch continues.  Returns (rows, outcomes).
    """
    rows = []
    outcomes = []
    for idx, target in enumerate(targets):
        cfg = MctsConfig(simulations=config.simulations, c_puct=config.c_puct,
                         length_limit=config.length_limit, mode=config.mode,
                         seed=derive_seed(config.seed, idx), reward=config.reward)
        try:
            outcome = run_search(target, policy_factory(target), cfg, method)
            row = outcome.to_json()
            outcomes.append(outcome)
        except PolicyFailure as exc:
            row = {
                "target": target.expr_text,
                "c0": target.condition.c0,
                "cinf": target.condition.cinf,
                "method": method,
                "best_expr": None,
                "sims": exc.completed_simulations,
                "seed": cfg.seed,
                "error": str(exc),
                "status": "failed",
            }
            if log is not None:
                log.append(f"target {target.expr_text!r}: {exc}")
        rows.append(row)
    if out_path is not None:
        with open(out_path, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return rows, outcomes
