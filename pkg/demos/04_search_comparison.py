#!/usr/bin/env python3
"""Search methods on the force-field potential 1/x + x + (x-1)^2: tree
search under different priors and objectives, and the evolutionary
baseline.  The condition (p0, pinf) = (-1, 2) encodes the known short- and
long-range behavior."""

from asymreg.ea import EaConfig, evolve
from asymreg.grammar import parse_text, to_rules
from asymreg.mcts import MctsConfig, run_search
from asymreg.objective import TargetSpec
from asymreg.policies import TeacherPolicy, UniformPolicy

TARGET = "1 / x + x + ( x - 1 ) * ( x - 1 )"
target = TargetSpec.from_expression(TARGET)
print(f"target: {TARGET}")
print(f"condition: p0={target.condition.c0} pinf={target.condition.cinf}\n")


def show(name, outcome):
    r = outcome.report
    print(f"{name:24s} best={outcome.best_expr!r}")
    print(f"{'':24s} dg=({r.dg_train:.3f}, {r.dg_int:.3f}, {r.dg_ext:.3f}) "
          f"dp={r.dp} -> {r.status}")


# A teacher prior follows the target's own derivation: it validates the
# search machinery end to end and solves immediately.
teacher = TeacherPolicy(to_rules(parse_text(TARGET)))
show("tree search, teacher", run_search(target, teacher,
                                        MctsConfig(simulations=500, seed=0), "teacher"))

show("tree search, uniform", run_search(target, UniformPolicy(),
                                        MctsConfig(simulations=500, seed=0,
                                                   mode="data_only"), "mcts"))

show("evolution, data only", evolve(target, EaConfig(eval_budget=500, seed=0,
                                                     mode="data_only"), "ea"))

show("evolution, data + powers", evolve(target, EaConfig(eval_budget=500, seed=0,
                                                         mode="data_plus_pw"), "ea_pw"))

print("\nWith only 500 evaluations in a space of ~3e93 expressions, unguided")
print("search rarely lands on the target; step-wise guidance is what closes")
print("the gap, and the leading-power term steers survivors toward the right")
print("asymptotics even when the data fit stays imperfect.")
