#!/usr/bin/env python3
"""Tour of the expression grammar: rules, derivation states, masks, and the
round-trip between trees, rule sequences and text."""

from asymreg.grammar import (
    RULE_TEXT,
    fresh_state,
    from_rules,
    parse_text,
    render,
    sample_expression,
    to_rules,
    valid_next_mask,
)
from asymreg.policies import UniformPolicy
from asymreg.rational import Condition

print("The nine production rules:")
for i, text in enumerate(RULE_TEXT):
    print(f"  {i}: {text}")

print("\nA derivation, step by step.  Start at O; the stack tracks pending")
print("non-terminals and the mask admits only rules expanding the top one.")
state = fresh_state()
for rule in (0, 4, 5, 8, 6, 1, 5, 7, 8):
    mask = valid_next_mask(state)
    valid = [i for i, ok in enumerate(mask) if ok]
    print(f"  stack={''.join(state.stack) or '-':6s} valid={valid} -> apply {rule}")
    state = state.apply(rule)
print(f"  stack empty: derivation complete after {len(state.rules)} rules")

tree = from_rules(state.rules)
print(f"\nThe tree renders as: {render(tree)!r}")
print(f"to_rules(tree) == original sequence: {tuple(to_rules(tree)) == state.rules}")
print(f"parse_text round-trips: {parse_text(render(tree)) == tree}")

print("\nSampling from the uniform policy (masked at every step):")
for seed in range(5):
    result = sample_expression(UniformPolicy(), Condition(0, 0), 100, seed)
    label = render(result) if hasattr(result, "kind") else "<hit the length cap>"
    print(f"  seed {seed}: {label}")
