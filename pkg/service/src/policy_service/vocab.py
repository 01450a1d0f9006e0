"""The fixed nine-rule vocabulary and the validity mask.

The table and its ordering are the wire contract shared with every client;
the hash pins a trained artifact to this exact vocabulary.
"""

from __future__ import annotations

import hashlib

N_RULES = 9

RULE_TABLE = (
    "O -> S",
    "S -> S + T",
    "S -> S - T",
    "S -> S * T",
    "S -> S / T",
    "S -> T",
    "T -> ( S )",
    "T -> x",
    "T -> 1",
)

RULE_LHS = ("O", "S", "S", "S", "S", "S", "T", "T", "T")

_RHS_NONTERMINALS = (
    ("S",),
    ("S", "T"),
    ("S", "T"),
    ("S", "T"),
    ("S", "T"),
    ("T",),
    ("S",),
    (),
    (),
)


def vocab_hash() -> str:
    return hashlib.sha256("\n".join(RULE_TABLE).encode("utf-8")).hexdigest()


class InvalidSequenceError(ValueError):
    pass


def pending_symbol(rules) -> str | None:
    """Leftmost pending non-terminal after replaying ``rules``; None when the
    derivation is complete."""
    stack = ["O"]
    for pos, r in enumerate(rules):
        if not stack:
            raise InvalidSequenceError(f"rule {r} at {pos} after a complete derivation")
        if not isinstance(r, int) or not 0 <= r < N_RULES:
            raise InvalidSequenceError(f"rule id {r!r} at {pos} out of range")
        top = stack.pop()
        if RULE_LHS[r] != top:
            raise InvalidSequenceError(f"rule {r} at {pos} does not expand {top}")
        stack.extend(reversed(_RHS_NONTERMINALS[r]))
    return stack[-1] if stack else None


def valid_mask(rules) -> list[bool]:
    top = pending_symbol(rules)
    if top is None:
        raise InvalidSequenceError("derivation is complete; no next rule")
    return [RULE_LHS[r] == top for r in range(N_RULES)]
