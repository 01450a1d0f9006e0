#!/usr/bin/env python3
"""Exact asymptotics: leading powers at 0 and infinity, and the canonical
rational form that decides semantic equality."""

from asymreg.grammar import parse_text
from asymreg.rational import canonicalize, condition_of, leading_powers

EXAMPLES = [
    "x * x + x + x + x + x + x + x * x",   # 2x^2 + 5x
    "1 / ( x * x ) + 1 / x",               # 1/x^2 + 1/x
    "1 / ( x + 1 )",
    "1 / x + x + ( x - 1 ) * ( x - 1 )",   # Coulomb + field + harmonic well
    "x - x",
    "1 / ( x - x )",
]

print("Leading powers (p0 at x->0, pinf at x->infinity):")
for text in EXAMPLES:
    lp = leading_powers(parse_text(text))
    if lp.status == "defined":
        cond = condition_of(parse_text(text))
        print(f"  {text:42s} p0={lp.p0:+d} pinf={lp.pinf:+d}  M={cond.m}")
    else:
        print(f"  {text:42s} {lp.status}")

print("\nCanonical keys identify semantically equal expressions:")
PAIRS = [
    ("x + 1", "( 1 ) + x"),
    ("x * ( x + 1 ) / x", "x + 1"),
    ("( x + x ) / ( x + x )", "1"),
    ("x + 1", "x + x"),
]
for a, b in PAIRS:
    ka, kb = canonicalize(parse_text(a)), canonicalize(parse_text(b))
    verdict = "same function" if ka == kb else "different"
    print(f"  {a!r:28s} vs {b!r:24s} -> {verdict}  (keys {ka.text} | {kb.text})")
