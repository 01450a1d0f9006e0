"""Fixed context-free grammar of univariate rational expressions.

The grammar has three non-terminals (O, S, T) and nine production rules
with a fixed, shared id ordering:

    0: O -> S
    1: S -> S '+' T
    2: S -> S '-' T
    3: S -> S '*' T
    4: S -> S '/' T
    5: S -> T
    6: T -> '(' S ')'
    7: T -> 'x'
    8: T -> '1'

A complete expression is serialized as the preorder sequence of the rule
ids applied during a leftmost derivation.  A partial derivation is a
``DerivationState``: the rules applied so far plus a stack of pending
non-terminals whose top is the next symbol to expand.  Every id below
0..8 is meant in this table's ordering, including on the wire.

Syntax and semantics are two layers.  Derivation trees, rule sequences and
``parse_text`` are purely syntactic: the S-level chain is flat and left
associative, so ``parse_text(render(t)) == t`` for every derivation tree.
The VALUE of an expression, however, is the conventional mathematical
reading of its token string, where * and / bind tighter than + and -;
``semantic_tree`` performs that re-reading and is what the exact and
numeric evaluators consume.  The distinction matters for derivations like
"x + 1 * x", which the grammar produces via S*T over the chain "x + 1" but
which denotes x + (1 * x).
"""

from __future__ import annotations

from dataclasses import dataclass

N_RULES = 9

RULE_LHS = ("O", "S", "S", "S", "S", "S", "T", "T", "T")

# Non-terminal symbols on each rule's right-hand side, left to right.
RULE_RHS_NONTERMINALS = (
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

RULES_BY_LHS = {"O": (0,), "S": (1, 2, 3, 4, 5), "T": (6, 7, 8)}

RULE_TEXT = (
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

_BINARY_RULE_KIND = {1: "add", 2: "sub", 3: "mul", 4: "div"}
_KIND_BINARY_RULE = {v: k for k, v in _BINARY_RULE_KIND.items()}
_KIND_OP_TOKEN = {"add": "+", "sub": "-", "mul": "*", "div": "/"}

# Minimum number of further rules needed to finish expanding one symbol:
# T resolves in one rule (T -> x), S in two (S -> T, T -> x), O in three.
_MIN_COMPLETION = {"O": 3, "S": 2, "T": 1}


class GrammarError(Exception):
    pass


class EmptySequenceError(GrammarError):
    pass


class InvalidRuleError(GrammarError):
    def __init__(self, rule: int, expected: str, position: int):
        self.rule = rule
        self.expected = expected
        self.position = position
        super().__init__(
            f"rule {rule} ({RULE_TEXT[rule]}) at position {position} does not "
            f"expand pending symbol {expected}"
        )


class DerivationCompleteError(GrammarError):
    pass


class LengthLimitError(GrammarError):
    pass


class ParseError(GrammarError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (position {position})")


@dataclass(frozen=True)
class Expr:
    """Parse tree node.

    ``kind`` is one of add/sub/mul/div (two children), paren (one child),
    var_x or const_1 (leaves).
    """

    kind: str
    children: tuple["Expr", ...] = ()

    def __post_init__(self):
        arity = {"add": 2, "sub": 2, "mul": 2, "div": 2, "paren": 1, "var_x": 0, "const_1": 0}
        if self.kind not in arity:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if len(self.children) != arity[self.kind]:
            raise ValueError(f"{self.kind} expects {arity[self.kind]} children")


X = Expr("var_x")
ONE = Expr("const_1")


@dataclass(frozen=True)
class DerivationState:
    """Partial leftmost derivation: rules so far plus the pending-symbol stack.

    The stack top is the last element.  ``length_limit`` of None means
    unbounded.
    """

    rules: tuple[int, ...] = ()
    stack: tuple[str, ...] = ("O",)
    length_limit: int | None = None

    @property
    def complete(self) -> bool:
        return not self.stack

    def apply(self, rule: int) -> "DerivationState":
        if self.complete:
            raise DerivationCompleteError("derivation is already complete")
        if self.length_limit is not None and len(self.rules) >= self.length_limit:
            raise LengthLimitError(f"length limit {self.length_limit} reached")
        if not 0 <= rule < N_RULES:
            raise InvalidRuleError(rule if 0 <= rule < N_RULES else 0, self.stack[-1], len(self.rules))
        if RULE_LHS[rule] != self.stack[-1]:
            raise InvalidRuleError(rule, self.stack[-1], len(self.rules))
        new_stack = self.stack[:-1] + tuple(reversed(RULE_RHS_NONTERMINALS[rule]))
        return DerivationState(self.rules + (rule,), new_stack, self.length_limit)

    def min_rules_to_complete(self) -> int:
        return sum(_MIN_COMPLETION[s] for s in self.stack)


@dataclass(frozen=True)
class Incomplete:
    """Sampling outcome when the length cap was hit before termination."""

    state: DerivationState


def fresh_state(length_limit: int | None = None) -> DerivationState:
    return DerivationState((), ("O",), length_limit)


def valid_next_mask(state: DerivationState) -> tuple[bool, ...]:
    """Boolean mask over the 9 rules: True iff the rule expands the stack top."""
    if state.complete:
        raise DerivationCompleteError("no next rule for a complete derivation")
    top = state.stack[-1]
    return tuple(RULE_LHS[r] == top for r in range(N_RULES))


def from_rules(rules) -> Expr | DerivationState:
    """Replay a preorder rule sequence.

    Returns the complete Expr when the derivation terminates, otherwise the
    resulting DerivationState.  Raises InvalidRuleError on the first rule
    whose left-hand side does not match the pending non-terminal, and
    EmptySequenceError for an empty list.
    """
    rules = tuple(rules)
    if not rules:
        raise EmptySequenceError("empty rule sequence")
    state = fresh_state()
    for r in rules:
        state = state.apply(r)
    if not state.complete:
        return state
    expr, end = _build(rules, 1, "S")  # rules[0] is O -> S by construction
    assert end == len(rules)
    return expr


def _build(rules: tuple[int, ...], i: int, symbol: str) -> tuple[Expr, int]:
    r = rules[i]
    if symbol == "S":
        if r in _BINARY_RULE_KIND:
            left, j = _build(rules, i + 1, "S")
            right, k = _build(rules, j, "T")
            return Expr(_BINARY_RULE_KIND[r], (left, right)), k
        return _build(rules, i + 1, "T")  # rule 5
    if r == 6:
        inner, j = _build(rules, i + 1, "S")
        return Expr("paren", (inner,)), j
    if r == 7:
        return X, i + 1
    return ONE, i + 1  # rule 8


def to_rules(expr: Expr) -> list[int]:
    """Preorder rule sequence of a complete tree; inverse of from_rules."""
    out = [0]
    _emit_s(expr, out)
    return out


def _emit_s(e: Expr, out: list[int]) -> None:
    if e.kind in _KIND_BINARY_RULE:
        out.append(_KIND_BINARY_RULE[e.kind])
        _emit_s(e.children[0], out)
        _emit_t(e.children[1], out)
    else:
        out.append(5)
        _emit_t(e, out)


def _emit_t(e: Expr, out: list[int]) -> None:
    if e.kind == "paren":
        out.append(6)
        _emit_s(e.children[0], out)
    elif e.kind == "var_x":
        out.append(7)
    elif e.kind == "const_1":
        out.append(8)
    else:
        raise ValueError(f"{e.kind} node in operand position needs parentheses")


def tokens(expr: Expr) -> list[str]:
    out: list[str] = []
    _tokens(expr, out)
    return out


def _tokens(e: Expr, out: list[str]) -> None:
    if e.kind in _KIND_OP_TOKEN:
        _tokens(e.children[0], out)
        out.append(_KIND_OP_TOKEN[e.kind])
        _tokens(e.children[1], out)
    elif e.kind == "paren":
        out.append("(")
        _tokens(e.children[0], out)
        out.append(")")
    elif e.kind == "var_x":
        out.append("x")
    else:
        out.append("1")


def render(expr: Expr) -> str:
    """Canonical text form: tokens joined by single spaces, e.g. "1 / ( x + 1 )"."""
    out: list[str] = []
    _tokens(expr, out)
    return " ".join(out)


# Unicode variants that appear in typeset sources are accepted on input.
_TOKEN_ALIASES = {"−": "-", "×": "*", "·": "*"}
_VALID_TOKENS = {"+", "-", "*", "/", "(", ")", "x", "1"}


def _tokenize(s: str) -> list[tuple[str, int]]:
    toks = []
    for i, ch in enumerate(s):
        if ch.isspace():
            continue
        ch = _TOKEN_ALIASES.get(ch, ch)
        if ch not in _VALID_TOKENS:
            raise ParseError(f"unexpected character {ch!r}", i)
        toks.append((ch, i))
    return toks


def parse_text(s: str) -> Expr:
    """Parse an expression string over {+,-,*,/,(,),x,1} into a tree.

    Operators associate left over atom operands, matching the grammar's
    S-level chain; parentheses parse as the explicit T -> ( S ) rule and
    are never flattened away.
    """
    toks = _tokenize(s)
    if not toks:
        raise ParseError("empty expression", 0)
    expr, pos = _parse_s(toks, 0, len(s))
    if pos != len(toks):
        raise ParseError(f"trailing token {toks[pos][0]!r}", toks[pos][1])
    return expr


def _parse_s(toks, pos, end_offset) -> tuple[Expr, int]:
    node, pos = _parse_atom(toks, pos, end_offset)
    while pos < len(toks) and toks[pos][0] in ("+", "-", "*", "/"):
        op, _ = toks[pos]
        rhs, pos = _parse_atom(toks, pos + 1, end_offset)
        kind = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[op]
        node = Expr(kind, (node, rhs))
    return node, pos


def _parse_atom(toks, pos, end_offset) -> tuple[Expr, int]:
    if pos >= len(toks):
        raise ParseError("expected operand", end_offset)
    tok, offset = toks[pos]
    if tok == "x":
        return X, pos + 1
    if tok == "1":
        return ONE, pos + 1
    if tok == "(":
        inner, pos = _parse_s(toks, pos + 1, end_offset)
        if pos >= len(toks) or toks[pos][0] != ")":
            raise ParseError("unclosed parenthesis", offset)
        return Expr("paren", (inner,)), pos + 1
    raise ParseError(f"unexpected token {tok!r}", offset)


def semantic_tree(expr: Expr) -> Expr:
    """Re-read an expression's token string with conventional precedence.

    Returns a tree in which * and / group before + and -, both levels left
    associative and parentheses honored.  Evaluation, leading powers and
    canonical forms are all defined on this view.
    """
    toks = [(t, i) for i, t in enumerate(_token_list(expr))]
    node, pos = _prec_sum(toks, 0)
    assert pos == len(toks)
    return node


def _token_list(expr: Expr) -> list[str]:
    out: list[str] = []
    _tokens(expr, out)
    return out


def _prec_sum(toks, pos) -> tuple[Expr, int]:
    node, pos = _prec_term(toks, pos)
    while pos < len(toks) and toks[pos][0] in ("+", "-"):
        op = toks[pos][0]
        rhs, pos = _prec_term(toks, pos + 1)
        node = Expr("add" if op == "+" else "sub", (node, rhs))
    return node, pos


def _prec_term(toks, pos) -> tuple[Expr, int]:
    node, pos = _prec_atom(toks, pos)
    while pos < len(toks) and toks[pos][0] in ("*", "/"):
        op = toks[pos][0]
        rhs, pos = _prec_atom(toks, pos + 1)
        node = Expr("mul" if op == "*" else "div", (node, rhs))
    return node, pos


def _prec_atom(toks, pos) -> tuple[Expr, int]:
    tok, _ = toks[pos]
    if tok == "x":
        return X, pos + 1
    if tok == "1":
        return ONE, pos + 1
    assert tok == "(", f"malformed token stream at {pos}: {tok!r}"
    inner, pos = _prec_sum(toks, pos + 1)
    assert toks[pos][0] == ")"
    return Expr("paren", (inner,)), pos + 1


def sample_expression(policy, condition, length_limit: int = 100, rng_seed: int = 0):
    """Sample one expression by repeatedly drawing masked rules from ``policy``.

    Returns a complete Expr, or Incomplete carrying the partial state when
    ``length_limit`` rules were applied without terminating.  Policy errors
    propagate.
    """
    import random

    return sample_with_rng(policy, condition, random.Random(rng_seed), length_limit)


def sample_with_rng(policy, condition, rng, length_limit: int = 100,
                    start: DerivationState | None = None):
    state = start if start is not None else fresh_state(length_limit)
    if state.length_limit != length_limit:
        state = DerivationState(state.rules, state.stack, length_limit)
    while not state.complete:
        if len(state.rules) >= length_limit:
            return Incomplete(state)
        dist = policy.next_distribution(state, condition)
        r = _draw(dist.masked, rng)
        state = state.apply(r)
    expr = from_rules(state.rules)
    assert isinstance(expr, Expr)
    return expr


def _draw(probs, rng) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    # Guard against accumulated rounding; fall back to the last nonzero entry.
    for i in range(N_RULES - 1, -1, -1):
        if probs[i] > 0.0:
            return i
    raise ValueError("all-zero probability vector")
