"""Exact symbolic layer: expression trees as integer-coefficient rational functions.

Polynomials are tuples of arbitrary-precision integer coefficients, index i
holding the coefficient of x**i, with no trailing zeros; the zero polynomial
is the empty tuple.  All arithmetic here is exact; nothing in this module
touches floating point.

Expression semantics follow the conventional reading of the token string
(grammar.semantic_tree), so any two trees rendering to the same string get
identical rational forms, powers and canonical keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .grammar import Expr, semantic_tree

Poly = tuple[int, ...]

ZERO_POLY: Poly = ()
ONE_POLY: Poly = (1,)

# Reduce an unreduced num/den pair early once either side grows past this
# degree, to bound intermediate blowup on deeply nested inputs.
DEGREE_GUARD = 128


def _trim(coeffs) -> Poly:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def poly_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return _trim((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))


def poly_sub(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return _trim((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n))


def poly_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ZERO_POLY
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return _trim(out)


def poly_degree(a: Poly) -> int:
    """Degree of a nonzero polynomial; the zero polynomial has no degree."""
    if not a:
        raise ValueError("zero polynomial has no degree")
    return len(a) - 1


def poly_ord0(a: Poly) -> int:
    """Index of the lowest nonzero coefficient (order of vanishing at 0)."""
    if not a:
        raise ValueError("zero polynomial has no order at 0")
    for i, c in enumerate(a):
        if c:
            return i
    raise AssertionError("untrimmed polynomial")


def poly_content(a: Poly) -> int:
    c = 0
    for coeff in a:
        c = gcd(c, abs(coeff))
    return c


def poly_primitive(a: Poly) -> Poly:
    if not a:
        return a
    c = poly_content(a)
    return tuple(coeff // c for coeff in a)


def _pseudo_rem(a: Poly, b: Poly) -> Poly:
    # lc(b)**(deg a - deg b + 1) * a mod b, kept in integers.
    da, db = len(a) - 1, len(b) - 1
    lb = b[-1]
    r = list(a)
    for k in range(da - db, -1, -1):
        lead = r[db + k]
        if lead:
            for i in range(len(r)):
                r[i] *= lb
            for i in range(db + 1):
                r[i + k] -= lead * b[i]
        # invariant: coefficients at and above db + k are now zero
    return _trim(r[:db])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Primitive GCD over the rationals, positive leading coefficient."""
    if not a and not b:
        return ZERO_POLY
    a, b = poly_primitive(a), poly_primitive(b)
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = _pseudo_rem(a, b)
        a, b = b, poly_primitive(r)
    if a and a[-1] < 0:
        a = tuple(-c for c in a)
    return a


def poly_divexact(a: Poly, b: Poly) -> Poly:
    """Exact quotient a / b; b must divide a over the rationals."""
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    if not a:
        return ZERO_POLY
    rem = [Fraction(c) for c in a]
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    for k in range(len(a) - len(b), -1, -1):
        coeff = rem[len(b) - 1 + k] / b[-1]
        q[k] = coeff
        if coeff:
            for i, bi in enumerate(b):
                rem[i + k] -= coeff * bi
    if any(rem):
        raise ValueError("inexact polynomial division")
    out = []
    for c in q:
        if c.denominator != 1:
            raise ValueError("quotient is not integral")
        out.append(int(c))
    return _trim(out)


def poly_eval_fraction(a: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class RationalForm:
    """num/den pair; den is never the zero polynomial."""

    num: Poly
    den: Poly

    def __post_init__(self):
        if not self.den:
            raise ValueError("zero denominator is the undefined-function status, not a RationalForm")


UNDEFINED = "undefined"
ZERO_FN = "zero"
DEFINED = "defined"


@dataclass(frozen=True)
class LeadingPowers:
    status: str  # "defined" | "zero" | "undefined"
    p0: int | None = None
    pinf: int | None = None


@dataclass(frozen=True)
class Condition:
    """Target leading-power pair at 0 and at infinity."""

    c0: int
    cinf: int

    @property
    def m(self) -> int:
        return abs(self.c0) + abs(self.cinf)


@dataclass(frozen=True)
class CanonicalKey:
    """Reduced, sign-normalized coefficient pair; semantic identity of a tree.

    Two complete expressions receive equal keys iff they denote the same
    rational function.  The zero function and undefined expressions map to
    the reserved "zero" and "undefined" keys.
    """

    status: str
    num: Poly = ()
    den: Poly = ()

    @property
    def text(self) -> str:
        if self.status != DEFINED:
            return self.status
        return ",".join(str(c) for c in self.num) + "|" + ",".join(str(c) for c in self.den)


ZERO_KEY = CanonicalKey(ZERO_FN)
UNDEFINED_KEY = CanonicalKey(UNDEFINED)


def _reduce(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    g = poly_gcd(num, den)
    if len(g) > 1:
        num = poly_divexact(num, g)
        den = poly_divexact(den, g)
    return num, den


def to_rational(expr: Expr) -> RationalForm | None:
    """Bottom-up exact conversion; None when a subexpression divides by the
    identically-zero function.

    The result is deliberately unreduced (see canonicalize); common factors
    shift numerator and denominator orders equally, so leading powers read
    off an unreduced pair are still exact.
    """
    return _to_rational(semantic_tree(expr))


def _to_rational(expr: Expr) -> RationalForm | None:
    k = expr.kind
    if k == "var_x":
        return RationalForm((0, 1), ONE_POLY)
    if k == "const_1":
        return RationalForm(ONE_POLY, ONE_POLY)
    if k == "paren":
        return _to_rational(expr.children[0])
    left = _to_rational(expr.children[0])
    if left is None:
        return None
    right = _to_rational(expr.children[1])
    if right is None:
        return None
    a, b, c, d = left.num, left.den, right.num, right.den
    if k == "add":
        num, den = poly_add(poly_mul(a, d), poly_mul(c, b)), poly_mul(b, d)
    elif k == "sub":
        num, den = poly_sub(poly_mul(a, d), poly_mul(c, b)), poly_mul(b, d)
    elif k == "mul":
        num, den = poly_mul(a, c), poly_mul(b, d)
    else:  # div
        if not c:
            return None
        num, den = poly_mul(a, d), poly_mul(b, c)
    if len(num) > DEGREE_GUARD or len(den) > DEGREE_GUARD:
        num, den = _reduce(num, den)
    return RationalForm(num, den)


def leading_powers(expr: Expr) -> LeadingPowers:
    """Leading powers at 0 and infinity, or the zero/undefined status."""
    form = to_rational(expr)
    if form is None:
        return LeadingPowers(UNDEFINED)
    if not form.num:
        return LeadingPowers(ZERO_FN)
    p0 = poly_ord0(form.num) - poly_ord0(form.den)
    pinf = poly_degree(form.num) - poly_degree(form.den)
    return LeadingPowers(DEFINED, p0, pinf)


def condition_of(expr: Expr) -> Condition | LeadingPowers:
    """Condition of a complete tree; the LeadingPowers status when not defined."""
    lp = leading_powers(expr)
    if lp.status == DEFINED:
        return Condition(lp.p0, lp.pinf)
    return lp


def canonicalize(expr: Expr) -> CanonicalKey:
    """Canonical p/q form: polynomial-GCD reduced, common integer content
    removed, positive den leading coefficient.

    Only the shared scalar content may be divided out; stripping num and den
    to primitive independently would identify 2x with x.
    """
    form = to_rational(expr)
    if form is None:
        return UNDEFINED_KEY
    if not form.num:
        return ZERO_KEY
    num, den = _reduce(form.num, form.den)
    shared = gcd(poly_content(num), poly_content(den))
    if shared > 1:
        num = tuple(c // shared for c in num)
        den = tuple(c // shared for c in den)
    if den[-1] < 0:
        num = tuple(-c for c in num)
        den = tuple(-c for c in den)
    return CanonicalKey(DEFINED, num, den)


def eval_exact(expr: Expr, x: Fraction) -> Fraction | None:
    """Exact value at a rational point; None at poles or when undefined."""
    form = to_rational(expr)
    if form is None:
        return None
    den = poly_eval_fraction(form.den, x)
    if den == 0:
        return None
    return poly_eval_fraction(form.num, x) / den
