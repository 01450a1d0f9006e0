"""Numeric scoring of candidate expressions against a target.

A target is a set of values on the training points (optionally noise
perturbed) plus a leading-power condition.  Candidates are scored by RMSE on
point sets and by the absolute leading-power error; interpolation and
extrapolation RMSEs are always computed against the noise-free truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grammar import Expr, Incomplete, parse_text, semantic_tree
from .rational import DEFINED, Condition, condition_of, leading_powers

TRAIN_XS = (1.2, 1.6, 2.0, 2.4, 2.8)
INTERPOLATION_XS = (1.4, 1.8, 2.2, 2.6)
EXTRAPOLATION_XS = (5.0, 6.0, 7.0, 8.0, 9.0)

SOLVED_TOL = 1e-9
POLE_TOL = 1e-12

# Worst-case leading-power error: the L1 distance between conditions (0, 0)
# and (9, 9), substituted whenever powers are undefined.
DP_SENTINEL = 18

# Finite stand-in objective for incomplete or non-finite candidates, so that
# search-side comparisons stay total.
INVALID_PENALTY = 1e6

OBJECTIVE_MODES = ("data_only", "pw_only", "data_plus_pw")


@dataclass(frozen=True)
class PointSet:
    name: str
    xs: tuple[float, ...]


TRAIN_POINTS = PointSet("train", TRAIN_XS)
INTERPOLATION_POINTS = PointSet("interpolation", INTERPOLATION_XS)
EXTRAPOLATION_POINTS = PointSet("extrapolation", EXTRAPOLATION_XS)


def eval_tree(expr: Expr, x: float) -> float | None:
    """Value of the expression at one point under its conventional reading;
    None at poles and non-finite results."""
    return _eval(semantic_tree(expr), x)


def _eval(sem: Expr, x: float) -> float | None:
    k = sem.kind
    if k == "var_x":
        return x
    if k == "const_1":
        return 1.0
    if k == "paren":
        return _eval(sem.children[0], x)
    a = _eval(sem.children[0], x)
    if a is None:
        return None
    b = _eval(sem.children[1], x)
    if b is None:
        return None
    if k == "add":
        v = a + b
    elif k == "sub":
        v = a - b
    elif k == "mul":
        v = a * b
    else:
        if abs(b) < POLE_TOL:
            return None
        v = a / b
    return v if math.isfinite(v) else None


@dataclass(frozen=True)
class TargetSpec:
    """Search target: train values as seen by the objective, the desired
    condition, and the hidden source expression used only for scoring."""

    expr_text: str
    condition: Condition
    train_values: tuple[float, ...]
    noise_sd: float = 0.0
    noise_seed: int | None = None

    @staticmethod
    def from_expression(text: str) -> "TargetSpec":
        tree = parse_text(text)
        cond = condition_of(tree)
        if not isinstance(cond, Condition):
            raise ValueError(f"target {text!r} has no defined leading powers")
        sem = semantic_tree(tree)
        values = []
        for x in TRAIN_XS:
            v = _eval(sem, x)
            if v is None:
                raise ValueError(f"target {text!r} is non-finite at x={x}")
            values.append(v)
        return TargetSpec(text, cond, tuple(values))

    def truth(self, points: PointSet) -> tuple[float, ...] | None:
        """Noise-free values of the source expression; None if any point is
        a pole."""
        sem = semantic_tree(parse_text(self.expr_text))
        out = []
        for x in points.xs:
            v = _eval(sem, x)
            if v is None:
                return None
            out.append(v)
        return tuple(out)


def perturb_with_noise(target: TargetSpec, sd: float, rng_seed: int) -> TargetSpec:
    """Add i.i.d. Gaussian noise to the train values only.

    Interpolation and extrapolation scoring still reads the noise-free
    source expression.  sd = 0 returns the target unchanged.
    """
    if sd < 0:
        raise ValueError("noise sd must be nonnegative")
    if sd == 0:
        return target
    base = TargetSpec.from_expression(target.expr_text)
    rng = np.random.default_rng(rng_seed)
    noisy = tuple(v + sd * float(z) for v, z in zip(base.train_values, rng.standard_normal(len(base.train_values))))
    return replace(base, train_values=noisy, noise_sd=sd, noise_seed=rng_seed)


def rmse(candidate: Expr, target: TargetSpec, points: PointSet) -> float:
    """Root mean square error on a point set; math.inf when the candidate
    hits a pole or overflows on any point."""
    if points.name == "train":
        truth = target.train_values
    else:
        truth = target.truth(points)
        if truth is None:
            return math.inf
    sem = semantic_tree(candidate)
    total = 0.0
    for x, t in zip(points.xs, truth):
        v = _eval(sem, x)
        if v is None:
            return math.inf
        d = t - v
        total += d * d
    mean = total / len(points.xs)
    return math.sqrt(mean) if math.isfinite(mean) else math.inf


def dp_error(candidate: Expr | Incomplete, condition: Condition) -> int:
    """|c0 - p0| + |cinf - pinf|; DP_SENTINEL when the candidate has no
    defined powers (incomplete, zero function, or undefined)."""
    if isinstance(candidate, Incomplete):
        return DP_SENTINEL
    lp = leading_powers(candidate)
    if lp.status != DEFINED:
        return DP_SENTINEL
    return abs(condition.c0 - lp.p0) + abs(condition.cinf - lp.pinf)


def objective(candidate: Expr | Incomplete, target: TargetSpec, mode: str) -> float:
    """Search objective, always finite and nonnegative."""
    if mode not in OBJECTIVE_MODES:
        raise ValueError(f"unknown objective mode {mode!r}")
    if isinstance(candidate, Incomplete):
        return INVALID_PENALTY
    if mode == "pw_only":
        return float(dp_error(candidate, target.condition))
    dg = rmse(candidate, target, TRAIN_POINTS)
    if not math.isfinite(dg):
        return INVALID_PENALTY
    if mode == "data_only":
        return dg
    return dg + dp_error(candidate, target.condition)


SOLVED = "solved"
INVALID = "invalid"
UNSOLVED = "unsolved"


@dataclass(frozen=True)
class EvalReport:
    dg_train: float
    dg_int: float
    dg_ext: float
    dp: int
    status: str

    def to_json(self) -> dict:
        def enc(v):
            return None if not math.isfinite(v) else v

        return {
            "dg_train": enc(self.dg_train),
            "dg_int": enc(self.dg_int),
            "dg_ext": enc(self.dg_ext),
            "dp": self.dp,
            "status": self.status,
        }


def classify(candidate: Expr | Incomplete | None, target: TargetSpec) -> EvalReport:
    """Assemble the full report and the solved/invalid/unsolved status.

    solved requires noise-free interpolation and extrapolation RMSE below
    SOLVED_TOL and a leading-power error of zero; incomplete candidates,
    undefined functions and candidates non-finite on any required point are
    invalid.
    """
    if candidate is None or isinstance(candidate, Incomplete):
        return EvalReport(math.inf, math.inf, math.inf, DP_SENTINEL, INVALID)
    dg_train = rmse(candidate, target, TRAIN_POINTS)
    dg_int = rmse(candidate, target, INTERPOLATION_POINTS)
    dg_ext = rmse(candidate, target, EXTRAPOLATION_POINTS)
    dp = dp_error(candidate, target.condition)
    undefined = leading_powers(candidate).status == "undefined"
    if undefined or not all(map(math.isfinite, (dg_train, dg_int, dg_ext))):
        status = INVALID
    elif dg_int < SOLVED_TOL and dg_ext < SOLVED_TOL and dp == 0:
        status = SOLVED
    else:
        status = UNSOLVED
    return EvalReport(dg_train, dg_int, dg_ext, dp, status)
