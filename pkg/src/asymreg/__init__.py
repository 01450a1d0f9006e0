"""Symbolic regression over a fixed rational-expression grammar, with
asymptotic leading-power constraints guiding both generation and search."""

__version__ = "0.1.0"

from .grammar import (
    DerivationState,
    Expr,
    Incomplete,
    from_rules,
    parse_text,
    render,
    sample_expression,
    to_rules,
    valid_next_mask,
)
from .rational import (
    CanonicalKey,
    Condition,
    LeadingPowers,
    canonicalize,
    condition_of,
    leading_powers,
)
from .objective import (
    EvalReport,
    TargetSpec,
    classify,
    dp_error,
    objective,
    perturb_with_noise,
    rmse,
)
from .corpus import CorpusRecord, DatasetConfig, build_dataset, space_size
from .policies import (
    EmpiricalPolicy,
    NeuralPolicyClient,
    PolicyDistribution,
    TeacherPolicy,
    UniformPolicy,
    build_empirical,
    random_policy,
    sample_from_prefix,
)
from .mcts import MctsConfig, SearchOutcome, puct_score, run_search
from .ea import EaConfig, evolve, tree_to_expr

__all__ = [name for name in dir() if not name.startswith("_")]
