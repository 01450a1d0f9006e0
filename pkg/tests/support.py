import random
from pathlib import Path

from asymreg.grammar import Expr, Incomplete, sample_with_rng
from asymreg.policies import UniformPolicy
from asymreg.rational import Condition

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "desk"


def random_complete_trees(n: int, seed: int, length_limit: int = 40) -> list[Expr]:
    """Complete trees sampled from the uniform policy, rejection on the cap."""
    rng = random.Random(seed)
    policy = UniformPolicy()
    cond = Condition(0, 0)
    out = []
    while len(out) < n:
        result = sample_with_rng(policy, cond, rng, length_limit)
        if not isinstance(result, Incomplete):
            out.append(result)
    return out
