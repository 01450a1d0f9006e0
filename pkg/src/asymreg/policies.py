"""Next-rule policies: the shared interface, empirical baselines and the
client for the remote neural policy service.

Every policy maps a partial derivation plus a desired condition to a
distribution over the nine rules.  The masked distribution is always
supported on grammatically valid rules and sums to one.
"""

from __future__ import annotations

import json
import os
import socket
from dataclasses import dataclass

from .grammar import DerivationState, N_RULES, valid_next_mask
from .rational import Condition

DEFAULT_ENDPOINT_ENV = "ASYMREG_POLICY_ENDPOINT"


class PolicyError(Exception):
    pass


class UnseenContextError(PolicyError):
    """Raised by empirical policies in "refuse" mode when the corpus holds no
    observation for the queried context/condition."""


class ServiceUnavailableError(PolicyError):
    pass


class ProtocolError(PolicyError):
    pass


@dataclass(frozen=True)
class PolicyDistribution:
    raw: tuple[float, ...]
    masked: tuple[float, ...]


def mask_and_normalize(raw, mask) -> tuple[float, ...]:
    """masked = normalize(raw * mask); a zero product falls back to uniform
    over the valid rules."""
    prod = [r if m else 0.0 for r, m in zip(raw, mask)]
    total = sum(prod)
    if total <= 0.0:
        n_valid = sum(mask)
        return tuple((1.0 / n_valid) if m else 0.0 for m in mask)
    return tuple(p / total for p in prod)


class UniformPolicy:
    """Uniform distribution over the valid next rules."""

    def next_distribution(self, state: DerivationState, condition: Condition) -> PolicyDistribution:
        mask = valid_next_mask(state)
        raw = tuple(1.0 / N_RULES for _ in range(N_RULES))
        return PolicyDistribution(raw, mask_and_normalize(raw, mask))


def random_policy() -> UniformPolicy:
    return UniformPolicy()


class TeacherPolicy:
    """Diagnostic prior: all mass on the target's own next rule while the
    partial sequence is a prefix of the target, uniform over valid elsewhere."""

    def __init__(self, target_rules):
        self.target_rules = tuple(target_rules)

    def next_distribution(self, state: DerivationState, condition: Condition) -> PolicyDistribution:
        mask = valid_next_mask(state)
        t = len(state.rules)
        if t < len(self.target_rules) and state.rules == self.target_rules[:t]:
            nxt = self.target_rules[t]
            raw = tuple(1.0 if i == nxt else 0.0 for i in range(N_RULES))
        else:
            raw = tuple(1.0 / N_RULES for _ in range(N_RULES))
        return PolicyDistribution(raw, mask_and_normalize(raw, mask))


EMPIRICAL_KINDS = ("fh", "fhnc", "lh", "lhnc")


class EmpiricalPolicy:
    """Empirical next-rule distribution counted over all prefixes of the
    training sequences.

    kind selects the context: full prefix (fh/fhnc) or the last ``l`` rules
    (lh/lhnc); the nc variants ignore the condition.  ``fallback`` controls
    behaviour on contexts never observed in the corpus: "uniform" answers
    with the uniform distribution over valid rules, "refuse" raises
    UnseenContextError so that generation fails as non-terminal.
    """

    def __init__(self, kind: str, l: int | None = None, fallback: str | None = None):
        if kind not in EMPIRICAL_KINDS:
            raise ValueError(f"unknown empirical policy kind {kind!r}")
        if kind in ("lh", "lhnc") and (l is None or l < 1):
            raise ValueError("limited-history policies need l >= 1")
        self.kind = kind
        self.l = l if kind in ("lh", "lhnc") else None
        self.conditioned = kind in ("fh", "lh")
        if fallback is None:
            fallback = "refuse" if self.conditioned else "uniform"
        if fallback not in ("refuse", "uniform"):
            raise ValueError(f"unknown fallback {fallback!r}")
        self.fallback = fallback
        self.counts: dict = {}
        self.mask_fallbacks = 0

    def _context(self, rules: tuple[int, ...]) -> tuple[int, ...]:
        if self.l is None:
            return rules
        return rules[-self.l:] if len(rules) > self.l else rules

    def _key(self, rules, condition):
        ctx = self._context(tuple(rules))
        if self.conditioned:
            return (ctx, (condition.c0, condition.cinf))
        return (ctx, None)

    def observe_sequence(self, rules, condition) -> None:
        rules = tuple(rules)
        cond = (condition.c0, condition.cinf) if self.conditioned else None
        for t in range(1, len(rules)):
            ctx = self._context(rules[:t])
            key = (ctx, cond)
            vec = self.counts.get(key)
            if vec is None:
                vec = [0] * N_RULES
                self.counts[key] = vec
            vec[rules[t]] += 1

    def next_distribution(self, state: DerivationState, condition: Condition) -> PolicyDistribution:
        mask = valid_next_mask(state)
        if not state.rules:
            # Every stored sequence starts with rule 0; the fresh state is
            # deterministic regardless of the corpus.
            raw = tuple(1.0 if i == 0 else 0.0 for i in range(N_RULES))
            return PolicyDistribution(raw, mask_and_normalize(raw, mask))
        vec = self.counts.get(self._key(state.rules, condition))
        if vec is None:
            if self.fallback == "refuse":
                raise UnseenContextError(
                    f"no observations for context {self._context(state.rules)} "
                    f"under condition ({condition.c0},{condition.cinf})")
            raw = tuple(1.0 / N_RULES for _ in range(N_RULES))
        else:
            total = sum(vec)
            raw = tuple(v / total for v in vec)
        masked = mask_and_normalize(raw, mask)
        if vec is not None and not any(r for r, m in zip(raw, mask) if m):
            self.mask_fallbacks += 1
        return PolicyDistribution(raw, masked)


def build_empirical(records, kind: str, l: int | None = None,
                    fallback: str | None = None) -> EmpiricalPolicy:
    """Build an empirical policy from corpus records carrying rule sequences
    and conditions; records without a defined condition are skipped for
    conditioned variants."""
    policy = EmpiricalPolicy(kind, l, fallback)
    for rec in records:
        if policy.conditioned:
            if rec.c0 is None:
                continue
            cond = Condition(rec.c0, rec.cinf)
        else:
            cond = Condition(0, 0)
        policy.observe_sequence(rec.rules, cond)
    return policy


def parse_model_name(name: str):
    """CLI model spec: nn, nnnc, random, fh, fhnc, lh:L, lhnc:L."""
    name = name.lower()
    if name in ("nn", "nnnc", "random", "fh", "fhnc"):
        return name, None
    if ":" in name:
        base, _, num = name.partition(":")
        if base in ("lh", "lhnc"):
            return base, int(num)
    raise ValueError(f"unknown model {name!r}")


class NeuralPolicyClient:
    """Client for the newline-delimited JSON policy protocol.

    Requests are {"id", "rules", "c0", "cinf"}; replies {"id", "probs"} and
    must arrive in request order on the connection.  The reply distribution
    is re-masked and renormalized locally as a defensive second mask.
    """

    def __init__(self, endpoint: str | None = None, timeout: float = 30.0):
        endpoint = endpoint or os.environ.get(DEFAULT_ENDPOINT_ENV)
        if not endpoint:
            raise ServiceUnavailableError(
                f"no policy endpoint; set {DEFAULT_ENDPOINT_ENV} or pass one explicitly")
        self.endpoint = endpoint
        self.timeout = timeout
        self._sock = None
        self._reader = None
        self._next_id = 0
        self.mask_fallbacks = 0

    def _connect(self):
        if self._sock is not None:
            return
        host, _, port = self.endpoint.rpartition(":")
        try:
            self._sock = socket.create_connection((host or "127.0.0.1", int(port)),
                                                  timeout=self.timeout)
            self._reader = self._sock.makefile("r", encoding="utf-8")
        except (OSError, ValueError) as exc:
            self._sock = None
            raise ServiceUnavailableError(f"cannot reach policy service at {self.endpoint}: {exc}")

    def _roundtrip(self, payload: dict) -> dict:
        self._connect()
        try:
            self._sock.sendall((json.dumps(payload) + "\n").encode("utf-8"))
            line = self._reader.readline()
        except OSError as exc:
            self.close()
            raise ServiceUnavailableError(f"connection to {self.endpoint} failed: {exc}")
        if not line:
            self.close()
            raise ServiceUnavailableError(f"policy service at {self.endpoint} closed the connection")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed reply: {exc}")

    def ping(self) -> bool:
        reply = self._roundtrip({"op": "ping"})
        return reply.get("op") == "pong"

    def next_distribution(self, state: DerivationState, condition: Condition) -> PolicyDistribution:
        mask = valid_next_mask(state)
        if not state.rules:
            raw = tuple(1.0 if i == 0 else 0.0 for i in range(N_RULES))
            return PolicyDistribution(raw, mask_and_normalize(raw, mask))
        req_id = self._next_id
        self._next_id += 1
        reply = self._roundtrip({
            "id": req_id,
            "rules": list(state.rules),
            "c0": condition.c0,
            "cinf": condition.cinf,
        })
        if "error" in reply:
            raise ProtocolError(f"service error: {reply['error']}")
        if reply.get("id") != req_id:
            raise ProtocolError(f"reply id {reply.get('id')} does not match request {req_id}")
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != N_RULES:
            raise ProtocolError("reply probs must be a list of 9 floats")
        raw = tuple(float(p) for p in probs)
        if any(p < 0 for p in raw):
            raise ProtocolError("reply probs must be nonnegative")
        masked = mask_and_normalize(raw, mask)
        if not any(r for r, m in zip(raw, mask) if m):
            self.mask_fallbacks += 1
        return PolicyDistribution(raw, masked)

    def close(self):
        if self._reader is not None:
            try:
                self._reader.close()
            except OSError:
                pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._reader = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def sample_from_prefix(policy, prefix, condition, n: int, rng_seed: int = 0,
                       length_limit: int = 100):
    """Sample ``n`` completions of a partial derivation and aggregate them.

    Returns (pairs, n_incomplete) where pairs is a list of (expression text,
    frequency) sorted by descending frequency then text; frequencies are
    relative to the completed samples, so they sum to 1 whenever any sample
    completed.  Completions abandoned at the length cap, including refused
    empirical queries, are counted in n_incomplete.
    """
    import random

    from . import grammar

    state = grammar.fresh_state(length_limit)
    for r in prefix:
        state = state.apply(r)
    rng = random.Random(rng_seed)
    counts: dict[str, int] = {}
    incomplete = 0
    for _ in range(n):
        try:
            result = grammar.sample_with_rng(policy, condition, rng, length_limit, start=state)
        except UnseenContextError:
            incomplete += 1
            continue
        if isinstance(result, grammar.Incomplete):
            incomplete += 1
            continue
        text = grammar.render(result)
        counts[text] = counts.get(text, 0) + 1
    total = sum(counts.values())
    pairs = [(text, c / total) for text, c in counts.items()]
    pairs.sort(key=lambda tc: (-tc[1], tc[0]))
    return pairs, incomplete
