"""
Sensing Policies
================
Policy descriptors, the myopic (greedy) rule, and the ordering-list
bookkeeping that lets the myopic policy run from the initial ordering alone.

Myopic ties are broken by the lowest original channel index.
Random policies draw from numpy's PCG64 stream seeded with (seed, t), so
the action at slot t is a pure function of the descriptor and t.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from osa.model import Action, BeliefState, ChannelModel, Regime, SensingOutcome, tau

logger = logging.getLogger(__name__)


class PolicyKind(str, Enum):
    MYOPIC = 'myopic'
    FIXED = 'fixed'            # fixed first action, myopic thereafter
    RANDOM = 'random'
    OPTIMAL = 'optimal'        # exhaustive DP; not a stepwise rule


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    k: int
    m: int
    first_action: Optional[Action] = None
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', PolicyKind(self.kind))
        if self.k < 1 or not 1 <= self.m <= self.k:
            raise ValueError(f"Policy needs 1 <= m <= k, got k={self.k}, m={self.m}")
        if self.kind == PolicyKind.FIXED:
            if self.first_action is None:
                raise ValueError("Fixed-first policy needs first_action")
            if self.first_action.k != self.k:
                raise ValueError(
                    f"first_action senses {self.first_action.k} channels, policy k={self.k}"
                )
        if self.kind == PolicyKind.RANDOM and self.seed is None:
            raise ValueError("Random policy needs an explicit seed")

    @classmethod
    def myopic(cls, k: int, m: int) -> 'PolicySpec':
        return cls(PolicyKind.MYOPIC, k, m)

    @classmethod
    def fixed_then_myopic(cls, first_action: Action, m: int) -> 'PolicySpec':
        return cls(PolicyKind.FIXED, first_action.k, m, first_action=first_action)

    @classmethod
    def random(cls, k: int, m: int, seed: int) -> 'PolicySpec':
        return cls(PolicyKind.RANDOM, k, m, seed=seed)

    @property
    def is_stepwise(self) -> bool:
        return self.kind != PolicyKind.OPTIMAL

    def bind(self, n: int):
        """Validate against an N-channel system."""
        if self.k > n:
            raise ValueError(f"Policy senses k={self.k} channels but only N={n} exist")
        if self.first_action is not None:
            self.first_action.validate(n)

    def to_dict(self) -> Dict:
        data = {"kind": self.kind.value, "k": self.k, "m": self.m}
        if self.first_action is not None:
            data["first_action"] = self.first_action.to_user()
        if self.seed is not None:
            data["seed"] = self.seed
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'PolicySpec':
        try:
            kind = PolicyKind(data['kind'])
            k, m = int(data['k']), int(data['m'])
        except KeyError as e:
            raise ValueError(f"Policy JSON missing field {e}")
        first = data.get('first_action')
        return cls(
            kind, k, m,
            first_action=Action.from_user(first) if first is not None else None,
            seed=data.get('seed'),
        )


@dataclass(frozen=True)
class OrderedBelief:
    """
    Belief values sorted nonincreasing plus the channel each slot holds.
    perm[i] is the 0-based original channel of sorted position i.
    """
    values: Tuple[float, ...]
    perm: Tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != len(self.perm):
            raise ValueError("OrderedBelief values and perm differ in length")
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"perm is not a permutation: {self.perm}")

    @classmethod
    def from_belief(cls, belief: BeliefState) -> 'OrderedBelief':
        order = sorted(range(belief.n), key=lambda i: (-belief.omegas[i], i))
        return cls(tuple(belief.omegas[i] for i in order), tuple(order))

    def is_sorted(self) -> bool:
        return all(a >= b for a, b in zip(self.values, self.values[1:]))

    def first_k(self, k: int) -> Action:
        return Action(tuple(sorted(self.perm[:k])))

    def to_belief(self) -> BeliefState:
        omegas = [0.0] * len(self.values)
        for value, channel in zip(self.values, self.perm):
            omegas[channel] = value
        return BeliefState(tuple(omegas))


# =============================================================================
# MYOPIC RULE
# =============================================================================

def myopic_action(belief: BeliefState, k: int) -> Action:
    """Sense the k largest beliefs; ties go to the lowest channel index."""
    if not 1 <= k <= belief.n:
        raise ValueError(f"k must satisfy 1 <= k <= N={belief.n}, got {k}")
    order = sorted(range(belief.n), key=lambda i: (-belief.omegas[i], i))
    return Action(tuple(sorted(order[:k])))


def advance_order(ordered: OrderedBelief, outcome: SensingOutcome,
                  model: ChannelModel) -> OrderedBelief:
    """
    Reorder the list after sensing its first k positions.

    Positive: good (p11) first, unsensed tau-updated in order, bad (p01) last.
    Negative: bad (p01) first, unsensed tau-updated in reverse order, good (p11) last.
    """
    k = len(outcome.bits)
    if not 1 <= k <= len(ordered.values):
        raise ValueError(f"Outcome length {k} does not fit {len(ordered.values)} channels")

    sensed = list(zip(ordered.perm[:k], outcome.bits))
    good = [(model.p11, c) for c, bit in sensed if bit]
    bad = [(model.p01, c) for c, bit in sensed if not bit]
    middle = [(tau(w, model), c) for w, c in zip(ordered.values[k:], ordered.perm[k:])]

    if model.regime == Regime.POSITIVE:
        entries = good + middle + bad
    else:
        entries = bad + middle[::-1] + good
    return OrderedBelief(tuple(w for w, _ in entries), tuple(c for _, c in entries))


# =============================================================================
# DISPATCH
# =============================================================================

def random_action(n: int, k: int, rng: np.random.Generator) -> Action:
    """Uniform size-k subset of N channels."""
    return Action(tuple(sorted(int(c) for c in rng.choice(n, size=k, replace=False))))


def policy_action(spec: PolicySpec, belief: BeliefState, t: int,
                  rng: Optional[np.random.Generator] = None) -> Action:
    """
    Action of a stepwise policy at slot t (1-based).
    Random policies use `rng` when given, else the (seed, t) stream.
    """
    if not spec.is_stepwise:
        raise ValueError("Exhaustive-optimal policy has no stepwise rule; use dp.optimal_value")
    if t < 1:
        raise ValueError(f"Time slots start at 1, got t={t}")
    spec.bind(belief.n)

    if spec.kind == PolicyKind.FIXED and t == 1:
        return spec.first_action
    if spec.kind == PolicyKind.RANDOM:
        if rng is None:
            rng = np.random.default_rng([spec.seed, t])
        return random_action(belief.n, spec.k, rng)
    return myopic_action(belief, spec.k)


def parse_action(text: str) -> Action:
    """Parse a 1-based CLI list like '1,3'."""
    try:
        indices = [int(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise ValueError(f"Action must be comma-separated channel numbers, got '{text}'")
    return Action.from_user(indices)
