"""
Channel Model & Belief State
============================
Two-state Markov channel (Gilbert-Elliott style), the per-channel belief
vector, belief propagation tau(), and belief transitions under sensing.

Channel indices are 0-based inside the library. User-facing I/O (JSON, CLI)
is 1-based; the conversion lives in Action.from_user() / Action.to_user().
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, Iterator, List, Sequence, Tuple

from osa.config import PROB_TOL

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    """Correlation regime of the channel chain."""
    POSITIVE = 'positive'
    NEGATIVE = 'negative'


def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not (-PROB_TOL <= value <= 1.0 + PROB_TOL):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return min(max(value, 0.0), 1.0)


# =============================================================================
# CHANNEL MODEL
# =============================================================================

@dataclass(frozen=True)
class ChannelModel:
    """
    Identical two-state chain shared by every channel.

    p11: P(good -> good), p01: P(bad -> good).
    p11 == p01 is classified Positive (delta = 0).
    """
    p11: float
    p01: float

    def __post_init__(self):
        object.__setattr__(self, 'p11', _check_probability(self.p11, 'p11'))
        object.__setattr__(self, 'p01', _check_probability(self.p01, 'p01'))

    @property
    def delta(self) -> float:
        return abs(self.p11 - self.p01)

    @property
    def regime(self) -> Regime:
        return Regime.POSITIVE if self.p11 >= self.p01 else Regime.NEGATIVE

    @property
    def box(self) -> Tuple[float, float]:
        """(low, high) interval every propagated belief falls into."""
        return min(self.p01, self.p11), max(self.p01, self.p11)

    @property
    def fixed_point(self) -> float:
        """Stationary probability of the good state, p01 / (1 - p11 + p01)."""
        denom = 1.0 - self.p11 + self.p01
        if denom <= 0.0:
            # p11 = 1, p01 = 0: every belief is a fixed point
            raise ValueError("Chain with p11=1 and p01=0 has no unique stationary distribution")
        return self.p01 / denom

    def to_dict(self) -> Dict[str, float]:
        return {"p11": self.p11, "p01": self.p01}

    @classmethod
    def from_dict(cls, data: Dict) -> 'ChannelModel':
        try:
            return cls(p11=data['p11'], p01=data['p01'])
        except KeyError as e:
            raise ValueError(f"Channel model JSON missing field {e}")


def stationary_probability(model: ChannelModel) -> float:
    """Steady-state probability that a channel is good."""
    return model.fixed_point


# =============================================================================
# BELIEFS, ACTIONS, OUTCOMES
# =============================================================================

@dataclass(frozen=True)
class BeliefState:
    """Per-channel probabilities of being good; immutable."""
    omegas: Tuple[float, ...]

    def __post_init__(self):
        if len(self.omegas) < 1:
            raise ValueError("Belief state needs at least one channel")
        cleaned = tuple(
            _check_probability(w, f"omega[{i + 1}]") for i, w in enumerate(self.omegas)
        )
        object.__setattr__(self, 'omegas', cleaned)

    @property
    def n(self) -> int:
        return len(self.omegas)

    def in_range(self, model: ChannelModel) -> bool:
        """True when every omega lies in [min(p01,p11), max(p01,p11)]."""
        low, high = model.box
        return all(low - PROB_TOL <= w <= high + PROB_TOL for w in self.omegas)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"omegas": list(self.omegas)}

    @classmethod
    def from_dict(cls, data: Dict) -> 'BeliefState':
        if 'omegas' not in data:
            raise ValueError("Belief JSON missing field 'omegas'")
        return cls(tuple(data['omegas']))


def steady_state_belief(model: ChannelModel, n: int) -> BeliefState:
    """Belief with every channel at the stationary probability."""
    return BeliefState((model.fixed_point,) * n)


@dataclass(frozen=True)
class Action:
    """Sensed channel indices, 0-based and strictly increasing."""
    channels: Tuple[int, ...]

    def __post_init__(self):
        channels = tuple(int(c) for c in self.channels)
        if not channels:
            raise ValueError("Action must sense at least one channel")
        if any(b <= a for a, b in zip(channels, channels[1:])):
            raise ValueError(f"Action channels must be strictly increasing, got {channels}")
        if channels[0] < 0:
            raise ValueError(f"Negative channel index in {channels}")
        object.__setattr__(self, 'channels', channels)

    @property
    def k(self) -> int:
        return len(self.channels)

    def validate(self, n: int):
        if self.k > n or self.channels[-1] >= n:
            raise ValueError(f"Action {self.to_user()} does not fit {n} channels")

    def to_user(self) -> List[int]:
        """1-based indices for JSON / CLI output."""
        return [c + 1 for c in self.channels]

    @classmethod
    def from_user(cls, indices: Sequence[int]) -> 'Action':
        """Build from 1-based indices in any order."""
        ordered = sorted(int(i) for i in indices)
        if len(set(ordered)) != len(ordered):
            raise ValueError(f"Duplicate channel in action {list(indices)}")
        if ordered and ordered[0] < 1:
            raise ValueError(f"Channel indices are 1-based, got {list(indices)}")
        return cls(tuple(i - 1 for i in ordered))


@dataclass(frozen=True)
class SensingOutcome:
    """Observed bits aligned with the action's channel order (1 = good)."""
    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"Sensing outcome bits must be 0/1, got {bits}")
        object.__setattr__(self, 'bits', bits)


def all_outcomes(k: int) -> Iterator[SensingOutcome]:
    """Every one of the 2^k outcomes of sensing k channels."""
    for bits in product((1, 0), repeat=k):
        yield SensingOutcome(bits)


# =============================================================================
# DYNAMICS
# =============================================================================

def tau(omega: float, model: ChannelModel) -> float:
    """One-step propagation of an unobserved channel's belief."""
    if not (-PROB_TOL <= omega <= 1.0 + PROB_TOL):
        raise ValueError(f"tau() needs omega in [0, 1], got {omega}")
    return omega * model.p11 + (1.0 - omega) * model.p01


def transition_belief(belief: BeliefState, action: Action,
                      outcome: SensingOutcome, model: ChannelModel) -> BeliefState:
    """
    Next-slot belief: sensed-good -> p11, sensed-bad -> p01, others -> tau(omega).
    Positions are preserved.
    """
    action.validate(belief.n)
    if len(outcome.bits) != action.k:
        raise ValueError(
            f"Outcome has {len(outcome.bits)} bits but action senses {action.k} channels"
        )
    observed = dict(zip(action.channels, outcome.bits))
    nxt = []
    for i, w in enumerate(belief.omegas):
        if i in observed:
            nxt.append(model.p11 if observed[i] else model.p01)
        else:
            nxt.append(tau(w, model))
    return BeliefState(tuple(nxt))


def outcome_probability(belief: BeliefState, action: Action, outcome: SensingOutcome) -> float:
    """q(l; omega): product of omega_i (bit 1) or 1 - omega_i (bit 0) over sensed channels."""
    action.validate(belief.n)
    if len(outcome.bits) != action.k:
        raise ValueError(
            f"Outcome has {len(outcome.bits)} bits but action senses {action.k} channels"
        )
    q = 1.0
    for channel, bit in zip(action.channels, outcome.bits):
        w = belief.omegas[channel]
        q *= w if bit else (1.0 - w)
    return q
