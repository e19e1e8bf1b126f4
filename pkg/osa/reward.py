"""
(k,m) Reward
============
Expected one-slot reward E[min(L, m)], where L is the number of good channels
among the k sensed ones, and the reward-gap bounds R_upper / R_lower.

L follows a Poisson-binomial law; its pmf is built by iterative convolution
(O(k^2)), so no 2^k enumeration is needed.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, Sequence, Tuple

import numpy as np

from osa.config import PROB_TOL
from osa.model import Action, BeliefState, ChannelModel

logger = logging.getLogger(__name__)

# Grid resolution of the brute-force R_upper / R_lower oracle
ORACLE_POINTS_PER_AXIS = 21


@dataclass(frozen=True)
class SuccessCountDistribution:
    """probs[l] = P(exactly l of the sensed channels are good)."""
    probs: Tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(sum(l * p for l, p in enumerate(self.probs)))

    def expected_min(self, m: int) -> float:
        """E[min(L, m)]."""
        return float(sum(min(l, m) * p for l, p in enumerate(self.probs)))

    def cdf(self, l: int) -> float:
        """P(L <= l)."""
        if l < 0:
            return 0.0
        return float(min(1.0, sum(self.probs[:l + 1])))


@dataclass(frozen=True)
class RewardGapBounds:
    r_upper: float
    r_lower: float

    @property
    def ratio(self) -> float:
        """R_lower / R_upper; 1 when R_upper == 0 (beta * 0 <= 0 holds for every beta)."""
        if self.r_upper <= 0.0:
            return 1.0
        return self.r_lower / self.r_upper

    def to_dict(self) -> Dict[str, float]:
        return {"r_upper": self.r_upper, "r_lower": self.r_lower}


def _check_m(k: int, m: int):
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 1 <= m <= k:
        raise ValueError(f"m must satisfy 1 <= m <= k (k={k}), got m={m}")


def success_count_distribution(probs: Sequence[float]) -> SuccessCountDistribution:
    """Exact Poisson-binomial pmf of the number of good channels."""
    pmf = np.zeros(len(probs) + 1)
    pmf[0] = 1.0
    for i, p in enumerate(probs):
        if not (-PROB_TOL <= p <= 1.0 + PROB_TOL):
            raise ValueError(f"Success probability must lie in [0, 1], got {p}")
        p = min(max(float(p), 0.0), 1.0)
        # new[l] = (1-p) * old[l] + p * old[l-1]
        pmf[1:i + 2] = (1.0 - p) * pmf[1:i + 2] + p * pmf[0:i + 1]
        pmf[0] *= (1.0 - p)
    return SuccessCountDistribution(tuple(float(x) for x in pmf))


def sensed_reward(probs: Sequence[float], m: int) -> float:
    """E[min(L, m)] for the given sensed-channel probabilities."""
    _check_m(len(probs), m)
    return success_count_distribution(probs).expected_min(m)


def expected_reward(belief: BeliefState, action: Action, m: int) -> float:
    """
    Expected (k,m) reward of sensing `action` under `belief`.
    m == k gives sum(omega); m == 1 gives 1 - prod(1 - omega).
    """
    action.validate(belief.n)
    return sensed_reward([belief.omegas[c] for c in action.channels], m)


def reward_gap(omega_rest: Sequence[float], m: int) -> float:
    """
    E[R(1, rest)] - E[R(0, rest)] = P(L_rest <= m - 1).
    omega_rest holds the other k - 1 sensed probabilities.
    """
    _check_m(len(omega_rest) + 1, m)
    return success_count_distribution(omega_rest).cdf(m - 1)


def reward_gap_bounds(model: ChannelModel, k: int, m: int,
                      use_oracle: bool = False) -> RewardGapBounds:
    """
    R_upper / R_lower: max / min of reward_gap over the belief box [low, high]^(k-1).

    P(L <= m-1) is nonincreasing in every coordinate, so the max sits at the
    all-low corner and the min at the all-high corner. The grid search is kept
    as an oracle behind use_oracle.
    """
    _check_m(k, m)
    if use_oracle:
        return _grid_gap_bounds(model, k, m)
    low, high = model.box
    return RewardGapBounds(
        r_upper=reward_gap([low] * (k - 1), m),
        r_lower=reward_gap([high] * (k - 1), m),
    )


def _grid_gap_bounds(model: ChannelModel, k: int, m: int) -> RewardGapBounds:
    low, high = model.box
    axis = np.linspace(low, high, ORACLE_POINTS_PER_AXIS)
    best, worst = -np.inf, np.inf
    for point in product(axis, repeat=k - 1):
        gap = reward_gap(point, m)
        best = max(best, gap)
        worst = min(worst, gap)
    logger.debug(f"[Reward] Grid oracle over {len(axis) ** (k - 1)} points: ({best}, {worst})")
    return RewardGapBounds(r_upper=float(best), r_lower=float(worst))
