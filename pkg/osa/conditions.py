"""
Sufficient Conditions for Myopic Optimality
===========================================
Finite / infinite horizon checks for positively and negatively correlated
channels, plus the value-sensitivity bound sequences behind them.

| regime   | finite horizon                 | infinite horizon                     |
|----------|--------------------------------|--------------------------------------|
| positive | beta <= R_lo / R_up            | delta / (1 - delta) <  R_lo / R_up   |
| negative | beta <= R_lo / (R_lo + R_up)   | min(delta, 1/(2(1-delta))) <= R_lo / R_up |

k >= N - 1 makes every cell hold unconditionally.
The conditions certify optimality only for beliefs inside the regime box.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

from osa.model import ChannelModel, Regime
from osa.reward import RewardGapBounds, reward_gap_bounds

logger = logging.getLogger(__name__)

BELIEF_DOMAIN_NOTE = (
    "Guarantee applies to beliefs with every omega_i between p01 and p11; "
    "other initial beliefs are covered from slot 2 onward."
)


@dataclass(frozen=True)
class ConditionReport:
    regime: str
    horizon: str                    # 'finite' | 'infinite'
    p11: float
    p01: float
    n: int
    k: int
    m: int
    r_upper: float
    r_lower: float
    threshold: float
    lhs: float
    satisfied: bool
    unconditional: bool
    belief_domain_note: str = BELIEF_DOMAIN_NOTE
    beta: Optional[float] = None
    gamma: Optional[float] = None
    table_variant_satisfied: Optional[bool] = None
    diagnostic: Optional[str] = None

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundSequence:
    """
    Per-slot sensitivity bounds for t = 1..T (index 0 is t = 1).

    positive: deltas (Delta_t) and delta_inf.
    negative: eta, lower / upper in the closed form, their T -> infinity limits,
              and lower_complete / upper_complete from the per-coordinate
              recursion (valid for sensed and unsensed coordinates alike).
    """
    regime: str
    horizon: int
    r_upper: float
    r_lower: float
    beta_delta: float
    deltas: Optional[List[float]] = None
    delta_inf: Optional[float] = None
    eta: Optional[float] = None
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    lower_inf: Optional[float] = None
    upper_inf: Optional[float] = None
    lower_complete: Optional[List[float]] = None
    upper_complete: Optional[List[float]] = None

    def to_dict(self) -> Dict:
        return asdict(self)


def _validate(model: ChannelModel, k: int, m: int, n: int):
    if not 1 <= m <= k <= n:
        raise ValueError(f"Need 1 <= m <= k <= N, got m={m}, k={k}, N={n}")


def _unconditional(k: int, n: int) -> bool:
    return k >= n - 1


# =============================================================================
# FINITE HORIZON
# =============================================================================

def finite_condition(model: ChannelModel, k: int, m: int, n: int, beta: float) -> ConditionReport:
    """Discount-factor condition for the T-slot problem."""
    _validate(model, k, m, n)
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")

    bounds = reward_gap_bounds(model, k, m)
    if model.regime == Regime.POSITIVE:
        threshold = bounds.ratio
    else:
        total = bounds.r_lower + bounds.r_upper
        threshold = bounds.r_lower / total if total > 0.0 else 1.0

    unconditional = _unconditional(k, n)
    gamma = bounds.r_upper / (1.0 - beta) if beta < 1.0 else None
    return ConditionReport(
        regime=model.regime.value,
        horizon='finite',
        p11=model.p11, p01=model.p01, n=n, k=k, m=m,
        r_upper=bounds.r_upper,
        r_lower=bounds.r_lower,
        threshold=threshold,
        lhs=beta,
        satisfied=unconditional or beta <= threshold,
        unconditional=unconditional,
        beta=beta,
        gamma=gamma,
    )


# =============================================================================
# INFINITE HORIZON
# =============================================================================

def infinite_condition(model: ChannelModel, k: int, m: int, n: int) -> ConditionReport:
    """Condition on (p11, p01) that holds for every 0 < beta < 1."""
    _validate(model, k, m, n)
    bounds = reward_gap_bounds(model, k, m)
    ratio = bounds.ratio
    delta = model.delta
    unconditional = _unconditional(k, n)
    diagnostic = None
    table_variant = None

    if model.regime == Regime.POSITIVE:
        if delta >= 1.0:
            lhs = math.inf
            holds = False
            diagnostic = "delta = 1: delta / (1 - delta) is undefined"
        else:
            lhs = delta / (1.0 - delta)
            holds = lhs < ratio
    else:
        lhs = min(delta, 1.0 / (2.0 * (1.0 - delta))) if delta < 1.0 else delta
        holds = lhs <= ratio
        # summary-table form compares against the inverse ratio
        inverse = bounds.r_upper / bounds.r_lower if bounds.r_lower > 0.0 else math.inf
        table_variant = unconditional or lhs <= inverse

    if unconditional and diagnostic:
        diagnostic += "; k >= N-1 makes the condition unconditional"

    return ConditionReport(
        regime=model.regime.value,
        horizon='infinite',
        p11=model.p11, p01=model.p01, n=n, k=k, m=m,
        r_upper=bounds.r_upper,
        r_lower=bounds.r_lower,
        threshold=ratio,
        lhs=lhs,
        satisfied=unconditional or holds,
        unconditional=unconditional,
        table_variant_satisfied=table_variant,
        diagnostic=diagnostic,
    )


# =============================================================================
# BOUND SEQUENCES
# =============================================================================

def _even_power_sum(a: float, exponent: int) -> float:
    """(1 - a^exponent) / (1 - a^2), continuous at a = 1."""
    if abs(1.0 - a * a) < 1e-15:
        return exponent / 2.0
    return (1.0 - a ** exponent) / (1.0 - a * a)


def delta_bounds(model: ChannelModel, k: int, m: int, beta: float, horizon: int) -> BoundSequence:
    """
    Sensitivity of the myopic value to one belief coordinate:
    (x - y) * lower_t <= W_t(..x..) - W_t(..y..) <= (x - y) * upper_t.
    """
    if not 1 <= m <= k:
        raise ValueError(f"Need 1 <= m <= k, got m={m}, k={k}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if horizon < 1:
        raise ValueError(f"Horizon must be >= 1, got {horizon}")

    bounds: RewardGapBounds = reward_gap_bounds(model, k, m)
    r_up, r_lo = bounds.r_upper, bounds.r_lower
    a = beta * model.delta

    if model.regime == Regime.POSITIVE:
        deltas = [0.0] * horizon
        deltas[-1] = r_up
        for t in range(horizon - 2, -1, -1):
            deltas[t] = r_up + a * deltas[t + 1]
        delta_inf = r_up / (1.0 - a) if a < 1.0 else math.inf
        if math.isinf(delta_inf):
            logger.warning("[Bounds] beta * delta = 1: Delta_inf is unbounded")
        return BoundSequence(
            regime=model.regime.value, horizon=horizon,
            r_upper=r_up, r_lower=r_lo, beta_delta=a,
            deltas=deltas, delta_inf=delta_inf,
        )

    eta = r_lo - a * r_up
    lower, upper = [], []
    for t in range(1, horizon + 1):
        if eta < 0.0:
            scale = _even_power_sum(a, horizon - t + 3)
            lower.append(scale * eta)
            upper.append(r_up - scale * eta)
        else:
            lower.append(0.0)
            upper.append(r_up)

    if a >= 1.0:
        lower_inf = -math.inf if eta < 0.0 else 0.0
        upper_inf = math.inf if eta < 0.0 else r_up
    else:
        lower_inf = min(eta / (1.0 - a * a), 0.0)
        upper_inf = max(r_up - a * eta / (1.0 - a * a), r_up)

    # per-coordinate recursion: sensed slope in [R_lo, R_up] + beta*(p11-p01)*slope',
    # unsensed slope beta*(p11-p01)*slope'
    lower_c = [0.0] * horizon
    upper_c = [0.0] * horizon
    upper_c[-1] = r_up
    for t in range(horizon - 2, -1, -1):
        lower_c[t] = -a * upper_c[t + 1]
        upper_c[t] = r_up - a * lower_c[t + 1]

    return BoundSequence(
        regime=model.regime.value, horizon=horizon,
        r_upper=r_up, r_lower=r_lo, beta_delta=a,
        eta=eta, lower=lower, upper=upper,
        lower_inf=lower_inf, upper_inf=upper_inf,
        lower_complete=lower_c, upper_complete=upper_c,
    )
