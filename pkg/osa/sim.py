"""
Monte Carlo Simulation
======================
Seeded simulation of N hidden two-state channels under a stepwise policy.

Per slot t: the policy picks k channels from the running belief, the sensed
true states are revealed, reward min(#good sensed, m) accrues, the belief is
updated (good -> p11, bad -> p01, unsensed -> tau) and the hidden states move
one Markov step.

Replications run in blocks of SIM_BLOCK_SIZE, vectorized with numpy. Block b
draws from default_rng([seed, b]), so results do not depend on worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from osa import config
from osa.model import BeliefState, ChannelModel
from osa.policy import PolicyKind, PolicySpec

logger = logging.getLogger(__name__)

Z_95 = 1.96
CALIBRATION_BUCKETS = 10


class InitialStateMode:
    SAMPLE = 'sample'      # channel i good with probability omega_i
    FIXED = 'fixed'


@dataclass(frozen=True)
class SimConfig:
    """
    beta == 1 switches to average-reward mode: the per-slot mean over slots
    after `burn_in` (default horizon // 10).
    """
    horizon: int
    beta: float
    replications: int
    seed: int
    initial_state_mode: str = InitialStateMode.SAMPLE
    initial_states: Optional[Tuple[int, ...]] = None
    burn_in: Optional[int] = None
    keep_per_replication: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"Simulation horizon must be >= 1, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"Replications must be >= 1, got {self.replications}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.initial_state_mode not in (InitialStateMode.SAMPLE, InitialStateMode.FIXED):
            raise ValueError(f"Unknown initial_state_mode '{self.initial_state_mode}'")
        if self.initial_state_mode == InitialStateMode.FIXED:
            if self.initial_states is None:
                raise ValueError("Fixed-state mode needs initial_states")
            if any(int(s) not in (0, 1) for s in self.initial_states):
                raise ValueError(f"Initial states must be 0/1, got {self.initial_states}")
        if self.burn_in is not None and not 0 <= self.burn_in < self.horizon:
            raise ValueError(f"burn_in must lie in [0, horizon), got {self.burn_in}")

    @property
    def average_mode(self) -> bool:
        return self.beta == 1.0

    @property
    def effective_burn_in(self) -> int:
        if not self.average_mode:
            return 0
        return self.horizon // 10 if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class SimResult:
    mean: float
    std_error: float
    ci95: Tuple[float, float]
    replications: int
    mode: str                                   # 'discounted' | 'average'
    per_replication: Optional[Tuple[float, ...]] = None

    def to_dict(self) -> Dict:
        data = {
            "mean": self.mean,
            "std_error": self.std_error,
            "ci95": list(self.ci95),
            "replications": self.replications,
            "mode": self.mode,
        }
        if self.per_replication is not None:
            data["per_replication"] = list(self.per_replication)
        return data


def sample_channel_step(state: int, model: ChannelModel, rng: np.random.Generator) -> int:
    """One Markov step of a single channel: 1 w.p. p11 from good, p01 from bad."""
    if state not in (0, 1):
        raise ValueError(f"Channel state must be 0 or 1, got {state}")
    p = model.p11 if state == 1 else model.p01
    return int(rng.random() < p)


# =============================================================================
# BLOCK RUNNER
# =============================================================================

def _choose(spec: PolicySpec, beliefs: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
    """(B, k) sensed channel indices for every replication in the block."""
    size, n = beliefs.shape
    if spec.kind == PolicyKind.FIXED and t == 1:
        return np.tile(np.asarray(spec.first_action.channels), (size, 1))
    if spec.kind == PolicyKind.RANDOM:
        return np.argsort(rng.random((size, n)), axis=1)[:, :spec.k]
    # stable sort keeps the lowest index first among ties
    return np.argsort(-beliefs, axis=1, kind='stable')[:, :spec.k]


def _run_block(model: ChannelModel, belief: BeliefState, spec: PolicySpec,
               cfg: SimConfig, block: int, size: int, calibrate: bool = False):
    rng = np.random.default_rng([cfg.seed, block])
    n = belief.n
    rows = np.arange(size)[:, None]
    beliefs = np.tile(np.asarray(belief.omegas, dtype=float), (size, 1))
    if cfg.initial_state_mode == InitialStateMode.FIXED:
        states = np.tile(np.asarray(cfg.initial_states, dtype=bool), (size, 1))
    else:
        states = rng.random((size, n)) < beliefs

    totals = np.zeros(size)
    burn_in = cfg.effective_burn_in
    counts = np.zeros(CALIBRATION_BUCKETS)
    belief_sums = np.zeros(CALIBRATION_BUCKETS)
    good_sums = np.zeros(CALIBRATION_BUCKETS)

    for t in range(1, cfg.horizon + 1):
        if calibrate:
            bucket = np.minimum((beliefs * CALIBRATION_BUCKETS).astype(int), CALIBRATION_BUCKETS - 1)
            counts += np.bincount(bucket.ravel(), minlength=CALIBRATION_BUCKETS)
            belief_sums += np.bincount(bucket.ravel(), weights=beliefs.ravel(), minlength=CALIBRATION_BUCKETS)
            good_sums += np.bincount(bucket.ravel(), weights=states.ravel().astype(float),
                                     minlength=CALIBRATION_BUCKETS)

        chosen = _choose(spec, beliefs, t, rng)
        observed = states[rows, chosen]
        reward = np.minimum(observed.sum(axis=1), spec.m)
        if cfg.average_mode:
            if t > burn_in:
                totals += reward
        else:
            totals += cfg.beta ** (t - 1) * reward

        beliefs = beliefs * model.p11 + (1.0 - beliefs) * model.p01
        beliefs[rows, chosen] = np.where(observed, model.p11, model.p01)
        draws = rng.random((size, n))
        states = np.where(states, draws < model.p11, draws < model.p01)

    if cfg.average_mode:
        totals /= (cfg.horizon - burn_in)
    return totals, (counts, belief_sums, good_sums)


def _blocks(replications: int):
    size = config.SIM_BLOCK_SIZE
    return [(b, min(size, replications - b * size)) for b in range(math.ceil(replications / size))]


def _check(model: ChannelModel, belief: BeliefState, spec: PolicySpec, cfg: SimConfig):
    if not spec.is_stepwise:
        raise ValueError("Exhaustive-optimal policy cannot be simulated; use a stepwise policy")
    if not 1 <= spec.m <= spec.k <= belief.n:
        raise ValueError(f"Need 1 <= m <= k <= N, got m={spec.m}, k={spec.k}, N={belief.n}")
    spec.bind(belief.n)
    if cfg.initial_state_mode == InitialStateMode.FIXED and len(cfg.initial_states) != belief.n:
        raise ValueError(
            f"initial_states has {len(cfg.initial_states)} entries but the belief has N={belief.n}"
        )


def _run_all(model, belief, spec, cfg, calibrate):
    blocks = _blocks(cfg.replications)
    with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:
        return list(pool.map(
            lambda bs: _run_block(model, belief, spec, cfg, bs[0], bs[1], calibrate), blocks
        ))


# =============================================================================
# PUBLIC API
# =============================================================================

def simulate(model: ChannelModel, belief: BeliefState, spec: PolicySpec,
             cfg: SimConfig) -> SimResult:
    """Estimate the discounted (or average) reward of a stepwise policy."""
    _check(model, belief, spec, cfg)
    logger.info(
        f"[Sim] {cfg.replications} replications x {cfg.horizon} slots, "
        f"{spec.kind.value} policy, seed={cfg.seed}"
    )
    parts = _run_all(model, belief, spec, cfg, calibrate=False)
    totals = np.concatenate([p[0] for p in parts])

    mean = float(totals.mean())
    std_error = float(totals.std(ddof=1) / math.sqrt(len(totals))) if len(totals) > 1 else 0.0
    result = SimResult(
        mean=mean,
        std_error=std_error,
        ci95=(mean - Z_95 * std_error, mean + Z_95 * std_error),
        replications=len(totals),
        mode='average' if cfg.average_mode else 'discounted',
        per_replication=tuple(float(x) for x in totals) if cfg.keep_per_replication else None,
    )
    logger.info(f"[Sim] mean {result.mean:.6f} +/- {result.std_error:.2e}")
    return result


def belief_calibration(model: ChannelModel, belief: BeliefState, spec: PolicySpec,
                       cfg: SimConfig) -> pd.DataFrame:
    """
    Empirical P(channel good) against the running belief, in 10 equal buckets
    over [0, 1]. Every (replication, slot, channel) triple contributes one sample.
    """
    _check(model, belief, spec, cfg)
    parts = _run_all(model, belief, spec, cfg, calibrate=True)
    counts = sum(p[1][0] for p in parts)
    belief_sums = sum(p[1][1] for p in parts)
    good_sums = sum(p[1][2] for p in parts)

    used = counts > 0
    frequency = np.where(used, good_sums / np.maximum(counts, 1), np.nan)
    mean_belief = np.where(used, belief_sums / np.maximum(counts, 1), np.nan)
    edges = np.linspace(0.0, 1.0, CALIBRATION_BUCKETS + 1)
    table = pd.DataFrame({
        "bucket_lo": edges[:-1],
        "bucket_hi": edges[1:],
        "count": counts.astype(int),
        "mean_belief": mean_belief,
        "frequency": frequency,
    })
    return table[table["count"] > 0].reset_index(drop=True)


def write_replications_csv(result: SimResult, path) -> Path:
    """Per-replication rewards as CSV (replication is 1-based)."""
    if result.per_replication is None:
        raise ValueError("SimResult has no per-replication values; set keep_per_replication")
    path = Path(path)
    frame = pd.DataFrame({
        "replication": np.arange(1, len(result.per_replication) + 1),
        "reward": result.per_replication,
    })
    try:
        frame.to_csv(path, index=False, float_format='%.10g')
    except OSError as e:
        raise OSError(f"Could not write replications CSV {path}: {e}") from e
    logger.info(f"[Sim] Wrote {len(frame)} replications to {path}")
    return path
