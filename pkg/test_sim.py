"""
Monte Carlo simulation: determinism, closed forms, agreement with exact DP,
belief calibration.

Usage:
    pytest test_sim.py
"""

import numpy as np
import pandas as pd
import pytest

from osa.dp import HorizonSpec, evaluate_policy, infinite_value_truncated
from osa.model import Action, BeliefState, ChannelModel, steady_state_belief
from osa.policy import PolicySpec
from osa.sim import (
    InitialStateMode, SimConfig, belief_calibration, sample_channel_step, simulate,
    write_replications_csv,
)


def test_channel_step_deterministic_rows():
    rng = np.random.default_rng(0)
    always_good = ChannelModel(p11=1.0, p01=0.5)
    never_good = ChannelModel(p11=0.5, p01=0.0)
    assert all(sample_channel_step(1, always_good, rng) == 1 for _ in range(200))
    assert all(sample_channel_step(0, never_good, rng) == 0 for _ in range(200))
    with pytest.raises(ValueError):
        sample_channel_step(2, always_good, rng)


def test_channel_step_frequency():
    rng = np.random.default_rng(1)
    model = ChannelModel(p11=0.7, p01=0.2)
    draws = [sample_channel_step(1, model, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - 0.7) <= 0.01


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(horizon=0, beta=0.9, replications=10, seed=1)
    with pytest.raises(ValueError):
        SimConfig(horizon=5, beta=0.9, replications=0, seed=1)
    with pytest.raises(ValueError):
        SimConfig(horizon=5, beta=0.9, replications=10, seed=1,
                  initial_state_mode=InitialStateMode.FIXED)
    with pytest.raises(ValueError):
        SimConfig(horizon=5, beta=1.0, replications=10, seed=1, burn_in=5)


def test_fixed_states_length_mismatch():
    cfg = SimConfig(horizon=5, beta=0.9, replications=10, seed=1,
                    initial_state_mode=InitialStateMode.FIXED, initial_states=(1, 0))
    with pytest.raises(ValueError):
        simulate(ChannelModel(p11=0.8, p01=0.2), BeliefState((0.5, 0.5, 0.5)),
                 PolicySpec.myopic(1, 1), cfg)


def test_always_good_channels_have_zero_variance():
    model = ChannelModel(p11=1.0, p01=1.0)
    cfg = SimConfig(horizon=6, beta=0.8, replications=500, seed=3)
    result = simulate(model, BeliefState((1.0,) * 4), PolicySpec.myopic(3, 2), cfg)
    assert result.mean == pytest.approx(2 * (1 - 0.8 ** 6) / 0.2)
    assert result.std_error == 0.0
    assert result.ci95 == (result.mean, result.mean)


def test_fixed_initial_states():
    model = ChannelModel(p11=1.0, p01=0.0)
    cfg = SimConfig(horizon=3, beta=0.5, replications=50, seed=3,
                    initial_state_mode=InitialStateMode.FIXED, initial_states=(1, 0, 0))
    result = simulate(model, BeliefState((0.9, 0.5, 0.1)), PolicySpec.myopic(1, 1), cfg)
    # channel 1 stays good and is always sensed
    assert result.mean == pytest.approx(1 + 0.5 + 0.25)


def test_average_mode_iid_channels():
    p = 0.4
    model = ChannelModel(p11=p, p01=p)
    cfg = SimConfig(horizon=200, beta=1.0, replications=2000, seed=5)
    result = simulate(model, steady_state_belief(model, 4), PolicySpec.myopic(2, 1), cfg)
    expected = 1 - (1 - p) ** 2
    assert result.mode == 'average'
    assert abs(result.mean - expected) <= 4 * result.std_error


def test_counterexample_simulation():
    model = ChannelModel(p11=0.9, p01=0.1)
    belief = BeliefState((0.99, 0.95, 0.9, 0.9, 0.9))
    cfg = SimConfig(horizon=5, beta=0.8, replications=200_000, seed=11)
    result = simulate(model, belief, PolicySpec.myopic(2, 1), cfg)
    assert abs(result.mean - 3.3279) <= 4 * result.std_error + 5e-5


def test_agreement_with_exact_values():
    rng = np.random.default_rng(12)
    for i in range(20):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n + 1))
        m = int(rng.integers(1, k + 1))
        model = ChannelModel(p11=rng.uniform(), p01=rng.uniform())
        belief = BeliefState(tuple(rng.uniform(size=n)))
        steps = int(rng.integers(1, 6))
        beta = float(rng.uniform(0.3, 1.0))
        spec = PolicySpec.myopic(k, m) if i % 2 else PolicySpec.random(k, m, seed=i)
        exact = evaluate_policy(model, belief, spec, HorizonSpec.finite(steps, beta)).value
        cfg = SimConfig(horizon=steps, beta=beta, replications=100_000, seed=100 + i)
        result = simulate(model, belief, spec, cfg)
        assert abs(result.mean - exact) <= 4 * result.std_error + 1e-12


def test_truncated_infinite_value_at_fixed_point():
    model = ChannelModel(p11=0.6, p01=0.4)
    belief = steady_state_belief(model, 3)
    spec = PolicySpec.myopic(1, 1)
    exact = infinite_value_truncated(model, belief, spec, 0.5, 1e-8)
    # 40 slots leave a tail below 1e-11
    result = simulate(model, belief, spec, SimConfig(horizon=40, beta=0.5, replications=100_000, seed=17))
    assert abs(result.mean - exact.value) <= 4 * result.std_error + 1e-8


def test_fixed_first_action_agreement():
    model = ChannelModel(p11=0.9, p01=0.1)
    belief = BeliefState((0.99, 0.95, 0.9, 0.9, 0.9))
    spec = PolicySpec.fixed_then_myopic(Action.from_user([1, 3]), 1)
    exact = evaluate_policy(model, belief, spec, HorizonSpec.finite(5, 0.8)).value
    result = simulate(model, belief, spec, SimConfig(horizon=5, beta=0.8, replications=100_000, seed=13))
    assert abs(result.mean - exact) <= 4 * result.std_error


def test_bit_identical_across_worker_counts(monkeypatch):
    model = ChannelModel(p11=0.8, p01=0.3)
    belief = BeliefState((0.6, 0.5, 0.4, 0.3))
    cfg = SimConfig(horizon=10, beta=0.9, replications=10_000, seed=99, keep_per_replication=True)
    monkeypatch.setattr('osa.config.SIM_BLOCK_SIZE', 1000)
    monkeypatch.setenv('OSA_THREADS', '1')
    serial = simulate(model, belief, PolicySpec.random(2, 1, seed=4), cfg)
    monkeypatch.setenv('OSA_THREADS', '4')
    parallel = simulate(model, belief, PolicySpec.random(2, 1, seed=4), cfg)
    assert serial == parallel
    other = simulate(model, belief, PolicySpec.random(2, 1, seed=4),
                     SimConfig(horizon=10, beta=0.9, replications=10_000, seed=100))
    assert other.mean != serial.mean


def test_belief_calibration():
    model = ChannelModel(p11=0.85, p01=0.2)
    cfg = SimConfig(horizon=30, beta=0.9, replications=20_000, seed=7)
    table = belief_calibration(model, steady_state_belief(model, 4), PolicySpec.myopic(2, 1), cfg)
    assert list(table.columns) == ['bucket_lo', 'bucket_hi', 'count', 'mean_belief', 'frequency']
    busy = table[table['count'] >= 50_000]
    assert len(busy) >= 3
    assert (busy['frequency'] - busy['mean_belief']).abs().max() < 0.02


def test_replications_csv(tmp_path):
    model = ChannelModel(p11=0.8, p01=0.3)
    cfg = SimConfig(horizon=4, beta=0.9, replications=25, seed=1, keep_per_replication=True)
    result = simulate(model, BeliefState((0.5, 0.5, 0.5)), PolicySpec.myopic(1, 1), cfg)
    path = write_replications_csv(result, tmp_path / "reps.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['replication', 'reward']
    assert len(frame) == 25
    assert frame['reward'].mean() == pytest.approx(result.mean, abs=1e-8)
    assert result.to_dict()["per_replication"] == list(result.per_replication)
