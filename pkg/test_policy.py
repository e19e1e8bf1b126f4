"""
Policy descriptors, myopic rule and ordering-list updates.

Usage:
    pytest test_policy.py
"""

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from osa.model import Action, BeliefState, ChannelModel, SensingOutcome, transition_belief
from osa.policy import (
    OrderedBelief, PolicyKind, PolicySpec, advance_order, myopic_action,
    parse_action, policy_action,
)
from osa.reward import expected_reward


@st.composite
def in_box_instance(draw, regime):
    a = draw(st.floats(0.0, 1.0))
    b = draw(st.floats(0.0, 1.0))
    low, high = min(a, b), max(a, b)
    model = ChannelModel(p11=high, p01=low) if regime == 'positive' else ChannelModel(p11=low, p01=high)
    n = draw(st.integers(2, 6))
    omegas = draw(st.lists(st.floats(low, high), min_size=n, max_size=n))
    k = draw(st.integers(1, n))
    bits = draw(st.lists(st.integers(0, 1), min_size=k, max_size=k))
    return model, tuple(sorted(omegas, reverse=True)), k, SensingOutcome(tuple(bits))


def test_myopic_picks_largest():
    belief = BeliefState((0.2, 0.9, 0.5, 0.7))
    assert myopic_action(belief, 2).channels == (1, 3)
    assert myopic_action(belief, 1).channels == (1,)


def test_myopic_ties_go_to_lowest_index():
    assert myopic_action(BeliefState((0.5, 0.5, 0.5)), 2).channels == (0, 1)
    assert myopic_action(BeliefState((0.3, 0.6, 0.6, 0.6)), 2).channels == (1, 2)


def test_spec_validation():
    with pytest.raises(ValueError):
        PolicySpec(PolicyKind.FIXED, 2, 1)
    with pytest.raises(ValueError):
        PolicySpec(PolicyKind.RANDOM, 2, 1)
    with pytest.raises(ValueError):
        PolicySpec.myopic(2, 3)
    with pytest.raises(ValueError):
        PolicySpec(PolicyKind.FIXED, 2, 1, first_action=Action((0,)))
    with pytest.raises(ValueError):
        PolicySpec.myopic(3, 1).bind(2)


def test_spec_json_shape():
    spec = PolicySpec.fixed_then_myopic(Action.from_user([1, 3]), 1)
    data = spec.to_dict()
    assert data == {"kind": "fixed", "k": 2, "m": 1, "first_action": [1, 3]}
    assert PolicySpec.from_dict(data) == spec
    assert PolicySpec.random(2, 1, seed=5).to_dict()["seed"] == 5


def test_policy_action_fixed_then_myopic():
    belief = BeliefState((0.99, 0.95, 0.9, 0.9, 0.9))
    spec = PolicySpec.fixed_then_myopic(Action.from_user([1, 3]), 1)
    assert policy_action(spec, belief, 1).to_user() == [1, 3]
    assert policy_action(spec, belief, 2).to_user() == [1, 2]


def test_random_policy_reproducible():
    belief = BeliefState((0.1, 0.2, 0.3, 0.4, 0.5))
    spec = PolicySpec.random(2, 1, seed=42)
    first = [policy_action(spec, belief, t) for t in range(1, 20)]
    again = [policy_action(spec, belief, t) for t in range(1, 20)]
    assert first == again
    assert all(a.k == 2 for a in first)
    assert len(set(first)) > 1
    rng = np.random.default_rng(3)
    assert policy_action(spec, belief, 1, rng=rng).k == 2


def test_optimal_has_no_stepwise_rule():
    with pytest.raises(ValueError):
        policy_action(PolicySpec(PolicyKind.OPTIMAL, 1, 1), BeliefState((0.5, 0.5)), 1)


def test_parse_action():
    assert parse_action("1,3").channels == (0, 2)
    assert parse_action(" 3 , 2 ").channels == (1, 2)
    with pytest.raises(ValueError):
        parse_action("a,b")


@given(st.sampled_from(['positive', 'negative']).flatmap(in_box_instance))
@settings(max_examples=300)
def test_advance_order_keeps_list_sorted(instance):
    model, omegas, k, outcome = instance
    ordered = OrderedBelief(omegas, tuple(range(len(omegas))))
    values = advance_order(ordered, outcome, model).values
    # tau is monotone; allow one rounding step between neighbours
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


@given(st.sampled_from(['positive', 'negative']).flatmap(in_box_instance))
@settings(max_examples=300)
def test_advance_order_matches_belief_update(instance):
    model, omegas, k, outcome = instance
    belief = BeliefState(omegas)
    ordered = OrderedBelief.from_belief(belief)
    assert ordered.perm == tuple(range(len(omegas)))
    moved = advance_order(ordered, outcome, model).to_belief()
    expected = transition_belief(belief, Action(tuple(range(k))), outcome, model)
    assert moved.omegas == expected.omegas
    # sensing the front of the reordered list is the myopic choice (up to ties)
    front = advance_order(ordered, outcome, model).first_k(k)
    greedy = myopic_action(expected, k)
    front_values = sorted(expected.omegas[c] for c in front.channels)
    greedy_values = sorted(expected.omegas[c] for c in greedy.channels)
    assert front_values == pytest.approx(greedy_values, abs=1e-12)


def test_advance_order_worked_positive():
    model = ChannelModel(p11=0.8, p01=0.2)
    ordered = OrderedBelief((0.7, 0.6, 0.5, 0.4), (0, 1, 2, 3))
    moved = advance_order(ordered, SensingOutcome((1, 0)), model)
    assert moved.values == pytest.approx((0.8, 0.5, 0.44, 0.2), abs=1e-12)
    assert moved.perm == (0, 2, 3, 1)


def test_advance_order_worked_negative():
    model = ChannelModel(p11=0.2, p01=0.8)
    ordered = OrderedBelief((0.7, 0.6, 0.5, 0.4), (0, 1, 2, 3))
    moved = advance_order(ordered, SensingOutcome((1, 0)), model)
    assert moved.values == pytest.approx((0.8, 0.56, 0.5, 0.2), abs=1e-12)
    assert moved.perm == (1, 3, 2, 0)


def test_myopic_maximizes_one_slot_reward():
    rng = np.random.default_rng(21)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, min(n, 4) + 1))
        m = int(rng.integers(1, k + 1))
        belief = BeliefState(tuple(rng.uniform(size=n)))
        best = max(expected_reward(belief, Action(c), m) for c in combinations(range(n), k))
        assert expected_reward(belief, myopic_action(belief, k), m) >= best - 1e-12


def test_first_k_is_myopic_on_sorted_list():
    belief = BeliefState((0.3, 0.8, 0.6))
    ordered = OrderedBelief.from_belief(belief)
    assert ordered.first_k(2) == myopic_action(belief, 2)
