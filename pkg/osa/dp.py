"""
Belief-State Dynamic Programming
================================
Exact policy evaluation and exhaustive optimization over the belief state.

- evaluate_policy:          finite horizon, exact, memoized over grouped outcomes
- optimal_value:            finite horizon, exhaustive over all C(N,k) actions
- infinite_value_truncated: discounted infinite horizon, truncated at T with
                            tail bound m * beta^T / (1 - beta)
- deviation_audit:          search for a profitable one-step deviation from myopic
- evaluate_structured:      positional value that always senses the first k
                            list positions and reorders with advance_order

Channels are exchangeable, so stationary values depend only on the multiset
of beliefs. States are keyed by the belief tuple sorted nonincreasing (exact
float bit patterns, no quantization). Outcomes of one slot are grouped by the
number of good sensed channels: the next multiset depends only on that count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import comb

from osa import config
from osa.model import (
    Action, BeliefState, ChannelModel, SensingOutcome, outcome_probability, tau,
)
from osa.policy import OrderedBelief, PolicyKind, PolicySpec, advance_order, myopic_action
from osa.reward import sensed_reward, success_count_distribution

logger = logging.getLogger(__name__)

# Maximizing first actions are reported within this gap of the optimum
OPTIMAL_ACTION_TOL = 1e-9

# Slack added to the truncation error before a deviation counts as profitable
AUDIT_SLACK = 1e-9

State = Tuple[float, ...]
Branches = List[Tuple[float, State]]


class ScaleGuardError(RuntimeError):
    """Requested computation exceeds the configured desk-scale limits."""


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class HorizonSpec:
    """steps=None means infinite horizon (then 0 < beta < 1 and epsilon > 0)."""
    beta: float
    steps: Optional[int] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.steps is None:
            if not 0.0 < self.beta < 1.0:
                raise ValueError(
                    f"Infinite horizon needs 0 < beta < 1, got beta={self.beta} "
                    f"(beta = 1 is only allowed with a finite horizon)"
                )
            if self.epsilon is None or self.epsilon <= 0.0:
                raise ValueError(f"Infinite horizon needs epsilon > 0, got {self.epsilon}")
        else:
            if int(self.steps) < 1:
                raise ValueError(f"Finite horizon needs T >= 1, got {self.steps}")
            if not 0.0 <= self.beta <= 1.0:
                raise ValueError(f"Discount must lie in [0, 1], got {self.beta}")

    @classmethod
    def finite(cls, steps: int, beta: float) -> 'HorizonSpec':
        return cls(beta=beta, steps=int(steps))

    @classmethod
    def infinite(cls, beta: float, epsilon: float) -> 'HorizonSpec':
        return cls(beta=beta, epsilon=epsilon)

    @property
    def is_finite(self) -> bool:
        return self.steps is not None


@dataclass(frozen=True)
class ValueResult:
    value: float
    error_bound: float = 0.0
    first_actions: Tuple[Action, ...] = ()
    horizon_steps: int = 0

    def to_dict(self) -> Dict:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "first_actions": [a.to_user() for a in self.first_actions],
            "horizon_steps": self.horizon_steps,
        }


@dataclass(frozen=True)
class DeviationReport:
    profitable_found: bool
    witness_belief: Optional[BeliefState]
    witness_action: Optional[Action]
    gain: float
    beliefs_audited: int
    tolerance: float = 0.0
    horizon_steps: int = 0
    truncation_error: float = 0.0

    def to_dict(self) -> Dict:
        return {
            "profitable_found": self.profitable_found,
            "witness_belief": self.witness_belief.to_dict() if self.witness_belief else None,
            "witness_action": self.witness_action.to_user() if self.witness_action else None,
            "gain": self.gain,
            "beliefs_audited": self.beliefs_audited,
            "tolerance": self.tolerance,
            "horizon_steps": self.horizon_steps,
            "truncation_error": self.truncation_error,
        }


# =============================================================================
# ONE-SLOT KERNEL
# =============================================================================

def _canonical(values: Sequence[float]) -> State:
    return tuple(sorted(values, reverse=True))


class _Kernel:
    """Reward and grouped successor multisets for one sensing decision."""

    def __init__(self, model: ChannelModel, k: int, m: int):
        self.model = model
        self.k = k
        self.m = m

    def _propagate(self, values: Sequence[float]) -> List[float]:
        p11, p01 = self.model.p11, self.model.p01
        # same arithmetic as model.tau
        return [w * p11 + (1.0 - w) * p01 for w in values]

    def branches(self, sensed: State, rest: State) -> Tuple[float, Branches]:
        """
        sensed / rest must already be sorted nonincreasing so that every
        caller performs identical float arithmetic for identical multisets.
        """
        dist = success_count_distribution(sensed)
        reward = dist.expected_min(self.m)
        taus = self._propagate(rest)
        p11, p01 = self.model.p11, self.model.p01
        out = []
        for good, q in enumerate(dist.probs):
            if q <= 0.0:
                continue
            out.append((q, _canonical([p11] * good + [p01] * (self.k - good) + taus)))
        return reward, out

    def split(self, state: State, positions: Sequence[int]) -> Tuple[State, State]:
        chosen = set(positions)
        sensed = _canonical([state[i] for i in positions])
        rest = _canonical([w for i, w in enumerate(state) if i not in chosen])
        return sensed, rest

    def distinct_splits(self, state: State) -> List[Tuple[State, State]]:
        """Every sensing choice on a canonical state, deduplicated by value."""
        seen = {}
        for positions in combinations(range(len(state)), self.k):
            key = self.split(state, positions)
            seen.setdefault(key, None)
        return list(seen)


# =============================================================================
# FINITE HORIZON ENGINE
# =============================================================================

class ValueEngine:
    """
    Memoized finite-horizon values on canonical states.
    Tables are keyed on (steps remaining, state); transitions are deterministic
    given the outcome, so reuse is exact. Tables are filled from an explicit
    stack; depth does not grow with the horizon.
    """

    def __init__(self, model: ChannelModel, k: int, m: int, beta: float):
        self.kernel = _Kernel(model, k, m)
        self.beta = beta
        self._branches: Dict[Tuple[State, State], Tuple[float, Branches]] = {}
        self._myopic: Dict[Tuple[int, State], float] = {}
        self._random: Dict[Tuple[int, State], float] = {}
        self._optimal: Dict[Tuple[int, State], float] = {}
        self._tables = {'myopic': self._myopic, 'random': self._random, 'optimal': self._optimal}

    def _cached_branches(self, sensed: State, rest: State) -> Tuple[float, Branches]:
        key = (sensed, rest)
        if key not in self._branches:
            self._branches[key] = self.kernel.branches(sensed, rest)
        return self._branches[key]

    def _splits(self, tail: str, state: State) -> List[Tuple[State, State]]:
        k = self.kernel.k
        if tail == 'myopic':
            return [(state[:k], state[k:])]
        if tail == 'random':
            return [self.kernel.split(state, p) for p in combinations(range(len(state)), k)]
        return self.kernel.distinct_splits(state)

    def _combine(self, sensed: State, rest: State, steps: int, table: Dict) -> float:
        reward, branches = self._cached_branches(sensed, rest)
        if steps == 1:
            return reward
        future = 0.0
        for q, nxt in branches:
            future += q * table[(steps - 1, nxt)]
        return reward + self.beta * future

    def _solve(self, tail: str, state: State, steps: int) -> float:
        table = self._tables[tail]
        stack = [(steps, state)]
        while stack:
            key = stack[-1]
            if key in table:
                stack.pop()
                continue
            left, current = key
            splits = self._splits(tail, current)
            if left > 1:
                missing = [
                    (left - 1, nxt)
                    for sensed, rest in splits
                    for _, nxt in self._cached_branches(sensed, rest)[1]
                    if (left - 1, nxt) not in table
                ]
                if missing:
                    stack.extend(missing)
                    continue
            values = [self._combine(sensed, rest, left, table) for sensed, rest in splits]
            table[key] = max(values) if tail == 'optimal' else sum(values) / len(values)
            stack.pop()
        return table[(steps, state)]

    def action_value(self, sensed: State, rest: State, steps: int, tail: str) -> float:
        """Value of sensing `sensed` now and following `tail` for steps - 1 slots."""
        if tail not in self._tables:
            raise ValueError(f"Unknown tail rule '{tail}'")
        if steps > 1:
            for _, nxt in self._cached_branches(sensed, rest)[1]:
                self._solve(tail, nxt, steps - 1)
        return self._combine(sensed, rest, steps, self._tables[tail])

    def myopic(self, state: State, steps: int) -> float:
        return self._solve('myopic', state, steps)

    def random(self, state: State, steps: int) -> float:
        return self._solve('random', state, steps)

    def optimal(self, state: State, steps: int) -> float:
        return self._solve('optimal', state, steps)


def _root_split(belief: BeliefState, action: Action) -> Tuple[State, State]:
    """Sensed and unsensed belief values of an action on an arbitrary belief, canonicalized."""
    chosen = set(action.channels)
    sensed = _canonical([belief.omegas[c] for c in action.channels])
    rest = _canonical([w for i, w in enumerate(belief.omegas) if i not in chosen])
    return sensed, rest


def value_ceiling(m: int, beta: float, steps: Optional[int]) -> float:
    """Largest attainable value: m per slot, discounted; steps=None for infinite."""
    if steps is None:
        return m / (1.0 - beta)
    if beta >= 1.0:
        return float(m * steps)
    return m * (1.0 - beta ** steps) / (1.0 - beta)


def _check_instance(belief: BeliefState, k: int, m: int):
    if not 1 <= m <= k <= belief.n:
        raise ValueError(f"Need 1 <= m <= k <= N, got m={m}, k={k}, N={belief.n}")


def evaluate_policy(model: ChannelModel, belief: BeliefState, spec: PolicySpec,
                    horizon: HorizonSpec) -> ValueResult:
    """
    Exact expected discounted reward of a stepwise policy over T slots.
    Random policies are valued as the expectation over their own randomization.
    """
    if not horizon.is_finite:
        raise ValueError("evaluate_policy needs a finite horizon; use infinite_value_truncated")
    if not spec.is_stepwise:
        raise ValueError("Exhaustive-optimal policy is evaluated by optimal_value")
    _check_instance(belief, spec.k, spec.m)
    spec.bind(belief.n)

    engine = ValueEngine(model, spec.k, spec.m, horizon.beta)
    steps = horizon.steps
    if spec.kind == PolicyKind.FIXED:
        sensed, rest = _root_split(belief, spec.first_action)
        value = engine.action_value(sensed, rest, steps, 'myopic')
    elif spec.kind == PolicyKind.RANDOM:
        value = engine.random(_canonical(belief.omegas), steps)
    else:
        value = engine.myopic(_canonical(belief.omegas), steps)

    logger.debug(f"[DP] {spec.kind.value} value over T={steps}: {value:.10f}")
    return ValueResult(value=value, error_bound=0.0, horizon_steps=steps)


def optimal_value(model: ChannelModel, belief: BeliefState, k: int, m: int,
                  horizon: HorizonSpec, allow_large: bool = False) -> ValueResult:
    """Exact optimal value V_1 by exhaustive action enumeration at every node."""
    if not horizon.is_finite:
        raise ValueError("optimal_value needs a finite horizon")
    _check_instance(belief, k, m)
    branches_per_level = comb(belief.n, k, exact=True) * 2 ** k
    if not allow_large and (branches_per_level > config.MAX_ACTION_BRANCHES
                            or horizon.steps > config.MAX_EXACT_HORIZON):
        raise ScaleGuardError(
            f"Exhaustive DP with C({belief.n},{k})*2^{k}={branches_per_level} branches per level "
            f"and T={horizon.steps} exceeds the guard "
            f"({config.MAX_ACTION_BRANCHES} branches, T <= {config.MAX_EXACT_HORIZON})"
        )

    engine = ValueEngine(model, k, m, horizon.beta)
    scored = []
    for channels in combinations(range(belief.n), k):
        action = Action(channels)
        sensed, rest = _root_split(belief, action)
        scored.append((engine.action_value(sensed, rest, horizon.steps, 'optimal'), action))

    best = max(v for v, _ in scored)
    first_actions = tuple(a for v, a in scored if v >= best - OPTIMAL_ACTION_TOL)
    logger.info(
        f"[DP] Optimal value {best:.10f} over T={horizon.steps}; "
        f"maximizing first actions: {[a.to_user() for a in first_actions]}"
    )
    return ValueResult(value=best, error_bound=0.0, first_actions=first_actions,
                       horizon_steps=horizon.steps)


def evaluate_structured(model: ChannelModel, belief: BeliefState, k: int, m: int,
                        horizon: HorizonSpec) -> float:
    """
    Positional value W_1: sense the first k list positions every slot and
    reorder the list with advance_order. Equals the myopic value when the
    initial list is sorted and inside the regime box.
    """
    if not horizon.is_finite:
        raise ValueError("evaluate_structured needs a finite horizon")
    _check_instance(belief, k, m)
    if horizon.steps > config.MAX_EXACT_HORIZON:
        raise ScaleGuardError(
            f"Positional value expands every outcome path; T={horizon.steps} exceeds "
            f"the guard of {config.MAX_EXACT_HORIZON}"
        )
    first = Action(tuple(range(k)))

    def value(ordered: OrderedBelief, steps: int) -> float:
        current = BeliefState(ordered.values)
        total = sensed_reward(ordered.values[:k], m)
        if steps == 1:
            return total
        future = 0.0
        for bits in product((1, 0), repeat=k):
            outcome = SensingOutcome(bits)
            q = outcome_probability(current, first, outcome)
            if q > 0.0:
                future += q * value(advance_order(ordered, outcome, model), steps - 1)
        return total + horizon.beta * future

    start = OrderedBelief(belief.omegas, tuple(range(belief.n)))
    return value(start, horizon.steps)


# =============================================================================
# TRUNCATED INFINITE HORIZON
# =============================================================================

def truncation_steps(m: int, beta: float, epsilon: float) -> int:
    """Smallest T >= 1 with m * beta^T / (1 - beta) <= epsilon."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"Truncation needs 0 < beta < 1, got {beta}")
    if epsilon <= 0.0:
        raise ValueError(f"Truncation needs epsilon > 0, got {epsilon}")
    target = epsilon * (1.0 - beta) / m
    steps = max(1, math.ceil(math.log(target) / math.log(beta))) if target < 1.0 else 1
    while m * beta ** steps / (1.0 - beta) > epsilon:
        steps += 1
    while steps > 1 and m * beta ** (steps - 1) / (1.0 - beta) <= epsilon:
        steps -= 1
    return steps


def truncation_error(m: int, beta: float, steps: int) -> float:
    return m * beta ** steps / (1.0 - beta)


class ReachableChain:
    """
    Beliefs reachable under a stationary rule ('myopic' or 'random') within a
    given number of slots, with a sparse transition matrix for backward
    induction. States are expanded level by level; a state first met at level
    L is only read as V_{T-L}, so levels at or past T - 1 keep their reward and
    no successors.
    """

    def __init__(self, model: ChannelModel, k: int, m: int, beta: float, rule: str = 'myopic'):
        if rule not in ('myopic', 'random'):
            raise ValueError(f"Unknown stationary rule '{rule}'")
        self.kernel = _Kernel(model, k, m)
        self.beta = beta
        self.rule = rule
        self.index: Dict[State, int] = {}
        self._rewards: List[float] = []
        self._rows: List[int] = []
        self._cols: List[int] = []
        self._data: List[float] = []

    def _add(self, state: State, fresh: List[State]) -> int:
        if state not in self.index:
            if len(self.index) >= config.MAX_REACHABLE_STATES:
                raise ScaleGuardError(
                    f"Reachable belief set exceeds {config.MAX_REACHABLE_STATES} states "
                    f"(set OSA_MAX_STATES to raise the guard)"
                )
            self.index[state] = len(self.index)
            self._rewards.append(0.0)
            fresh.append(state)
        return self.index[state]

    def _expand(self, state: State, fresh: Optional[List[State]]):
        """Set the reward of `state`; with `fresh`, also record its successors."""
        row = self.index[state]
        k = self.kernel.k
        if self.rule == 'myopic':
            choices = [(state[:k], state[k:])]
        else:
            choices = [self.kernel.split(state, p) for p in combinations(range(len(state)), k)]
        weight = 1.0 / len(choices)
        reward = 0.0
        for sensed, rest in choices:
            r, branches = self.kernel.branches(sensed, rest)
            reward += weight * r
            if fresh is None:
                continue
            for q, nxt in branches:
                self._rows.append(row)
                self._cols.append(self._add(nxt, fresh))
                self._data.append(weight * q)
        self._rewards[row] = reward

    def explore(self, seeds: Sequence[State], steps: int,
                later: Sequence[State] = ()) -> 'ReachableChain':
        """
        Collect what V_steps of every seed needs. States in `later` are first
        read one slot after the seeds (as V_{steps-1}).
        """
        frontier: List[State] = []
        for state in seeds:
            self._add(state, frontier)
        queued: List[State] = []
        for state in later:
            self._add(state, queued)
        for level in range(steps):
            fresh: List[State] = []
            last = level >= steps - 1
            for state in frontier:
                self._expand(state, None if last else fresh)
            if level == 0:
                fresh.extend(queued)
            frontier = fresh
        logger.debug(f"[Chain] {len(self.index)} beliefs within {steps} slots under {self.rule}")
        return self

    def values(self, steps: int) -> Tuple[np.ndarray, np.ndarray]:
        """(V_T, V_{T-1}) for every explored state, with V_0 = 0."""
        size = len(self.index)
        matrix = sparse.csr_matrix((self._data, (self._rows, self._cols)), shape=(size, size))
        rewards = np.asarray(self._rewards)
        current = np.zeros(size)
        previous = current
        for _ in range(steps):
            previous, current = current, rewards + self.beta * (matrix @ current)
        return current, previous

    def __len__(self):
        return len(self.index)


def infinite_value_truncated(model: ChannelModel, belief: BeliefState, spec: PolicySpec,
                             beta: float, epsilon: float) -> ValueResult:
    """Discounted infinite-horizon value, truncated where the tail drops below epsilon."""
    HorizonSpec.infinite(beta, epsilon)
    if not spec.is_stepwise:
        raise ValueError("Exhaustive-optimal policy has no truncated infinite-horizon evaluation")
    _check_instance(belief, spec.k, spec.m)
    spec.bind(belief.n)

    steps = truncation_steps(spec.m, beta, epsilon)
    if steps > config.MAX_TRUNCATION_STEPS:
        raise ScaleGuardError(
            f"epsilon={epsilon} needs T={steps} slots, above the guard of {config.MAX_TRUNCATION_STEPS}"
        )
    rule = 'random' if spec.kind == PolicyKind.RANDOM else 'myopic'
    chain = ReachableChain(model, spec.k, spec.m, beta, rule)

    if spec.kind == PolicyKind.FIXED:
        sensed, rest = _root_split(belief, spec.first_action)
        reward, branches = chain.kernel.branches(sensed, rest)
        chain.explore([nxt for _, nxt in branches], steps - 1)
        _, previous = chain.values(steps)
        value = reward + beta * sum(q * previous[chain.index[nxt]] for q, nxt in branches)
    else:
        root = _canonical(belief.omegas)
        chain.explore([root], steps)
        current, _ = chain.values(steps)
        value = float(current[chain.index[root]])

    bound = truncation_error(spec.m, beta, steps)
    logger.info(
        f"[DP] Truncated infinite-horizon {spec.kind.value} value {value:.10f} "
        f"(T={steps}, {len(chain)} beliefs, tail <= {bound:.3e})"
    )
    return ValueResult(value=float(value), error_bound=bound, horizon_steps=steps)


# =============================================================================
# ONE-STEP DEVIATION AUDIT
# =============================================================================

def lattice_values(model: ChannelModel, depth: int) -> List[float]:
    """{p01, p11} and their tau-iterates up to `depth`, distinct, nonincreasing."""
    if depth < 0:
        raise ValueError(f"Lattice depth must be >= 0, got {depth}")
    values = set()
    for start in (model.p01, model.p11):
        w = start
        for _ in range(depth + 1):
            values.add(w)
            w = tau(w, model)
    return sorted(values, reverse=True)


def lattice_beliefs(model: ChannelModel, n: int, depth: int) -> List[BeliefState]:
    """Every N-channel multiset of lattice values, each listed nonincreasing."""
    return [BeliefState(c) for c in combinations_with_replacement(lattice_values(model, depth), n)]


@dataclass
class _Candidate:
    belief: BeliefState
    myopic: Tuple[State, State]
    deviations: List[Tuple[Action, State, State]] = field(default_factory=list)


def _candidates(belief: BeliefState, k: int) -> _Candidate:
    greedy = myopic_action(belief, k)
    myopic_key = _root_split(belief, greedy)
    candidate = _Candidate(belief, myopic_key)
    seen = {myopic_key}
    for channels in combinations(range(belief.n), k):
        action = Action(channels)
        key = _root_split(belief, action)
        if key in seen:
            continue
        seen.add(key)
        candidate.deviations.append((action, key[0], key[1]))
    return candidate


def _chunks(items: Sequence, parts: int) -> List[Sequence]:
    size = max(1, math.ceil(len(items) / max(1, parts)))
    return [items[i:i + size] for i in range(0, len(items), size)]


def deviation_audit(model: ChannelModel, n: int, k: int, m: int, beta: float,
                    epsilon: float = config.DEFAULT_AUDIT_EPSILON,
                    belief_grid_depth: int = config.DEFAULT_LATTICE_DEPTH,
                    horizon: Optional[int] = None,
                    beliefs: Optional[Sequence[BeliefState]] = None) -> DeviationReport:
    """
    Look for a profitable one-step deviation: one non-myopic action, then myopic.

    Infinite horizon (horizon=None): both values truncated at the same T; a gain
    counts only above 2 * tail bound + AUDIT_SLACK. Finite horizon (horizon=T):
    exact values, threshold AUDIT_SLACK.
    Candidate beliefs default to the tau-iterate lattice of {p01, p11}.
    """
    if not 1 <= m <= k <= n:
        raise ValueError(f"Need 1 <= m <= k <= N, got m={m}, k={k}, N={n}")
    if horizon is None:
        HorizonSpec.infinite(beta, epsilon)
    else:
        HorizonSpec.finite(horizon, beta)
    if beliefs is None:
        beliefs = lattice_beliefs(model, n, belief_grid_depth)
    beliefs = list(beliefs)
    for b in beliefs:
        if b.n != n:
            raise ValueError(f"Audit belief {b.omegas} does not have N={n} channels")

    workers = config.worker_count()
    logger.info(
        f"[Audit] {len(beliefs)} candidate beliefs, (N,k,m)=({n},{k},{m}), beta={beta}, "
        f"{'T=' + str(horizon) if horizon else 'infinite horizon'}, {workers} workers"
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        candidates = list(pool.map(lambda b: _candidates(b, k), beliefs))

    if horizon is None:
        steps = truncation_steps(m, beta, epsilon)
        if steps > config.MAX_TRUNCATION_STEPS:
            raise ScaleGuardError(
                f"epsilon={epsilon} needs T={steps} slots, above the guard of {config.MAX_TRUNCATION_STEPS}"
            )
        bound = truncation_error(m, beta, steps)
        tolerance = 2.0 * bound + AUDIT_SLACK
        chain = ReachableChain(model, k, m, beta, 'myopic')
        dev_branches = {}
        roots, successors = [], []
        for cand in candidates:
            roots.append(_canonical(cand.belief.omegas))
            for _, sensed, rest in cand.deviations:
                key = (sensed, rest)
                if key not in dev_branches:
                    dev_branches[key] = chain.kernel.branches(sensed, rest)
                    successors.extend(nxt for _, nxt in dev_branches[key][1])
        chain.explore(roots, steps, later=successors)
        current, previous = chain.values(steps)
        logger.info(f"[Audit] Backward induction over {len(chain)} beliefs, T={steps}")

        def myopic_value(cand: _Candidate) -> float:
            return float(current[chain.index[_canonical(cand.belief.omegas)]])

        def deviation_value(sensed: State, rest: State) -> float:
            reward, branches = dev_branches[(sensed, rest)]
            return reward + beta * sum(q * previous[chain.index[nxt]] for q, nxt in branches)

        def valuers():
            return myopic_value, deviation_value
    else:
        steps, bound = horizon, 0.0
        tolerance = AUDIT_SLACK

        def valuers():
            # one engine per chunk: memo tables are not shared across workers
            engine = ValueEngine(model, k, m, beta)

            def myopic_value(cand: _Candidate) -> float:
                return engine.myopic(_canonical(cand.belief.omegas), steps)

            def deviation_value(sensed: State, rest: State) -> float:
                return engine.action_value(sensed, rest, steps, 'myopic')

            return myopic_value, deviation_value

    def score(chunk: Sequence[_Candidate]):
        myopic_value, deviation_value = valuers()
        best = (-math.inf, None, None)
        for cand in chunk:
            base = myopic_value(cand)
            for action, sensed, rest in cand.deviations:
                gain = deviation_value(sensed, rest) - base
                if gain > best[0]:
                    best = (gain, cand.belief, action)
        return best

    with ThreadPoolExecutor(max_workers=workers) as pool:
        partial = list(pool.map(score, _chunks(candidates, workers)))

    best_gain, witness_belief, witness_action = -math.inf, None, None
    for gain, belief, action in partial:
        if gain > best_gain:
            best_gain, witness_belief, witness_action = gain, belief, action

    profitable = best_gain > tolerance
    if profitable:
        logger.info(
            f"[Audit] Profitable deviation {witness_action.to_user()} at "
            f"{witness_belief.omegas}: gain {best_gain:.3e} > {tolerance:.3e}"
        )
    else:
        logger.info(f"[Audit] No profitable deviation (best gain {best_gain:.3e}, tolerance {tolerance:.3e})")

    return DeviationReport(
        profitable_found=profitable,
        witness_belief=witness_belief if profitable else None,
        witness_action=witness_action if profitable else None,
        gain=best_gain if best_gain > -math.inf else 0.0,
        beliefs_audited=len(beliefs),
        tolerance=tolerance,
        horizon_steps=steps,
        truncation_error=bound,
    )
