"""Baseline scheduling policies sharing one decide(state) -> action interface.

Covers the comparison set: the solved optimal table, the structure-informed
table, max-age-first, max-error-first, round robin, randomized with budget
thinning, the myopic single-age baseline, and always-idle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .dynamics import JointState
from .mdp import ActionSet, PolicyTable, StateSpace, relative_value_iteration
from .model import SystemSpec, penalty_table

__all__ = [
    "Policy",
    "TablePolicy",
    "maf_decide",
    "MafPolicy",
    "mef_decide",
    "MefPolicy",
    "round_robin_decide",
    "RoundRobinPolicy",
    "randomized_decide",
    "RandomizedSchedule",
    "randomized_action_weights",
    "IdlePolicy",
    "MyopicModel",
    "build_myopic_policy",
    "MyopicPolicy",
    "policy_to_table",
    "round_robin_chain",
    "POLICY_NAMES",
]

POLICY_NAMES = ("optimal", "sisp", "maf", "mef", "rr", "rand", "myopic", "idle")


class Policy:
    """Decision interface used by the simulator.

    reset() is called at the start of every episode; stateful policies
    (cursor, private randomness) reinitialize there.
    """

    name = "policy"

    def reset(self, rng: Optional[np.random.Generator] = None) -> None:
        pass

    def decide(self, state: JointState) -> tuple:
        raise NotImplementedError


class TablePolicy(Policy):
    """Lookup policy over the full truncated state space."""

    def __init__(self, name: str, space: StateSpace, table: PolicyTable):
        self.name = name
        self.space = space
        self.table = table

    def decide(self, state: JointState) -> tuple:
        return self.table.action_of(self.space.encode(state))


def _top_m(scores: Sequence[float], m: int) -> tuple:
    """Schedule the m highest scores; ties go to the lowest sensor index."""
    n = len(scores)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    action = [0] * n
    for i in order[:m]:
        action[i] = 1
    return tuple(action)


def maf_decide(state: JointState, m: int) -> tuple:
    """Schedule the m sensors with the largest monitor-side age."""
    return _top_m([st.aori for st in state.sensors], m)


class MafPolicy(Policy):
    name = "maf"

    def __init__(self, m: int):
        self.m = m

    def decide(self, state: JointState) -> tuple:
        return maf_decide(state, self.m)


def mef_decide(state: JointState, m: int, spec: SystemSpec) -> tuple:
    """Schedule the m sensors with the largest current penalty."""
    scores = [
        spec.sensors[i].penalty(st.aori) for i, st in enumerate(state.sensors)
    ]
    return _top_m(scores, m)


class MefPolicy(Policy):
    name = "mef"

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.m = spec.m_budget
        self._tables = [
            penalty_table(s.penalty, s.max_aori) for s in spec.sensors
        ]

    def decide(self, state: JointState) -> tuple:
        scores = [self._tables[i][st.aori] for i, st in enumerate(state.sensors)]
        return _top_m(scores, self.m)


def round_robin_decide(cursor: int, n: int, m: int) -> tuple:
    """Schedule sensors cursor..cursor+m-1 (mod n); returns (action, next cursor)."""
    if not (0 <= cursor < n):
        raise ValueError(f"cursor must lie in [0, {n}), got {cursor}")
    action = [0] * n
    for k in range(m):
        action[(cursor + k) % n] = 1
    return tuple(action), (cursor + m) % n


class RoundRobinPolicy(Policy):
    name = "rr"

    def __init__(self, n: int, m: int):
        self.n = n
        self.m = m
        self.cursor = 0

    def reset(self, rng: Optional[np.random.Generator] = None) -> None:
        self.cursor = 0

    def decide(self, state: JointState) -> tuple:
        action, self.cursor = round_robin_decide(self.cursor, self.n, self.m)
        return action


def randomized_decide(p: Sequence[float], m: int, rng: np.random.Generator) -> tuple:
    """Independent Bernoulli(p_i) draws, thinned uniformly to at most m.

    One uniform per sensor in index order; when more than m fire, a uniformly
    random size-m subset of the fired sensors keeps its slot.
    """
    fired = [i for i, pi in enumerate(p) if rng.random() < pi]
    if len(fired) > m:
        keep = rng.choice(len(fired), size=m, replace=False)
        fired = [fired[k] for k in keep]
    action = [0] * len(p)
    for i in fired:
        action[i] = 1
    return tuple(action)


class RandomizedSchedule(Policy):
    name = "rand"

    def __init__(self, p: Sequence[float], m: int):
        self.p = tuple(p)
        self.m = m
        self._rng = None

    def reset(self, rng: Optional[np.random.Generator] = None) -> None:
        if rng is None:
            raise ValueError("randomized policy needs a random source at reset")
        self._rng = rng

    def decide(self, state: JointState) -> tuple:
        return randomized_decide(self.p, self.m, self._rng)


def randomized_action_weights(
    p: Sequence[float], m: int, actions: ActionSet
) -> np.ndarray:
    """Exact action distribution of the thinned randomized policy.

    Enumerates all 2^N fired subsets; over-budget subsets spread their
    probability uniformly across their size-m subsets. The result aligns
    with `actions` for mixture_chain_matrix.
    """
    n = len(p)
    weights = np.zeros(len(actions))
    for fired_mask in range(1 << n):
        fired = [i for i in range(n) if fired_mask >> i & 1]
        prob = 1.0
        for i in range(n):
            prob *= p[i] if (fired_mask >> i & 1) else 1.0 - p[i]
        if prob == 0.0:
            continue
        if len(fired) <= m:
            action = tuple(fired_mask >> i & 1 for i in range(n))
            weights[actions.index(action)] += prob
        else:
            subsets = list(itertools.combinations(fired, m))
            share = prob / len(subsets)
            for subset in subsets:
                action = tuple(1 if i in subset else 0 for i in range(n))
                weights[actions.index(action)] += share
    return weights


class IdlePolicy(Policy):
    name = "idle"

    def __init__(self, n: int):
        self.action = tuple(0 for _ in range(n))

    def decide(self, state: JointState) -> tuple:
        return self.action


class _ReducedSpace:
    """Codec over (aori_1..N, theta) for the myopic baseline."""

    def __init__(self, r_sizes: Sequence[int]):
        self.r_sizes = list(r_sizes)
        self.n_states = 2 * int(np.prod(self.r_sizes))

    def encode(self, aoris: Sequence[int], theta: int) -> int:
        idx = 0
        for size, aori in zip(self.r_sizes, aoris):
            idx = idx * size + (aori - 1)
        return idx * 2 + theta

    def decode(self, idx: int) -> tuple:
        theta = idx % 2
        rest = idx // 2
        aoris = [0] * len(self.r_sizes)
        for i in range(len(self.r_sizes) - 1, -1, -1):
            aoris[i] = rest % self.r_sizes[i] + 1
            rest //= self.r_sizes[i]
        return tuple(aoris), theta


@dataclass
class MyopicModel:
    space: _ReducedSpace
    table: PolicyTable
    gain: float


def build_myopic_policy(
    spec: SystemSpec, epsilon: float = 1e-9, max_iter: int = 100000
) -> MyopicModel:
    """Solve the single-age generate-at-will model on (aori, theta) only.

    A successful delivery is assumed to reset the monitor age to one, i.e.
    the buffer always holds fresh data. The resulting table deliberately
    ignores buffer staleness; evaluating it under the true dual-age dynamics
    quantifies that model mismatch.
    """
    space = _ReducedSpace([s.max_aori for s in spec.sensors])
    actions = ActionSet(spec.n_sensors, spec.m_budget)
    n = space.n_states
    cost = np.zeros(n)
    tables = [penalty_table(s.penalty, s.max_aori) for s in spec.sensors]
    for idx in range(n):
        aoris, _ = space.decode(idx)
        cost[idx] = sum(tables[i][aoris[i]] for i in range(spec.n_sensors))
    kernels = []
    omega = spec.channel.omega()
    for action in actions.actions:
        rows, cols, vals = [], [], []
        for idx in range(n):
            aoris, theta = space.decode(idx)
            per_sensor = []
            for i, s in enumerate(spec.sensors):
                aged = min(aoris[i] + 1, s.max_aori)
                if action[i]:
                    p = s.success_prob(theta)
                    entries = {}
                    entries[1] = entries.get(1, 0.0) + p
                    entries[aged] = entries.get(aged, 0.0) + (1.0 - p)
                    per_sensor.append(list(entries.items()))
                else:
                    per_sensor.append([(aged, 1.0)])
            for theta_next in (0, 1):
                ch = omega[theta, theta_next]
                for combo in itertools.product(*per_sensor):
                    prob = ch
                    new_aoris = []
                    for aori2, pr in combo:
                        prob *= pr
                        new_aoris.append(aori2)
                    rows.append(idx)
                    cols.append(space.encode(new_aoris, theta_next))
                    vals.append(prob)
        mat = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        kernels.append(mat)
    ref = space.encode([1] * spec.n_sensors, 0)
    vt, pt = relative_value_iteration(kernels, cost, ref, epsilon, max_iter, actions)
    return MyopicModel(space, pt, vt.gain)


class MyopicPolicy(Policy):
    name = "myopic"

    def __init__(self, model: MyopicModel):
        self.model = model

    def decide(self, state: JointState) -> tuple:
        idx = self.model.space.encode([st.aori for st in state.sensors], state.theta)
        return self.model.table.action_of(idx)


def policy_to_table(policy: Policy, space: StateSpace, actions: ActionSet) -> PolicyTable:
    """Tabulate a stateless decision rule over the full truncated space.

    Only valid for policies whose decision is a pure function of the state
    (not round robin, not randomized).
    """
    table = np.empty(space.n_states, dtype=np.int64)
    for idx in range(space.n_states):
        table[idx] = actions.index(policy.decide(space.decode(idx)))
    return PolicyTable(table, actions)


def round_robin_chain(
    space: StateSpace, kernels: Sequence, cost: np.ndarray, n: int, m: int
) -> tuple:
    """Chain of round robin on the state space augmented with the cursor.

    The cursor advances by m (mod n) every slot independent of the state, so
    the augmented pair (state, cursor) is Markov. Returns (P, cost, start)
    over n_states * n_cursors augmented states, cursor-major blocks.
    """
    ns = space.n_states
    actions = ActionSet(n, m)
    blocks = []
    for cursor in range(n):
        action, nxt = round_robin_decide(cursor, n, m)
        row = [None] * n
        row[nxt] = kernels[actions.index(action)]
        blocks.append(row)
    p_aug = sparse.bmat(blocks, format="csr")
    cost_aug = np.tile(cost, n)
    return p_aug, cost_aug, space.reference_index()  # cursor 0 block comes first
