"""Low-complexity scheduling through per-sensor value decomposition.

Under a policy that schedules sensor i independently with probability
p_i, the joint value function splits into per-sensor value functions, each
solvable on the small (aoli, aori, channel) space. The structure-informed
policy then takes, in every joint state, the action minimizing the stage
cost plus the expected sum of those per-sensor values; its scheduling rule
is a channel-dependent threshold in each sensor's monitor-side age, which a
pruned table construction exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import JointState, SensorState
from .mdp import (
    ActionSet,
    PolicyTable,
    StateSpace,
    build_kernels,
    cost_vector,
    mixture_chain_matrix,
    relative_value_iteration,
    stage_cost,
)
from .model import ChannelSpec, SensorSpec, SystemSpec

__all__ = [
    "RandomizedPolicy",
    "default_randomized_probs",
    "PerSensorValue",
    "per_sensor_kernel",
    "solve_per_sensor_value",
    "solve_sisp_values",
    "sisp_decide",
    "build_policy_table",
    "build_policy_table_with_pruning",
    "ThresholdTable",
    "extract_thresholds",
    "randomized_chain_matrix",
]


@dataclass(frozen=True)
class RandomizedPolicy:
    """Independent per-sensor scheduling probabilities, each in (0,1)."""

    p_r: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_r", tuple(float(p) for p in self.p_r))
        for p in self.p_r:
            if not (0.0 < p < 1.0):
                raise ValueError(f"scheduling probabilities must lie in (0,1), got {p}")

    def check_budget(self, m: int) -> None:
        if sum(self.p_r) > m + 1e-12:
            raise ValueError(
                f"sum of scheduling probabilities {sum(self.p_r):g} exceeds budget {m}"
            )


def default_randomized_probs(spec: SystemSpec) -> tuple:
    """Scheduling probabilities proportional to arrival rates, capped at 0.99.

    p_i = M * rate_i / sum(rate); rescaled if the budget is exceeded after
    capping. Markov arrivals contribute their stationary rate.
    """
    rates = np.array([s.arrival.mean_rate() for s in spec.sensors])
    if np.any(rates <= 0.0):
        raise ValueError("all arrival rates must be positive for the default probabilities")
    p = spec.m_budget * rates / rates.sum()
    p = np.minimum(p, 0.99)
    if p.sum() > spec.m_budget:
        p *= spec.m_budget / p.sum()
    return tuple(float(x) for x in p)


def _single_sensor_system(sensor: SensorSpec, channel: ChannelSpec) -> SystemSpec:
    return SystemSpec(sensors=(sensor,), channel=channel, m_budget=1)


def per_sensor_kernel(
    sensor: SensorSpec, channel: ChannelSpec, p_r_i: float
) -> np.ndarray:
    """Expected one-sensor kernel p * K_transmit + (1-p) * K_idle (dense).

    The channel factor is included, so rows sum to one over the sensor's own
    (aoli, aori, channel) space. Boundary values p in {0, 1} collapse to the
    pure idle / pure transmit kernels.
    """
    if not (0.0 <= p_r_i <= 1.0):
        raise ValueError(f"p_r must lie in [0,1], got {p_r_i}")
    system = _single_sensor_system(sensor, channel)
    space = StateSpace(system)
    actions = ActionSet(1, 1)
    k_idle, k_tx = (k.toarray() for k in build_kernels(system, space, actions))
    return p_r_i * k_tx + (1.0 - p_r_i) * k_idle


@dataclass
class PerSensorValue:
    """Solved per-sensor relative value function under the randomized policy.

    `eq[x, a]` caches the expected next-step value from per-sensor state x
    when the sensor idles (a=0) or transmits (a=1); the SISP argmin only ever
    needs these two columns.
    """

    sensor_index: int
    space: StateSpace
    values: np.ndarray
    gain: float
    p_r: float
    eq: np.ndarray

    def state_index(self, st: SensorState, theta: int, prev_arrived: bool) -> int:
        js = JointState((st,), theta, (prev_arrived,))
        return self.space.encode(js)


def solve_per_sensor_value(
    sensor: SensorSpec,
    channel: ChannelSpec,
    p_r_i: float,
    epsilon: float = 1e-9,
    max_iter: int = 100000,
    sensor_index: int = 0,
) -> PerSensorValue:
    """Relative value iteration on the expected per-sensor kernel.

    Stage cost is the sensor's own penalty at its monitor-side age; the value
    is normalized to zero at the reference state ((0,1), bad channel).
    """
    system = _single_sensor_system(sensor, channel)
    space = StateSpace(system)
    actions = ActionSet(1, 1)
    k_idle, k_tx = (k.toarray() for k in build_kernels(system, space, actions))
    mixed = p_r_i * k_tx + (1.0 - p_r_i) * k_idle
    cost = cost_vector(space, system)
    vt, _ = relative_value_iteration(
        [mixed], cost, space.reference_index(), epsilon, max_iter
    )
    eq = np.stack([k_idle @ vt.values, k_tx @ vt.values], axis=1)
    return PerSensorValue(sensor_index, space, vt.values, vt.gain, p_r_i, eq)


def solve_sisp_values(
    spec: SystemSpec,
    p_r: Optional[Sequence[float]] = None,
    epsilon: float = 1e-9,
    max_iter: int = 100000,
) -> list:
    """Solve every sensor's decomposed value function.

    p_r defaults to arrival-rate-proportional probabilities; the per-sensor
    solves are independent of one another.
    """
    if p_r is None:
        p_r = default_randomized_probs(spec)
    if len(p_r) != spec.n_sensors:
        raise ValueError("p_r length must match the number of sensors")
    RandomizedPolicy(tuple(p_r)).check_budget(spec.m_budget)
    return [
        solve_per_sensor_value(s, spec.channel, p_r[i], epsilon, max_iter, i)
        for i, s in enumerate(spec.sensors)
    ]


def _expected_values(state: JointState, values: Sequence[PerSensorValue]) -> np.ndarray:
    """eq rows for the current joint state: shape (N, 2), columns idle/transmit."""
    out = np.empty((len(values), 2))
    for i, pv in enumerate(values):
        x = pv.state_index(state.sensors[i], state.theta, state.prev_arrival[i])
        out[i] = pv.eq[x]
    return out


def sisp_decide(
    state: JointState,
    values: Sequence[PerSensorValue],
    actions: ActionSet,
    spec: SystemSpec,
) -> tuple:
    """Action minimizing stage cost plus summed per-sensor expected values.

    The joint expectation factorizes sensor by sensor, so each action is
    scored in O(N) from the cached eq columns. Ties pick the lowest action
    index, which favors idling.
    """
    eq = _expected_values(state, values)
    base = stage_cost(state, spec)
    best_idx, best_val = 0, math.inf
    for k, action in enumerate(actions.actions):
        val = base + sum(eq[i, action[i]] for i in range(len(values)))
        if val < best_val:
            best_idx, best_val = k, val
    return actions.actions[best_idx]


def _eq_columns(values: Sequence[PerSensorValue], space: StateSpace) -> tuple:
    """Per-sensor idle/transmit expected-value vectors over the joint space."""
    idle_cols, tx_cols = [], []
    for i, pv in enumerate(values):
        if pv.space.sub_sizes[0] != space.sub_sizes[i]:
            raise ValueError(f"per-sensor space of sensor {i} does not match the system")
        x = space.per_sensor_index_array(i)
        idle_cols.append(pv.eq[x, 0])
        tx_cols.append(pv.eq[x, 1])
    return idle_cols, tx_cols


def build_policy_table(
    values: Sequence[PerSensorValue],
    space: StateSpace,
    actions: ActionSet,
    spec: SystemSpec,
) -> PolicyTable:
    """SISP table by direct argmin at every state (no pruning)."""
    idle_cols, tx_cols = _eq_columns(values, space)
    theta = np.empty((len(actions), space.n_states))
    for k, action in enumerate(actions.actions):
        acc = np.zeros(space.n_states)
        for i in range(spec.n_sensors):
            acc += tx_cols[i] if action[i] else idle_cols[i]
        theta[k] = acc
    return PolicyTable(theta.argmin(axis=0), actions)


def build_policy_table_with_pruning(
    values: Sequence[PerSensorValue],
    space: StateSpace,
    actions: ActionSet,
    spec: SystemSpec,
) -> tuple:
    """SISP table exploiting threshold persistence; returns (table, n_copied).

    States are visited in increasing index order, which is monotone in every
    age coordinate. If the state one monitor-age step below (all else equal)
    was decided and its action schedules that sensor, the decision persists
    and is copied without evaluating the argmin.
    """
    idle_cols, tx_cols = _eq_columns(values, space)
    n = space.n_states
    aori_arrs = [space.aori_array(i) for i in range(spec.n_sensors)]
    strides = [space.aori_stride(i) for i in range(spec.n_sensors)]
    acts = actions.actions
    table = np.zeros(n, dtype=np.int64)
    copied = 0
    for idx in range(n):
        chosen = -1
        for i in range(spec.n_sensors):
            if aori_arrs[i][idx] >= 2:
                below = table[idx - strides[i]]
                if acts[below][i] == 1:
                    chosen = below
                    break
        if chosen >= 0:
            copied += 1
        else:
            best_val = math.inf
            chosen = 0
            for k, action in enumerate(acts):
                val = 0.0
                for i in range(spec.n_sensors):
                    val += tx_cols[i][idx] if action[i] else idle_cols[i][idx]
                if val < best_val:
                    best_val = val
                    chosen = k
        table[idx] = chosen
    return PolicyTable(table, actions), copied


@dataclass
class ThresholdTable:
    """Smallest scheduling age per (sensor, channel state); inf if never.

    Thresholds are context dependent; this table pins the scanned sensor's
    buffer age and every other sensor's state to a fixed context.
    """

    thresholds: np.ndarray  # shape (N, 2), float with inf sentinel

    def threshold(self, sensor: int, theta: int) -> float:
        return float(self.thresholds[sensor, theta])

    def rows(self):
        for i in range(self.thresholds.shape[0]):
            for theta in (0, 1):
                yield (i + 1, theta, self.thresholds[i, theta])


def extract_thresholds(
    values: Sequence[PerSensorValue],
    spec: SystemSpec,
    actions: Optional[ActionSet] = None,
    own_aoli: int = 0,
    other_state: tuple = (0, 1),
) -> ThresholdTable:
    """Scan each sensor's monitor age for the first scheduled decision.

    Other sensors sit at `other_state`, the scanned sensor's buffer age is
    pinned to `own_aoli`, and arrival memory mirrors (aoli == 0). The
    threshold is the smallest age at which the decided action schedules the
    sensor; inf if that never happens within the truncated range.
    """
    if actions is None:
        actions = ActionSet(spec.n_sensors, spec.m_budget)
    n = spec.n_sensors
    out = np.full((n, 2), np.inf)
    for i in range(n):
        for theta in (0, 1):
            for aori in range(1, spec.sensors[i].max_aori + 1):
                sensors = []
                for j in range(n):
                    if j == i:
                        sensors.append(SensorState(min(own_aoli, spec.sensors[j].max_aoli), aori))
                    else:
                        sensors.append(SensorState(other_state[0], other_state[1]))
                prev = tuple(st.aoli == 0 for st in sensors)
                state = JointState(tuple(sensors), theta, prev)
                if sisp_decide(state, values, actions, spec)[i] == 1:
                    out[i, theta] = aori
                    break
    return ThresholdTable(out)


def randomized_chain_matrix(spec: SystemSpec, space: StateSpace, p_r: Sequence[float]):
    """Exact joint chain of the independent randomized policy.

    Mixes the kernels of all 2^N schedule vectors with product Bernoulli
    weights. The budget holds in expectation only, matching the policy the
    value decomposition is defined against.
    """
    full_actions = ActionSet(spec.n_sensors, spec.n_sensors)
    kernels = build_kernels(spec, space, full_actions)
    weights = []
    for action in full_actions.actions:
        w = 1.0
        for i, d in enumerate(action):
            w *= p_r[i] if d else 1.0 - p_r[i]
        weights.append(w)
    return mixture_chain_matrix(weights, kernels)
