"""Exact truncated-MDP machinery.

State enumeration, the factored transition kernel (channel factor times
per-sensor case table, with a Markov-arrival variant), relative value
iteration for the average-cost optimal policy, a value-monotonicity checker,
and exact policy evaluation through the stationary distribution of the
policy-induced chain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .dynamics import JointState, SensorState, initial_state
from .model import ConvergenceError, SensorSpec, SystemSpec, penalty_table

__all__ = [
    "StateSpace",
    "ActionSet",
    "ValueTable",
    "PolicyTable",
    "sensor_delta_transitions",
    "transition_distribution",
    "stage_cost",
    "cost_vector",
    "build_kernels",
    "relative_value_iteration",
    "solve_optimal_policy",
    "check_value_monotonicity",
    "policy_chain_matrix",
    "mixture_chain_matrix",
    "stationary_distribution",
    "chain_average_cost",
    "policy_average_cost",
    "average_cost_by_sensor",
    "table_rows",
]


class StateSpace:
    """Bijective index <-> JointState codec over the truncated rectangle.

    Layout per sensor: ((aoli * max_aori) + (aori - 1)) * g_size + g, where
    the arrival-memory bit g only exists (g_size = 2) for sensors with Markov
    arrivals. The joint index interleaves sensors most-significant-first with
    the channel bit fastest, so stepping one age coordinate is a fixed
    positive stride.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.l_sizes = [s.max_aoli + 1 for s in spec.sensors]
        self.r_sizes = [s.max_aori for s in spec.sensors]
        self.g_sizes = [2 if s.has_markov_arrivals else 1 for s in spec.sensors]
        self.sub_sizes = [
            l * r * g for l, r, g in zip(self.l_sizes, self.r_sizes, self.g_sizes)
        ]
        self.n_states = 2 * int(np.prod(self.sub_sizes))
        # joint stride of one unit of sensor i's sub-index
        self.sub_strides = []
        stride = 2
        for size in reversed(self.sub_sizes):
            self.sub_strides.append(stride)
            stride *= size
        self.sub_strides.reverse()
        self._coords = None

    @property
    def n_sensors(self) -> int:
        return self.spec.n_sensors

    def sensor_sub_index(self, i: int, aoli: int, aori: int, g: int) -> int:
        if not (0 <= aoli < self.l_sizes[i] and 1 <= aori <= self.r_sizes[i]):
            raise ValueError(f"sensor {i} state ({aoli},{aori}) outside truncation")
        g_eff = g if self.g_sizes[i] == 2 else 0
        return (aoli * self.r_sizes[i] + (aori - 1)) * self.g_sizes[i] + g_eff

    def encode(self, js: JointState) -> int:
        idx = 0
        for i in range(self.n_sensors):
            st = js.sensors[i]
            g = 1 if js.prev_arrival[i] else 0
            idx = idx * self.sub_sizes[i] + self.sensor_sub_index(i, st.aoli, st.aori, g)
        return idx * 2 + js.theta

    def decode(self, idx: int) -> JointState:
        if not (0 <= idx < self.n_states):
            raise ValueError(f"state index {idx} out of range")
        theta = idx % 2
        rest = idx // 2
        subs = [0] * self.n_sensors
        for i in range(self.n_sensors - 1, -1, -1):
            subs[i] = rest % self.sub_sizes[i]
            rest //= self.sub_sizes[i]
        sensors = []
        prev = []
        for i, sub in enumerate(subs):
            g = sub % self.g_sizes[i]
            t = sub // self.g_sizes[i]
            aori = t % self.r_sizes[i] + 1
            aoli = t // self.r_sizes[i]
            sensors.append(SensorState(aoli, aori))
            prev.append(bool(g) if self.g_sizes[i] == 2 else aoli == 0)
        return JointState(tuple(sensors), theta, tuple(prev))

    def states(self):
        for idx in range(self.n_states):
            yield self.decode(idx)

    def reference_index(self) -> int:
        """Index of the canonical start state (all sensors (0,1), bad channel)."""
        return self.encode(initial_state(self.spec))

    # cached coordinate arrays for vectorized table operations
    def _coordinate_arrays(self):
        if self._coords is None:
            idx = np.arange(self.n_states)
            theta = idx % 2
            rest = idx // 2
            aoli, aori, g, psi = [], [], [], []
            for i in range(self.n_sensors - 1, -1, -1):
                sub = rest % self.sub_sizes[i]
                rest = rest // self.sub_sizes[i]
                gi = sub % self.g_sizes[i]
                t = sub // self.g_sizes[i]
                aoli.append(t // self.r_sizes[i])
                aori.append(t % self.r_sizes[i] + 1)
                g.append(gi)
                psi.append(sub * 2 + theta)
            for arr in (aoli, aori, g, psi):
                arr.reverse()
            self._coords = (theta, aoli, aori, g, psi)
        return self._coords

    def theta_array(self) -> np.ndarray:
        return self._coordinate_arrays()[0]

    def aoli_array(self, i: int) -> np.ndarray:
        return self._coordinate_arrays()[1][i]

    def aori_array(self, i: int) -> np.ndarray:
        return self._coordinate_arrays()[2][i]

    def arrival_bit_array(self, i: int) -> np.ndarray:
        return self._coordinate_arrays()[3][i]

    def per_sensor_index_array(self, i: int) -> np.ndarray:
        """Map joint index -> index in sensor i's own single-sensor space."""
        return self._coordinate_arrays()[4][i]

    def aori_stride(self, i: int) -> int:
        return self.g_sizes[i] * self.sub_strides[i]

    def aoli_stride(self, i: int) -> int:
        return self.r_sizes[i] * self.g_sizes[i] * self.sub_strides[i]


class ActionSet:
    """All binary schedules with at most M ones, idle first.

    Actions are ordered by (number scheduled, bitmask with sensor 0 as the
    low bit); argmin ties therefore resolve toward not transmitting.
    """

    def __init__(self, n: int, m: int):
        if not (1 <= m <= n):
            raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")
        self.n = n
        self.m = m
        masks = [mask for mask in range(1 << n) if bin(mask).count("1") <= m]
        masks.sort(key=lambda mask: (bin(mask).count("1"), mask))
        self.actions = tuple(
            tuple((mask >> i) & 1 for i in range(n)) for mask in masks
        )
        self._index = {a: k for k, a in enumerate(self.actions)}

    def __len__(self) -> int:
        return len(self.actions)

    def index(self, action) -> int:
        return self._index[tuple(action)]

    def is_feasible(self, action) -> bool:
        return tuple(action) in self._index


@dataclass
class ValueTable:
    values: np.ndarray
    gain: float
    iterations: int = 0


@dataclass
class PolicyTable:
    action_index: np.ndarray
    action_set: Optional[ActionSet] = None

    def action_of(self, state_index: int):
        if self.action_set is None:
            raise ValueError("policy table has no action set attached")
        return self.action_set.actions[self.action_index[state_index]]


def sensor_delta_transitions(
    sensor: SensorSpec,
    aoli: int,
    aori: int,
    g: int,
    theta: int,
    scheduled: bool,
) -> list:
    """One sensor's transition law for a slot: [((aoli', aori', g'), prob)].

    Conditions on the pre-transition channel state. Under Markov arrivals the
    arrival probability depends on the memory bit g; under Bernoulli arrivals
    g is ignored and the returned g' mirrors (aoli' == 0). Successors beyond
    the truncation caps are saturated and merged.
    """
    arr_p = sensor.arrival.arrival_prob(bool(g))
    markov = sensor.has_markov_arrivals
    cap_l, cap_r = sensor.max_aoli, sensor.max_aori
    if scheduled:
        p = sensor.success_prob(theta)
        outcomes = [
            (True, True, arr_p * p),
            (False, True, (1.0 - arr_p) * p),
            (True, False, arr_p * (1.0 - p)),
            (False, False, (1.0 - arr_p) * (1.0 - p)),
        ]
    else:
        outcomes = [(True, False, arr_p), (False, False, 1.0 - arr_p)]
    merged = {}
    for arrived, delivered, prob in outcomes:
        if prob <= 0.0:
            continue
        new_aori = min((aoli if delivered else aori) + 1, cap_r)
        new_aoli = 0 if arrived else min(aoli + 1, cap_l)
        if markov:
            new_g = 1 if arrived else 0
        else:
            new_g = 1 if new_aoli == 0 else 0
        key = (new_aoli, new_aori, new_g)
        merged[key] = merged.get(key, 0.0) + prob
    return list(merged.items())


def transition_distribution(state: JointState, action, spec: SystemSpec) -> list:
    """Full one-step distribution [(JointState, prob)] for a feasible action."""
    if not spec.is_feasible_action(action):
        raise ValueError(f"infeasible action {tuple(action)}")
    channel = spec.channel
    per_sensor = [
        sensor_delta_transitions(
            s,
            state.sensors[i].aoli,
            state.sensors[i].aori,
            1 if state.prev_arrival[i] else 0,
            state.theta,
            bool(action[i]),
        )
        for i, s in enumerate(spec.sensors)
    ]
    merged = {}
    for theta_next in (0, 1):
        ch = channel.transition_prob(state.theta, theta_next)
        for combo in itertools.product(*per_sensor):
            prob = ch
            sensors = []
            prev = []
            for (aoli, aori, g), pr in combo:
                prob *= pr
                sensors.append(SensorState(aoli, aori))
                prev.append(bool(g))
            key = JointState(tuple(sensors), theta_next, tuple(prev))
            merged[key] = merged.get(key, 0.0) + prob
    return list(merged.items())


def stage_cost(state: JointState, spec: SystemSpec) -> float:
    """Sum of penalties at the current monitor-side ages; action independent."""
    return sum(s.penalty(state.sensors[i].aori) for i, s in enumerate(spec.sensors))


def cost_vector(space: StateSpace, spec: SystemSpec) -> np.ndarray:
    cost = np.zeros(space.n_states)
    for i, s in enumerate(spec.sensors):
        table = penalty_table(s.penalty, s.max_aori)
        cost += table[space.aori_array(i)]
    return cost


def build_kernels(spec: SystemSpec, space: StateSpace, actions: ActionSet) -> list:
    """Sparse transition matrix per action, rows summing to one."""
    n = space.n_states
    # per-sensor lookup: succ[i][theta][a][sub] = [(sub', prob)]
    succ = []
    for i, s in enumerate(spec.sensors):
        by_theta = []
        for theta in (0, 1):
            by_action = []
            for a in (0, 1):
                rows = []
                for sub in range(space.sub_sizes[i]):
                    g = sub % space.g_sizes[i]
                    t = sub // space.g_sizes[i]
                    aori = t % space.r_sizes[i] + 1
                    aoli = t // space.r_sizes[i]
                    rows.append(
                        [
                            (space.sensor_sub_index(i, l2, r2, g2), pr)
                            for (l2, r2, g2), pr in sensor_delta_transitions(
                                s, aoli, aori, g, theta, bool(a)
                            )
                        ]
                    )
                by_action.append(rows)
            by_theta.append(by_action)
        succ.append(by_theta)

    theta_arr = space.theta_array()
    sub_arrs = [
        (space.per_sensor_index_array(i) - theta_arr) // 2 for i in range(space.n_sensors)
    ]
    omega = spec.channel.omega()
    kernels = []
    for action in actions.actions:
        rows, cols, vals = [], [], []
        for idx in range(n):
            theta = theta_arr[idx]
            lists = [
                succ[i][theta][action[i]][sub_arrs[i][idx]]
                for i in range(space.n_sensors)
            ]
            for theta_next in (0, 1):
                ch = omega[theta, theta_next]
                for combo in itertools.product(*lists):
                    j = theta_next
                    prob = ch
                    stride_pos = 0
                    for i, (sub2, pr) in enumerate(combo):
                        prob *= pr
                        stride_pos = stride_pos * space.sub_sizes[i] + sub2
                    j += stride_pos * 2
                    rows.append(idx)
                    cols.append(j)
                    vals.append(prob)
        mat = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        kernels.append(mat)
    return kernels


def relative_value_iteration(
    kernels: Sequence,
    cost: np.ndarray,
    ref_index: int,
    epsilon: float = 1e-9,
    max_iter: int = 100000,
    action_set: Optional[ActionSet] = None,
) -> tuple:
    """Average-cost relative value iteration, normalized at ref_index.

    Iterates Q' = min_a [c + K_a Q] - (same at the reference state) until the
    sup norm of successive iterates is <= epsilon. Returns (ValueTable,
    PolicyTable); the gain is min_a Theta(ref, a) at termination and argmin
    ties resolve to the lowest action index.
    """
    n = len(cost)
    q = np.zeros(n)
    theta_stack = np.empty((len(kernels), n))
    sup_diff = np.inf
    for it in range(max_iter):
        for a, k in enumerate(kernels):
            theta_stack[a] = cost + k @ q
        q_next = theta_stack.min(axis=0)
        gain = q_next[ref_index]
        q_next -= gain
        sup_diff = np.max(np.abs(q_next - q))
        q = q_next
        if sup_diff <= epsilon:
            policy = theta_stack.argmin(axis=0)
            return ValueTable(q, float(gain), it + 1), PolicyTable(policy, action_set)
    raise ConvergenceError(
        f"relative value iteration: sup-diff {sup_diff:.3e} > {epsilon:g} "
        f"after {max_iter} iterations"
    )


def solve_optimal_policy(
    spec: SystemSpec, epsilon: float = 1e-9, max_iter: int = 100000
) -> tuple:
    """Build the truncated MDP and solve it; returns (space, actions, vt, pt)."""
    space = StateSpace(spec)
    actions = ActionSet(spec.n_sensors, spec.m_budget)
    kernels = build_kernels(spec, space, actions)
    cost = cost_vector(space, spec)
    vt, pt = relative_value_iteration(
        kernels, cost, space.reference_index(), epsilon, max_iter, actions
    )
    return space, actions, vt, pt


def check_value_monotonicity(values: np.ndarray, space: StateSpace, slack: float) -> list:
    """Pairs where the value function decreases along a +1 age step.

    Compares every state against its neighbor with one age coordinate raised
    by one (same channel state, same arrival memory) and reports
    (state_index, neighbor_index, sensor, coordinate) where the neighbor's
    value is smaller by more than `slack`.
    """
    idx = np.arange(space.n_states)
    violations = []
    for i in range(space.n_sensors):
        for coord, arr, cap, stride in (
            ("aoli", space.aoli_array(i), space.l_sizes[i] - 1, space.aoli_stride(i)),
            ("aori", space.aori_array(i), space.r_sizes[i], space.aori_stride(i)),
        ):
            mask = arr < cap
            src = idx[mask]
            dst = src + stride
            bad = values[dst] < values[src] - slack
            for s, d in zip(src[bad], dst[bad]):
                violations.append((int(s), int(d), i, coord))
    return violations


def policy_chain_matrix(policy: PolicyTable, kernels: Sequence) -> sparse.csr_matrix:
    """Markov matrix of the chain induced by a deterministic policy."""
    n = kernels[0].shape[0]
    rows, cols, vals = [], [], []
    for a, k in enumerate(kernels):
        sel = np.nonzero(policy.action_index == a)[0]
        if len(sel) == 0:
            continue
        sub = k[sel].tocoo()
        rows.append(sel[sub.row])
        cols.append(sub.col)
        vals.append(sub.data)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )


def mixture_chain_matrix(weights: Sequence[float], kernels: Sequence) -> sparse.csr_matrix:
    """Chain of a state-independent randomized policy: sum_a w_a K_a."""
    if len(weights) != len(kernels) or abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must match kernels and sum to one")
    out = None
    for w, k in zip(weights, kernels):
        if w == 0.0:
            continue
        out = w * k if out is None else out + w * k
    return out.tocsr()


def _reachable_set(p: sparse.csr_matrix, start: int) -> np.ndarray:
    n = p.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    indptr, indices = p.indptr, p.indices
    while frontier:
        nxt = []
        for x in frontier:
            for y in indices[indptr[x] : indptr[x + 1]]:
                if not seen[y]:
                    seen[y] = True
                    nxt.append(int(y))
        frontier = nxt
    return np.nonzero(seen)[0]


def stationary_distribution(p: sparse.csr_matrix, start_index: int) -> np.ndarray:
    """Stationary distribution of the recurrent class reachable from start.

    Restricts to states reachable from start_index, locates the closed
    communicating classes there, and solves xi P = xi, sum xi = 1 on the
    single closed class. Raises RuntimeError if several closed classes are
    reachable (the long-run cost would then depend on chance).
    """
    n = p.shape[0]
    reach = _reachable_set(p, start_index)
    sub = p[np.ix_(reach, reach)].tocsr()
    n_comp, labels = connected_components(sub, directed=True, connection="strong")
    closed = []
    for comp in range(n_comp):
        members = np.nonzero(labels == comp)[0]
        outgoing = sub[members].tocoo()
        if np.all(np.isin(outgoing.col, members)):
            closed.append(members)
    if len(closed) != 1:
        raise RuntimeError(
            f"{len(closed)} recurrent classes reachable from state {start_index}"
        )
    members = closed[0]
    m = len(members)
    xi_full = np.zeros(n)
    if m == 1:
        xi_full[reach[members[0]]] = 1.0
        return xi_full
    q = sub[np.ix_(members, members)]
    if m <= 600:
        a = q.toarray().T - np.eye(m)
        a[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        xi = np.linalg.solve(a, b)
    else:
        a = (q.T - sparse.identity(m, format="csr")).tolil()
        a[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        xi = spsolve(a.tocsc(), b)
    xi_full[reach[members]] = xi
    return xi_full


def chain_average_cost(p: sparse.csr_matrix, cost: np.ndarray, start_index: int) -> float:
    xi = stationary_distribution(p, start_index)
    return float(xi @ cost)


def policy_average_cost(
    policy: PolicyTable,
    kernels: Sequence,
    cost: np.ndarray,
    start_index: int,
) -> float:
    """Exact long-run average cost of a deterministic stationary policy."""
    return chain_average_cost(policy_chain_matrix(policy, kernels), cost, start_index)


def average_cost_by_sensor(
    xi: np.ndarray, space: StateSpace, spec: SystemSpec
) -> np.ndarray:
    """Per-sensor share of the stationary average cost."""
    out = np.zeros(spec.n_sensors)
    for i, s in enumerate(spec.sensors):
        table = penalty_table(s.penalty, s.max_aori)
        out[i] = float(xi @ table[space.aori_array(i)])
    return out


def table_rows(space: StateSpace, values: Optional[np.ndarray], policy: Optional[PolicyTable]):
    """Rows for value/policy CSV dumps.

    Yields (state_index, aoli_1..N, aori_1..N, [arrmem_1..N,] theta, value,
    action_bits); the arrival-memory columns appear only when some sensor has
    Markov arrivals.
    """
    has_markov = any(g == 2 for g in space.g_sizes)
    for idx in range(space.n_states):
        js = space.decode(idx)
        row = [idx]
        row.extend(st.aoli for st in js.sensors)
        row.extend(st.aori for st in js.sensors)
        if has_markov:
            row.extend(int(b) for b in js.prev_arrival)
        row.append(js.theta)
        row.append(values[idx] if values is not None else "")
        if policy is not None:
            row.append("".join(str(d) for d in policy.action_of(idx)))
        else:
            row.append("")
        yield row
