"""Shared fixtures: the two-sensor reference instance and solved artifacts."""

from dataclasses import dataclass

import numpy as np
import pytest

import aoisched as a
from aoisched import decomposed, mdp

# Two-sensor reference configuration used throughout the suite: unstable
# 2x2 plant with rho(A) = 1.1, trace penalty, channel (0.5, 0.8),
# success probabilities (0.5, 1.0), caps 7, budget 1.
VA_A = np.array([[1.1, 0.5], [0.0, 0.2]])
VA_C = np.array([[1.0, 1.0]])
VA_SIGMA_W = np.eye(2)
VA_R_MEAS = np.array([[0.8]])
VA_CHANNEL = a.ChannelSpec(0.5, 0.8)


@pytest.fixture(scope="session")
def va_pbar():
    return a.solve_steady_state_covariance(VA_A, VA_C, VA_SIGMA_W, VA_R_MEAS)


@pytest.fixture(scope="session")
def va_penalty(va_pbar):
    return a.EstimationTracePenalty(VA_A, VA_SIGMA_W, va_pbar)


def make_va_sensor(penalty, lam, cap=7, p0=0.5, p1=1.0):
    return a.SensorSpec(a.BernoulliArrival(lam), penalty, p0, p1, cap, cap)


def make_va_system(penalty, lam1, lam2, cap=7, m=1):
    return a.SystemSpec(
        (make_va_sensor(penalty, lam1, cap), make_va_sensor(penalty, lam2, cap)),
        VA_CHANNEL,
        m,
    )


@pytest.fixture(scope="session")
def va_system(va_penalty):
    return make_va_system(va_penalty, 0.9, 0.9)


@pytest.fixture(scope="session")
def va_hetero(va_penalty):
    return make_va_system(va_penalty, 0.9, 0.5)


@dataclass
class SolvedBundle:
    system: object
    space: object
    actions: object
    kernels: list
    cost: np.ndarray
    start: int
    vt: object
    pt: object


def solve_bundle(system) -> SolvedBundle:
    space, actions, vt, pt = a.solve_optimal_policy(system)
    kernels = mdp.build_kernels(system, space, actions)
    cost = mdp.cost_vector(space, system)
    return SolvedBundle(
        system, space, actions, kernels, cost, space.reference_index(), vt, pt
    )


@pytest.fixture(scope="session")
def va_solved(va_system):
    return solve_bundle(va_system)


@pytest.fixture(scope="session")
def va_hetero_solved(va_hetero):
    return solve_bundle(va_hetero)


@dataclass
class SispBundle:
    values: list
    table: object  # unpruned construction
    pruned_table: object
    copied: int


def sisp_bundle(bundle: SolvedBundle) -> SispBundle:
    values = decomposed.solve_sisp_values(bundle.system)
    table = decomposed.build_policy_table(
        values, bundle.space, bundle.actions, bundle.system
    )
    pruned, copied = decomposed.build_policy_table_with_pruning(
        values, bundle.space, bundle.actions, bundle.system
    )
    return SispBundle(values, table, pruned, copied)


@pytest.fixture(scope="session")
def va_sisp(va_solved):
    return sisp_bundle(va_solved)


@pytest.fixture(scope="session")
def va_hetero_sisp(va_hetero_solved):
    return sisp_bundle(va_hetero_solved)


def tiny_system():
    """Single sensor, caps (1, 2): 8 states, small enough to enumerate."""
    sensor = a.SensorSpec(a.BernoulliArrival(0.7), a.ExponentialPenalty(0.5), 0.4, 0.9, 1, 2)
    return a.SystemSpec((sensor,), a.ChannelSpec(0.5, 0.8), 1)


@pytest.fixture(scope="session")
def tiny_solved():
    return solve_bundle(tiny_system())
