"""Closed-form boundedness tests for the long-run monitoring cost.

The time-average cost stays bounded iff the spectral radius of
Omega (I - lambda_hat P), with P = diag(p0, p1), lies below a bound fixed by
the penalty: 1/rho(A)^2 for the estimation-trace penalty and 1/e^r for the
exponential one. Markov arrivals enter through lambda_hat = min{1 - stay_empty,
stay_active}. Feasible-region sweeps evaluate the same test on a (p0, p1)
grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    ChannelSpec,
    EstimationTracePenalty,
    ExponentialPenalty,
    MarkovArrival,
    SensorSpec,
    SystemSpec,
    spectral_radius,
)

__all__ = [
    "StabilityReport",
    "effective_arrival_rate",
    "stability_check",
    "system_stability",
    "FeasibleRegion",
    "feasible_region",
]


@dataclass(frozen=True)
class StabilityReport:
    sensor_index: int
    rho: float
    bound: float
    satisfied: bool
    criterion: str  # trace-penalty | exponential-penalty | markov-arrival


def effective_arrival_rate(arrival) -> float:
    """Arrival rate entering the stability test (worst case for Markov)."""
    return arrival.effective_rate()


def _stability_matrix(channel: ChannelSpec, lam_hat: float, p0: float, p1: float):
    scale = np.array([1.0 - lam_hat * p0, 1.0 - lam_hat * p1])
    return channel.omega() * scale[np.newaxis, :]


def stability_check(
    channel: ChannelSpec,
    sensor: SensorSpec,
    a_matrix=None,
    r: Optional[float] = None,
    sensor_index: int = 0,
) -> StabilityReport:
    """Evaluate rho(Omega (I - lambda_hat P)) against the penalty's bound.

    The bound defaults to the sensor's own penalty: 1/rho(A)^2 for the trace
    penalty, 1/e^r for the exponential one. Pass a_matrix or r to override.
    """
    lam_hat = effective_arrival_rate(sensor.arrival)
    rho = spectral_radius(_stability_matrix(channel, lam_hat, sensor.p0, sensor.p1))
    if a_matrix is not None:
        bound = 1.0 / spectral_radius(a_matrix) ** 2
        criterion = "trace-penalty"
    elif r is not None:
        bound = math.exp(-r)
        criterion = "exponential-penalty"
    elif isinstance(sensor.penalty, EstimationTracePenalty):
        bound = 1.0 / sensor.penalty.rho_a() ** 2
        criterion = "trace-penalty"
    elif isinstance(sensor.penalty, ExponentialPenalty):
        bound = math.exp(-sensor.penalty.r)
        criterion = "exponential-penalty"
    else:  # pragma: no cover - union is exhaustive
        raise TypeError(f"unsupported penalty {type(sensor.penalty)!r}")
    if isinstance(sensor.arrival, MarkovArrival):
        criterion = "markov-arrival"
    return StabilityReport(sensor_index, float(rho), float(bound), rho < bound, criterion)


def system_stability(spec: SystemSpec) -> list:
    """Per-sensor stability reports; the system is stable iff all are."""
    return [
        stability_check(spec.channel, s, sensor_index=i)
        for i, s in enumerate(spec.sensors)
    ]


@dataclass
class FeasibleRegion:
    """Boolean feasibility grid over (p0, p1) in [0,1]^2.

    rho[u, v] and feasible[u, v] correspond to p0 = p0_values[u],
    p1 = p1_values[v]; feasibility is the strict comparison rho < bound.
    """

    p0_values: np.ndarray
    p1_values: np.ndarray
    rho: np.ndarray
    bound: float
    feasible: np.ndarray

    def contains(self, other: "FeasibleRegion") -> bool:
        """True if every point feasible in `other` is feasible here."""
        return bool(np.all(self.feasible | ~other.feasible))


def feasible_region(
    channel: ChannelSpec,
    lambda_hat: float,
    bound: float,
    resolution: int = 101,
) -> FeasibleRegion:
    """Sweep the stability test over a (p0, p1) grid.

    The scaled matrix Omega diag(1 - lam p0, 1 - lam p1) is entrywise
    nonnegative, so its 2x2 Perron root has the closed form
    (tr + sqrt(tr^2 - 4 det)) / 2, vectorized over the grid.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2")
    p0 = np.linspace(0.0, 1.0, resolution)
    p1 = np.linspace(0.0, 1.0, resolution)
    d0 = 1.0 - lambda_hat * p0[:, np.newaxis]
    d1 = 1.0 - lambda_hat * p1[np.newaxis, :]
    k00, k01 = channel.kappa00, channel.kappa01
    k10, k11 = channel.kappa10, channel.kappa11
    tr = k00 * d0 + k11 * d1
    det = (k00 * k11 - k01 * k10) * d0 * d1
    disc = np.maximum(tr * tr - 4.0 * det, 0.0)  # nonneg matrix: disc >= 0
    rho = (tr + np.sqrt(disc)) / 2.0
    return FeasibleRegion(p0, p1, rho, float(bound), rho < bound)
