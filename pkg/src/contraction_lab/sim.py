"""Trajectory integration and empirical checks of contraction.

All distances use a constant metric ``G`` on a vector-space chart, where the
straight segment is a minimising curve, so ``d_G(x, y) = sqrt((x-y).T G (x-y))``
and the reachability constant of the exponential bound is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NonFinite, NonPositiveDistance, NotPositiveDefinite
from .numerics import is_positive_definite, sym
from .systems import (
    ChaplyginDisk,
    ContactSystem,
    MechanicalSystem,
    contact_lyapunov,
    disk_metric,
    lyapunov,
)

LYAPUNOV_FLOOR = 1e-14


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled trajectory; ``states[i]`` is the state at ``times[i]``.

    ``states`` has shape ``(len(times),) + x0.shape`` so a batch of initial
    conditions integrates into a batch of trajectories.
    """

    times: np.ndarray
    states: np.ndarray
    dt: float

    def __len__(self) -> int:
        return len(self.times)

    def member(self, index) -> "Trajectory":
        """Select one trajectory out of a batched integration."""
        return Trajectory(self.times, self.states[(slice(None),) + np.index_exp[index]], self.dt)


@dataclass(frozen=True)
class RateFit:
    rate: float
    r_squared: float
    window: tuple[float, float]


def rk4_integrate(
    field: Callable[[np.ndarray], np.ndarray], x0, dt: float, steps: int
) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.array(x0, dtype=float)
    states = np.empty((steps + 1,) + x.shape)
    states[0] = x
    half = 0.5 * dt
    for i in range(steps):
        k1 = field(x)
        k2 = field(x + half * k1)
        k3 = field(x + half * k2)
        k4 = field(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFinite(f"integration blew up at step {i + 1} (t={(i + 1) * dt:g})")
        states[i + 1] = x
    times = dt * np.arange(steps + 1)
    return Trajectory(times, states, float(dt))


def metric_distance(g, x, y) -> np.ndarray:
    """``sqrt((x - y).T G (x - y))``; broadcasts over leading axes."""
    g = sym(g)
    if not is_positive_definite(g):
        raise NotPositiveDefinite("distance metric is not positive definite")
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if diff.shape[-1] != g.shape[0]:
        raise DimensionMismatch(f"states have dimension {diff.shape[-1]}, metric {g.shape[0]}")
    quad = np.einsum("...i,ij,...j->...", diff, g, diff)
    return np.sqrt(np.maximum(quad, 0.0))


def pair_divergence(a: Trajectory, b: Trajectory, g) -> np.ndarray:
    if a.states.shape != b.states.shape or not np.array_equal(a.times, b.times):
        raise DimensionMismatch("trajectories must share times and state shape")
    return metric_distance(g, a.states, b.states)


def fit_rate(d, times, window: tuple[float, float]) -> RateFit:
    """Least-squares fit of ``log d = c - rate * t`` inside ``window``."""
    d = np.asarray(d, dtype=float)
    times = np.asarray(times, dtype=float)
    t0, t1 = window
    if not t0 < t1:
        raise ValueError(f"empty window {window}")
    mask = (times >= t0) & (times <= t1)
    if mask.sum() < 2:
        raise ValueError(f"window {window} holds fewer than two samples")
    dw, tw = d[mask], times[mask]
    if np.any(dw <= 0):
        raise NonPositiveDistance(
            f"distance reaches {dw.min():.3g} inside {window}; shrink the window"
        )
    logd = np.log(dw)
    slope, intercept = np.polyfit(tw, logd, 1)
    resid = logd - (slope * tw + intercept)
    total = np.sum((logd - logd.mean()) ** 2)
    r2 = 1.0 if total == 0 else float(np.clip(1 - np.sum(resid**2) / total, 0.0, 1.0))
    return RateFit(float(-slope), r2, (float(t0), float(t1)))


def time_derivative(values, dt: float) -> np.ndarray:
    """Fourth-order central difference of a uniformly sampled series.

    Returns the derivative at samples ``2 .. len-3``.
    """
    v = np.asarray(values, dtype=float)
    return (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dt)


def contraction_bound(d0: float, times, rate: float) -> np.ndarray:
    return d0 * np.exp(-rate * np.asarray(times, dtype=float))


def verify_contraction_bound(d, times, rate: float, tol: float) -> bool:
    """``d[i] <= d[0] exp(-rate t_i) (1 + tol)`` at every sample."""
    d = np.asarray(d, dtype=float)
    return bool(np.all(d <= contraction_bound(d[0], times, rate) * (1 + tol)))


def lyapunov_values(system, eps: float, states) -> np.ndarray:
    if isinstance(system, MechanicalSystem):
        return lyapunov(system, eps, states)
    if isinstance(system, ContactSystem):
        return contact_lyapunov(system, eps, states)
    raise TypeError(f"no Lyapunov function for {type(system).__name__}")


def lyapunov_decay_check(system, eps: float, traj: Trajectory) -> bool:
    """Strict decrease of ``V = |Gamma|^2_G`` until ``V`` hits the numerical floor."""
    v = lyapunov_values(system, eps, traj.states)
    active = v[:-1] > LYAPUNOV_FLOOR
    return bool(np.all(v[1:][active] < v[:-1][active]))


def disk_reduced_coords(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape[-1] == 8:
        return s[..., [2, 3, 6, 7]]
    if s.shape[-1] == 4:
        return s
    raise DimensionMismatch(f"disk states have dimension 4 or 8, got {s.shape[-1]}")


def disk_distance_to_EP(s, sys: ChaplyginDisk, eps: float) -> np.ndarray:
    """Reduced ``G_eps`` norm of ``(theta, phi, thd, phd)``.

    Bounds the distance to the equilibrium set from above; ``(x, y)`` and the
    slaved planar velocities do not contribute.
    """
    return metric_distance(disk_metric(sys, eps), disk_reduced_coords(s), 0.0)


def tail_oscillation(values, fraction: float = 0.25) -> np.ndarray:
    """``max - min`` over the final ``fraction`` of samples (per column)."""
    values = np.asarray(values, dtype=float)
    start = int(len(values) * (1 - fraction))
    tail = values[start:]
    return tail.max(axis=0) - tail.min(axis=0)
