"""Social diffusion coupled with preferential link-weight adjustment.

Every existing link changes multiplicatively::

    da_ij/dt = a_ij * ( alpha * (s_i + s_j - 2<s>) / (2 sigma_s)
                        - beta * (k_i - <k>)(k_j - <k>) / sigma_k**2 )

The alpha term pushes strength toward high-state nodes; the beta term pushes
toward negative strength assortativity. Absent links stay absent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diffusion import Trajectory, _Recorder, _require_strengths, n_steps_for
from .exceptions import DegenerateError, DivergenceError, ZeroStrengthError
from .netcore import Network, check_states, is_connected
from .netgen import pearson, strength_assortativity

__all__ = [
    "AdaptiveParams",
    "weight_derivative",
    "integrate_adaptive",
    "strength_state_correlation",
]


@dataclass(frozen=True)
class AdaptiveParams:
    """Gains ``alpha`` (strength-state correlation) and ``beta`` (anti-assortativity).

    ``sigma_floor`` disables a term whose standard deviation falls below it and
    is also the minimum node strength tolerated during integration.
    """

    alpha: float = 0.0
    beta: float = 0.0
    c: float = 1.0
    dt: float = 0.01
    t_end: float = 1.0
    sigma_floor: float = 1e-12

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.dt > 0 or self.c * self.dt > 1:
            raise ValueError("need dt > 0 and c * dt <= 1")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        n_steps_for(self.t_end, self.dt)

    @property
    def n_steps(self) -> int:
        return n_steps_for(self.t_end, self.dt)


def weight_derivative(net: Network, s, p: AdaptiveParams) -> np.ndarray:
    """Weight rates for every stored link, aligned with ``net.edges``.

    Means and (population) standard deviations are taken over all nodes. A
    self-loop is the pair ``(i, i)``.
    """
    s = check_states(net, s)
    rows, cols, w = net.edges
    rate = np.zeros(w.shape)
    if p.alpha > 0:
        sigma_s = s.std()
        if sigma_s >= p.sigma_floor:
            rate += p.alpha * (s[rows] + s[cols] - 2.0 * s.mean()) / (2.0 * sigma_s)
    if p.beta > 0:
        k = net.strengths
        sigma_k = k.std()
        if sigma_k >= p.sigma_floor:
            dk = k - k.mean()
            rate -= p.beta * dk[rows] * dk[cols] / sigma_k**2
    return w * rate


def strength_state_correlation(net: Network, s) -> float:
    """Pearson correlation between node states and node strengths."""
    return pearson(check_states(net, s), net.strengths)


def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except DegenerateError:
        return math.nan


def _limits(net: Network, s: np.ndarray):
    k = net.strengths
    return k, net.adjacency @ (1.0 / k), net.n * np.dot(k, s) / k.sum()


def integrate_adaptive(
    net0: Network,
    s0,
    p: AdaptiveParams,
    store_every: Optional[int] = None,
) -> tuple[Trajectory, Network]:
    """Synchronous Euler integration of states and link weights.

    Both rates are evaluated on the same snapshot ``(s, A)`` before either is
    applied. A weight that would step below zero is set to zero and the link is
    removed. ``dist_to_asymptote`` refers to the limit of the current network,
    which moves as the weights adapt.

    Returns the trajectory (with run metadata in ``traj.meta``) and the final
    network.
    """
    if not is_connected(net0):
        raise ValueError("adaptive integration requires a connected network")
    _require_strengths(net0)
    s = check_states(net0, s0).copy()
    c, dt = p.c, p.dt
    net = net0
    rows, cols, w = (a.copy() for a in net0.edges)
    removed = 0

    k, wv, global_inf = _limits(net, s)
    steps = p.n_steps
    rec = _Recorder(steps + 1, store_every, steps)
    rec.record(0, s, k, wv, global_inf)
    corr0 = _safe(strength_state_correlation, net, s)

    for step in range(1, steps + 1):
        ds = c * (net.adjacency @ s / k - s)
        da = weight_derivative(net, s, p)
        s = s + dt * ds
        if np.any(da != 0):
            w = w + dt * da
            if not np.all(np.isfinite(w)):
                raise DivergenceError(f"non-finite link weight at step {step}")
            gone = w <= 0
            if np.any(gone):
                removed += int(gone.sum())
                rows, cols, w = rows[~gone], cols[~gone], w[~gone]
            net = Network.from_arrays(net.n, rows, cols, w)
            if np.any(net.strengths < p.sigma_floor):
                i = int(np.argmin(net.strengths))
                raise ZeroStrengthError(f"strength of node {i} fell below sigma_floor at step {step}")
            k, wv, global_inf = _limits(net, s)
        rec.record(step, s, k, wv, global_inf)

    traj = rec.trajectory(dt)
    gs = traj["global_state"]
    traj.meta.update(
        alpha=p.alpha,
        beta=p.beta,
        c=c,
        dt=dt,
        t_end=p.t_end,
        n=net.n,
        delta_global_state=float(gs[-1] - gs[0]),
        initial_strength_state_correlation=corr0,
        final_strength_state_correlation=_safe(strength_state_correlation, net, s),
        final_strength_assortativity=_safe(strength_assortativity, net),
        links_removed=removed,
    )
    return traj, net

