"""Social diffusion on symmetric weighted networks.

Each node relaxes toward the weighted average of its neighbours::

    ds/dt = c (D^-1 A - I) s

Unlike physical (Laplacian) diffusion ``ds/dt = -c L s``, this does not
conserve the global state ``h^T s`` (``h`` is the all-ones vector); the
strength-state product ``g^T s`` is conserved instead. The module provides the
right-hand sides, a forward-Euler integrator with per-step observables, the
closed-form asymptotic predictors and the reduced (h^T s, w^T s) models.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .exceptions import DegenerateError, DisconnectedError, DivergenceError, ZeroStrengthError
from .netcore import Network, _open, check_states, is_connected

__all__ = [
    "DiffusionParams",
    "Observables",
    "Trajectory",
    "ReducedModel",
    "OBSERVABLE_FIELDS",
    "social_derivative",
    "physical_derivative",
    "integrate",
    "observables",
    "strength_state_product",
    "predict_asymptotic_mean",
    "predict_net_gain",
    "normalized_strengths",
    "w_vector",
    "u_vector",
    "instantaneous_drift",
    "reduced_model",
    "measure_decay_rate",
    "fit_log_slope",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

OBSERVABLE_FIELDS = (
    "global_state",
    "strength_state_product",
    "w_state_product",
    "mean",
    "min",
    "max",
    "dist_to_asymptote",
)
CSV_HEADER = ("t",) + OBSERVABLE_FIELDS


def n_steps_for(t_end: float, dt: float) -> int:
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not a whole number of steps dt={dt}")
    return steps


@dataclass(frozen=True)
class DiffusionParams:
    """Diffusion constant ``c``, Euler step ``dt`` and horizon ``t_end``.

    ``c * dt <= 1`` keeps every social-diffusion Euler update a convex
    combination of the current states.
    """

    c: float = 1.0
    dt: float = 0.01
    t_end: float = 10.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.c * self.dt > 1:
            raise ValueError("c * dt must not exceed 1")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        n_steps_for(self.t_end, self.dt)

    @property
    def n_steps(self) -> int:
        return n_steps_for(self.t_end, self.dt)


@dataclass(frozen=True)
class Observables:
    global_state: float
    strength_state_product: float
    w_state_product: float
    mean: float
    min: float
    max: float
    dist_to_asymptote: float


@dataclass
class Trajectory:
    """Per-step observables plus sparse state snapshots.

    ``observables`` maps each name in :data:`OBSERVABLE_FIELDS` to an array
    aligned with ``times``; ``states`` maps step index to a state copy.
    """

    times: np.ndarray
    observables: dict[str, np.ndarray]
    states: dict[int, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[max(self.states)]

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[min(self.states)]

    def at(self, t: float) -> dict[str, float]:
        """Observables at the recorded time closest to ``t``."""
        idx = int(np.argmin(np.abs(self.times - t)))
        return {name: float(v[idx]) for name, v in self.observables.items()}

    def to_csv(self, target) -> None:
        write_trajectory_csv(self, target)


def _require_strengths(net: Network) -> np.ndarray:
    k = net.strengths
    if not np.all(k > 0):
        i = int(np.flatnonzero(~(k > 0))[0])
        raise ZeroStrengthError(f"zero strength at node {i}")
    return k


def social_derivative(net: Network, s, c: float = 1.0) -> np.ndarray:
    """``c * (local_average(s) - s)`` for every node."""
    k = _require_strengths(net)
    s = check_states(net, s)
    return c * (net.adjacency @ s / k - s)


def physical_derivative(net: Network, s, c: float = 1.0) -> np.ndarray:
    """Laplacian diffusion ``-c (D - A) s`` with ``D`` the strength diagonal."""
    s = check_states(net, s)
    return c * (net.adjacency @ s - net.strengths * s)


def strength_state_product(net: Network, s) -> float:
    return float(np.dot(net.strengths, check_states(net, s)))


def predict_asymptotic_mean(net: Network, s0) -> float:
    """Strength-weighted mean of the initial states, the common limit state."""
    if not is_connected(net):
        raise DisconnectedError("asymptotic prediction needs a connected network")
    k = _require_strengths(net)
    return float(np.dot(k, check_states(net, s0)) / k.sum())


def normalized_strengths(net: Network) -> np.ndarray:
    """Strengths divided by their mean; exactly ``h`` when all strengths are equal."""
    k = net.strengths
    if np.ptp(k) == 0:
        return np.ones(net.n)
    return k / (k.sum() / net.n)


def predict_net_gain(net: Network, s0) -> float:
    """Asymptotic change of the global state, ``(g/<k> - h)^T s0``."""
    if not is_connected(net):
        raise DisconnectedError("asymptotic prediction needs a connected network")
    _require_strengths(net)
    return float(np.dot(normalized_strengths(net) - 1.0, check_states(net, s0)))


def w_vector(net: Network) -> np.ndarray:
    """Local average of self/neighbour strength ratios, ``A D^-1 h``."""
    k = _require_strengths(net)
    return net.adjacency @ (1.0 / k)


def u_vector(net: Network) -> np.ndarray:
    """Nested local average ``A D^-1 w``."""
    k = _require_strengths(net)
    return net.adjacency @ (w_vector(net) / k)


def instantaneous_drift(net: Network, s, c: float = 1.0) -> float:
    """Rate of change of the global state, ``c (w^T s - h^T s)``."""
    s = check_states(net, s)
    return float(c * (np.dot(w_vector(net), s) - s.sum()))


def observables(net: Network, s) -> Observables:
    """Observables of a single state. The asymptote is inferred from ``s``
    itself, which is valid because ``g^T s`` is conserved along a trajectory."""
    s = check_states(net, s)
    k = _require_strengths(net)
    w = w_vector(net)
    gs = float(np.dot(k, s))
    dist = abs(s.sum() - net.n * gs / k.sum()) if is_connected(net) else math.nan
    return Observables(
        global_state=float(s.sum()),
        strength_state_product=gs,
        w_state_product=float(np.dot(w, s)),
        mean=float(s.mean()),
        min=float(s.min()),
        max=float(s.max()),
        dist_to_asymptote=float(dist),
    )


class _Recorder:
    def __init__(self, n_points: int, store_every: Optional[int], last: int):
        self.values = np.empty((n_points, len(OBSERVABLE_FIELDS)))
        self.states: dict[int, np.ndarray] = {}
        self.store_every = store_every
        self.last = last

    def record(self, step: int, s: np.ndarray, k: np.ndarray, w: np.ndarray, global_inf: float):
        total = s.sum()
        lo, hi = s.min(), s.max()
        if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(total)):
            raise DivergenceError(f"non-finite state at step {step}")
        self.values[step] = (
            total,
            np.dot(k, s),
            np.dot(w, s),
            total / s.size,
            lo,
            hi,
            abs(total - global_inf),
        )
        every = self.store_every
        if step == 0 or step == self.last or (every and step % every == 0):
            self.states[step] = s.copy()

    def trajectory(self, dt: float) -> Trajectory:
        times = np.arange(self.values.shape[0]) * dt
        obs = {name: self.values[:, i].copy() for i, name in enumerate(OBSERVABLE_FIELDS)}
        return Trajectory(times=times, observables=obs, states=self.states)


def integrate(
    net: Network,
    s0,
    params: DiffusionParams,
    dynamics: str = "social",
    store_every: Optional[int] = None,
) -> Trajectory:
    """Forward-Euler integration ``s <- s + dt * ds/dt``.

    ``dynamics`` is ``"social"`` or ``"physical"``. Observables are recorded at
    every step; state snapshots only at the first and last step unless
    ``store_every`` is given. ``dist_to_asymptote`` is measured against the
    closed-form social-diffusion limit of ``s0`` (NaN for disconnected networks).

    The ``c * dt <= 1`` guard in :class:`DiffusionParams` is sized for social
    diffusion; physical diffusion is only stable while ``c * dt`` times the
    largest Laplacian eigenvalue stays below 2, and raises
    :class:`DivergenceError` otherwise.
    """
    if dynamics not in ("social", "physical"):
        raise ValueError("dynamics must be 'social' or 'physical'")
    k = _require_strengths(net)
    s = check_states(net, s0).copy()
    adj = net.adjacency
    c, dt = params.c, params.dt
    w = adj @ (1.0 / k)
    global_inf = net.n * np.dot(k, s) / k.sum() if is_connected(net) else math.nan

    steps = params.n_steps
    rec = _Recorder(steps + 1, store_every, steps)
    rec.record(0, s, k, w, global_inf)
    if dynamics == "social":
        for step in range(1, steps + 1):
            s = s + dt * (c * (adj @ s / k - s))
            rec.record(step, s, k, w, global_inf)
    else:
        for step in range(1, steps + 1):
            s = s + dt * (c * (adj @ s - k * s))
            rec.record(step, s, k, w, global_inf)
    traj = rec.trajectory(dt)
    traj.meta.update(dynamics=dynamics, c=c, dt=dt, t_end=params.t_end, n=net.n)
    return traj


@dataclass(frozen=True)
class ReducedModel:
    """Low-dimensional linear model of the slow global dynamics.

    For ``neutral`` and ``disassortative`` kinds ``matrix`` acts on
    ``(h^T s, w^T s)``; for ``assortative`` it is the 1x1 coefficient acting
    on ``h^T s`` alone.
    """

    kind: str
    c: float
    decay_rate: float
    matrix: np.ndarray
    b: Optional[float] = None

    def evolve(self, x0, t: float) -> np.ndarray:
        return expm(self.matrix * t) @ np.atleast_1d(np.asarray(x0, dtype=float))


def reduced_model(net: Optional[Network], kind: str, c: float = 1.0, b: Optional[float] = None) -> ReducedModel:
    """Reduced homogenization model for a mixing regime.

    ``neutral`` and ``disassortative`` close the (h^T s, w^T s) system with
    ``u ~ g/<k>`` and ``u ~ h`` respectively; ``assortative`` uses the scaling
    constant ``b`` (fitted from ``net`` when not supplied) and collapses to one
    dimension.
    """
    if kind == "neutral":
        m = c * np.array([[-1.0, 1.0], [0.0, 0.0]])
    elif kind == "disassortative":
        m = c * np.array([[-1.0, 1.0], [1.0, -1.0]])
    elif kind == "assortative":
        if b is None:
            if net is None:
                raise ValueError("assortative model needs b or a network to fit it from")
            from .netgen import fit_scaling

            b = fit_scaling(net).b
        if not b > 0:
            raise ValueError("scale constant b must be positive")
        if b < 1:
            raise DegenerateError(f"b={b} < 1 gives a growing mode; no homogenization rate")
        m = np.array([[-c * (b - 1.0) / b]])
        return ReducedModel(kind=kind, c=c, decay_rate=float(m[0, 0]), matrix=m, b=float(b))
    else:
        raise ValueError("kind must be 'neutral', 'disassortative' or 'assortative'")
    eig = np.sort(np.linalg.eigvals(m).real)
    # the zero eigenvalue is the conserved direction; the other one sets the speed
    rate = float(eig[0]) if abs(eig[1]) < abs(eig[0]) else float(eig[1])
    return ReducedModel(kind=kind, c=c, decay_rate=rate, matrix=m)


def fit_log_slope(times, values, window: tuple[float, float] = (0.0, 2.0)) -> float:
    """Least-squares slope of ``log(values)`` against ``times`` inside ``window``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if sel.sum() < 2:
        raise DegenerateError("fit window holds fewer than two samples")
    v = values[sel]
    if not np.all(v > 0):
        raise DegenerateError("distance underflows to zero inside the fit window")
    return float(np.polyfit(times[sel], np.log(v), 1)[0])


def measure_decay_rate(traj: Trajectory, window: tuple[float, float] = (0.0, 2.0)) -> float:
    """Empirical homogenization rate: log-linear slope of ``dist_to_asymptote``."""
    return fit_log_slope(traj.times, traj["dist_to_asymptote"], window)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, target) -> None:
    cols = [traj.times] + [traj.observables[name] for name in OBSERVABLE_FIELDS]
    with _open(target, "w") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in zip(*(c.tolist() for c in cols)):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_trajectory_csv(source) -> Trajectory:
    with _open(source, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        data = np.array([[float(x) for x in row] for row in reader], dtype=float).reshape(-1, len(CSV_HEADER))
    obs = {name: data[:, i + 1] for i, name in enumerate(OBSERVABLE_FIELDS)}
    return Trajectory(times=data[:, 0], observables=obs)
