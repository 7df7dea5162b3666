"""Batch experiments: homogenization speed versus assortativity (``fig2``) and
the adaptive-weight alpha/beta sweep (``fig3``).

Every run derives its own seeds from the master seed through
:class:`numpy.random.SeedSequence`, so results do not depend on run order or
on the number of worker processes.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .adaptive import AdaptiveParams, integrate_adaptive
from .diffusion import DiffusionParams, Trajectory, fit_log_slope, integrate, write_trajectory_csv
from .exceptions import DegenerateError, DivergenceError, GenerationError, NetworkError, ZeroStrengthError
from .netcore import Network
from .netgen import GenSpec, RewireSpec, fit_scaling, generate, strength_assortativity, xbs_rewire

log = logging.getLogger(__name__)

__all__ = [
    "Fig2Config",
    "Fig3Config",
    "Fig2Result",
    "SweepResult",
    "derive_seed",
    "fig2_instance",
    "fig3_instance",
    "run_fig2",
    "run_fig3",
    "load_config",
]

TOPOLOGIES = ("random", "scale_free")
ASSORT_MODES = ("neutral", "assortative", "disassortative")

# stream tags keep the generators of one run independent of each other
_NET, _STATES, _REWIRE = 0, 1, 2


def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 63-bit seed from a master seed and integer keys."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _coerce(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field(s): {sorted(unknown)}")
    clean = {}
    for key, value in data.items():
        clean[key] = tuple(value) if isinstance(value, list) else value
    return cls(**clean)


def _gen_spec(topology: str, n: int, mean_degree: float, self_loop_prob, weight_range, seed) -> GenSpec:
    if topology == "random":
        return GenSpec(
            n=n,
            model="erdos_renyi",
            p=min(1.0, mean_degree / (n - 1)),
            self_loop_prob=self_loop_prob,
            weight_range=tuple(weight_range),
            seed=seed,
        )
    return GenSpec(
        n=n,
        model="barabasi_albert",
        m=max(1, int(round(mean_degree / 2))),
        self_loop_prob=self_loop_prob,
        weight_range=tuple(weight_range),
        seed=seed,
    )


def _initial_states(n: int, state_range, seed: int) -> np.ndarray:
    lo, hi = state_range
    return np.random.default_rng(seed).uniform(lo, hi, n)


@dataclass(frozen=True)
class Fig2Config:
    """Homogenization-speed experiment. Defaults are paper scale.

    ``mean_degree`` sets the link probability of random topologies
    (``p = mean_degree / (n - 1)``) and ``m = mean_degree / 2`` for scale-free ones.
    """

    topology: str = "random"
    assort_mode: str = "neutral"
    n: int = 1000
    runs: int = 100
    c: float = 1.0
    dt: float = 0.01
    t_end: float = 10.0
    state_range: tuple[float, float] = (-1.0, 1.0)
    weight_range: tuple[float, float] = (0.0, 10.0)
    rewire_attempts: int = 30000
    self_loop_prob: float = 0.01
    mean_degree: float = 25.0
    decay_window: tuple[float, float] = (0.0, 2.0)
    master_seed: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.assort_mode not in ASSORT_MODES:
            raise ValueError(f"assort_mode must be one of {ASSORT_MODES}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.rewire_attempts < 0:
            raise ValueError("rewire_attempts must be >= 0")
        if not self.state_range[0] <= self.state_range[1]:
            raise ValueError("invalid state_range")
        if not 0 < self.mean_degree:
            raise ValueError("mean_degree must be positive")
        DiffusionParams(self.c, self.dt, self.t_end)

    @classmethod
    def paper(cls, **overrides) -> "Fig2Config":
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "Fig2Config":
        base = dict(n=200, runs=20, rewire_attempts=3000)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "Fig2Config":
        return _coerce(cls, data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Fig3Config:
    """Adaptive alpha/beta sweep. Defaults are paper scale.

    With ``paired_seeds`` every cell sees the same network and initial states
    for a given run index, so cell differences reflect alpha and beta alone.
    """

    topology: str = "random"
    n: int = 200
    density: float = 0.2
    alpha_grid: tuple[float, ...] = (0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)
    beta_grid: tuple[float, ...] = (0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)
    runs_per_cell: int = 10
    c: float = 1.0
    dt: float = 0.01
    t_end: float = 1.0
    state_range: tuple[float, float] = (-1.0, 1.0)
    weight_range: tuple[float, float] = (0.0, 10.0)
    self_loop_prob: float = 0.01
    sigma_floor: float = 1e-12
    paired_seeds: bool = True
    master_seed: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if not self.alpha_grid or not self.beta_grid:
            raise ValueError("alpha_grid and beta_grid must be non-empty")
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        AdaptiveParams(c=self.c, dt=self.dt, t_end=self.t_end, sigma_floor=self.sigma_floor)

    @classmethod
    def paper(cls, **overrides) -> "Fig3Config":
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> "Fig3Config":
        base = dict(n=100, runs_per_cell=5, alpha_grid=(0.0, 0.05, 0.5, 5.0), beta_grid=(0.0, 0.05, 0.5, 5.0))
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "Fig3Config":
        return _coerce(cls, data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def cells(self) -> list[tuple[float, float]]:
        return [(a, b) for a in self.alpha_grid for b in self.beta_grid]


def load_config(path, kind: str):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    cls = {"fig2": Fig2Config, "fig3": Fig3Config}[kind]
    return cls.from_dict(data)


# ---------------------------------------------------------------------------
# Fig. 2: homogenization speed


def fig2_instance(cfg: Fig2Config, run: int) -> tuple[Network, np.ndarray, dict]:
    """Network and initial states for one run.

    The base (non-assortative) network and the states depend only on the
    master seed, topology and run index, so the three assortativity modes
    rewire the same base network.
    """
    topo = TOPOLOGIES.index(cfg.topology)
    net_seed = derive_seed(cfg.master_seed, topo, run, _NET)
    spec = _gen_spec(cfg.topology, cfg.n, cfg.mean_degree, cfg.self_loop_prob, cfg.weight_range, net_seed)
    net = generate(spec)
    info = {"net_seed": net_seed}
    if cfg.assort_mode != "neutral":
        rw_seed = derive_seed(cfg.master_seed, topo, run, _REWIRE, ASSORT_MODES.index(cfg.assort_mode))
        rw = RewireSpec(mode=cfg.assort_mode, attempts=cfg.rewire_attempts, seed=rw_seed, weight_range=cfg.weight_range)
        net, stats = xbs_rewire(net, rw, return_stats=True)
        info.update(rewire_seed=rw_seed, rewire_stats=asdict(stats))
    state_seed = derive_seed(cfg.master_seed, topo, run, _STATES)
    s0 = _initial_states(cfg.n, cfg.state_range, state_seed)
    info["state_seed"] = state_seed
    return net, s0, info


def _fig2_run(cfg: Fig2Config, run: int) -> dict:
    try:
        net, s0, info = fig2_instance(cfg, run)
    except (GenerationError, NetworkError) as exc:
        return {"run": run, "status": "failed", "reason": f"{type(exc).__name__}: {exc}"}
    traj = integrate(net, s0, DiffusionParams(cfg.c, cfg.dt, cfg.t_end))
    try:
        assort = strength_assortativity(net)
    except ValueError:
        assort = float("nan")
    try:
        mu = fit_scaling(net).mu
    except ValueError:
        mu = float("nan")
    info.update(run=run, status="ok", strength_assortativity=assort, scaling_mu=mu)
    return {**info, "trajectory": traj}


@dataclass
class Fig2Result:
    config: Fig2Config
    times: np.ndarray
    trajectories: dict[int, Trajectory]
    runs: list[dict] = field(default_factory=list)

    @property
    def ok_runs(self) -> list[int]:
        return sorted(self.trajectories)

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.runs if r["status"] != "ok"]

    def _stack(self, name: str) -> np.ndarray:
        return np.vstack([self.trajectories[r][name] for r in self.ok_runs])

    @property
    def dist(self) -> np.ndarray:
        """``runs x times`` array of ``|h^T s - h^T s_inf|``."""
        return self._stack("dist_to_asymptote")

    @property
    def mean_dist(self) -> np.ndarray:
        return self.dist.mean(axis=0)

    @property
    def std_dist(self) -> np.ndarray:
        return self.dist.std(axis=0)

    def mean_dist_at(self, t: float) -> float:
        return float(self.mean_dist[int(np.argmin(np.abs(self.times - t)))])

    @property
    def decay_rate(self) -> float:
        """Early-window log-linear slope of the mean distance curve."""
        return fit_log_slope(self.times, self.mean_dist, self.config.decay_window)

    def decay_rate_or_none(self) -> Optional[float]:
        if not self.ok_runs:
            return None
        try:
            return self.decay_rate
        except DegenerateError:
            return None

    def aggregate_rows(self):
        if not self.ok_runs:
            return iter(())
        gs = self._stack("global_state")
        cols = [self.times, self.mean_dist, self.std_dist, gs.mean(axis=0), gs.std(axis=0)]
        return zip(*(c.tolist() for c in cols))

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        (out / "runs").mkdir(parents=True, exist_ok=True)
        for run in self.ok_runs:
            write_trajectory_csv(self.trajectories[run], out / "runs" / f"{run:04d}.csv")
        _write_csv(
            out / "aggregate.csv",
            ("t", "mean_dist_to_asymptote", "std_dist_to_asymptote", "mean_global_state", "std_global_state"),
            self.aggregate_rows(),
        )
        meta = {
            "experiment": "fig2",
            "version": __version__,
            "config": self.config.to_dict(),
            "n_ok": len(self.ok_runs),
            "decay_rate": self.decay_rate_or_none(),
            "runs": self.runs,
        }
        with open(out / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        return out


def _parallel(fn, tasks, jobs: int):
    if jobs == 1:
        return [fn(*t) for t in tasks]
    return Parallel(n_jobs=jobs)(delayed(fn)(*t) for t in tasks)


def run_fig2(cfg: Fig2Config, out_dir=None, jobs: int = 1) -> Fig2Result:
    """Generate, optionally rewire, and integrate ``cfg.runs`` networks."""
    results = _parallel(_fig2_run, [(cfg, r) for r in range(cfg.runs)], jobs)
    results.sort(key=lambda r: r["run"])
    trajectories = {}
    runs = []
    for res in results:
        traj = res.pop("trajectory", None)
        if traj is not None:
            trajectories[res["run"]] = traj
        else:
            log.warning("fig2 run %d failed: %s", res["run"], res["reason"])
        runs.append(res)
    times = DiffusionParams(cfg.c, cfg.dt, cfg.t_end).n_steps
    result = Fig2Result(cfg, np.arange(times + 1) * cfg.dt, trajectories, runs)
    if out_dir is not None:
        result.write(out_dir)
    return result


# ---------------------------------------------------------------------------
# Fig. 3: adaptive alpha/beta sweep


def fig3_instance(cfg: Fig3Config, cell: int, run: int) -> tuple[Network, np.ndarray, dict]:
    topo = TOPOLOGIES.index(cfg.topology)
    key = (topo, run) if cfg.paired_seeds else (topo, cell, run)
    net_seed = derive_seed(cfg.master_seed, *key, _NET)
    state_seed = derive_seed(cfg.master_seed, *key, _STATES)
    mean_degree = cfg.density * (cfg.n - 1)
    spec = _gen_spec(cfg.topology, cfg.n, mean_degree, cfg.self_loop_prob, cfg.weight_range, net_seed)
    net = generate(spec)
    s0 = _initial_states(cfg.n, cfg.state_range, state_seed)
    return net, s0, {"net_seed": net_seed, "state_seed": state_seed}


_RECORD_FIELDS = (
    "cell",
    "alpha",
    "beta",
    "run",
    "status",
    "net_seed",
    "state_seed",
    "delta_global_state",
    "initial_strength_state_correlation",
    "final_strength_state_correlation",
    "final_strength_assortativity",
    "links_removed",
    "reason",
)


def _fig3_run(cfg: Fig3Config, cell: int, run: int) -> tuple[dict, Optional[Trajectory]]:
    alpha, beta = cfg.cells[cell]
    rec = {"cell": cell, "alpha": alpha, "beta": beta, "run": run, "reason": ""}
    try:
        net, s0, seeds = fig3_instance(cfg, cell, run)
        rec.update(seeds)
        params = AdaptiveParams(alpha=alpha, beta=beta, c=cfg.c, dt=cfg.dt, t_end=cfg.t_end, sigma_floor=cfg.sigma_floor)
        traj, _ = integrate_adaptive(net, s0, params)
    except (GenerationError, NetworkError, ZeroStrengthError, DivergenceError) as exc:
        rec.update(status="failed", reason=f"{type(exc).__name__}: {exc}")
        return rec, None
    rec["status"] = "ok"
    for key in _RECORD_FIELDS[7:12]:
        rec[key] = traj.meta[key]
    return rec, traj


@dataclass
class SweepResult:
    config: Fig3Config
    records: list[dict]
    trajectories: dict[tuple[int, int], Trajectory] = field(default_factory=dict)

    def cell_values(self, cell: int) -> np.ndarray:
        return np.array([r["delta_global_state"] for r in self.records if r["cell"] == cell and r["status"] == "ok"])

    @property
    def cells(self) -> list[dict]:
        out = []
        for idx, (alpha, beta) in enumerate(self.config.cells):
            v = self.cell_values(idx)
            out.append({
                "cell": idx,
                "alpha": alpha,
                "beta": beta,
                "n_ok": int(v.size),
                "n_failed": sum(1 for r in self.records if r["cell"] == idx and r["status"] != "ok"),
                "mean_delta_global_state": float(v.mean()) if v.size else float("nan"),
                "std_delta_global_state": float(v.std()) if v.size else float("nan"),
            })
        return out

    def grid(self, stat: str = "mean") -> np.ndarray:
        """``len(alpha_grid) x len(beta_grid)`` array of per-cell mean or std."""
        key = f"{stat}_delta_global_state"
        vals = [c[key] for c in self.cells]
        return np.array(vals).reshape(len(self.config.alpha_grid), len(self.config.beta_grid))

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        (out / "runs").mkdir(parents=True, exist_ok=True)
        for (cell, run), traj in sorted(self.trajectories.items()):
            write_trajectory_csv(traj, out / "runs" / f"c{cell:03d}_r{run:04d}.csv")
        _write_csv(out / "runs.csv", _RECORD_FIELDS, ([r.get(k, "") for k in _RECORD_FIELDS] for r in self.records))
        cells = self.cells
        _write_csv(out / "aggregate.csv", tuple(cells[0]), (tuple(c.values()) for c in cells))
        meta = {
            "experiment": "fig3",
            "version": __version__,
            "config": self.config.to_dict(),
            "n_records": len(self.records),
            "n_failed": sum(1 for r in self.records if r["status"] != "ok"),
        }
        with open(out / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out


def run_fig3(cfg: Fig3Config, out_dir=None, jobs: int = 1) -> SweepResult:
    """Run every (alpha, beta) cell ``cfg.runs_per_cell`` times."""
    tasks = [(cfg, cell, run) for cell in range(len(cfg.cells)) for run in range(cfg.runs_per_cell)]
    results = _parallel(_fig3_run, tasks, jobs)
    results.sort(key=lambda rt: (rt[0]["cell"], rt[0]["run"]))
    records = [r for r, _ in results]
    trajectories = {(r["cell"], r["run"]): t for r, t in results if t is not None}
    for r in records:
        if r["status"] != "ok":
            log.warning("fig3 cell %d run %d failed: %s", r["cell"], r["run"], r["reason"])
    result = SweepResult(cfg, records, trajectories)
    if out_dir is not None:
        result.write(out_dir)
    return result
