"""Random weighted network generation, degree-preserving assortativity
rewiring and mixing diagnostics."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numpy as np
from scipy.stats import linregress

from .exceptions import DegenerateError, DisconnectedError, GenerationError, NetworkError
from .netcore import Network, is_connected

__all__ = [
    "GenSpec",
    "RewireSpec",
    "RewireStats",
    "ScalingFit",
    "generate",
    "uniform_weights",
    "xbs_rewire",
    "strength_assortativity",
    "degree_assortativity",
    "pearson",
    "mean_neighbor_strength",
    "fit_scaling",
]

MODELS = ("erdos_renyi", "barabasi_albert")


@dataclass(frozen=True)
class GenSpec:
    """Parameters for :func:`generate`.

    ``model`` is ``"erdos_renyi"`` (needs ``p``, the link probability or
    connection density) or ``"barabasi_albert"`` (needs ``m``, links per new
    node).
    """

    n: int
    model: str = "erdos_renyi"
    p: Optional[float] = None
    m: Optional[int] = None
    self_loop_prob: float = 0.01
    weight_range: tuple[float, float] = (0.0, 10.0)
    seed: int = 0
    max_retries: int = 1000

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.model == "erdos_renyi":
            if self.p is None or not 0 <= self.p <= 1:
                raise ValueError("erdos_renyi needs 0 <= p <= 1")
        else:
            if self.m is None or not 1 <= self.m < self.n:
                raise ValueError("barabasi_albert needs 1 <= m < n")
        if not 0 <= self.self_loop_prob <= 1:
            raise ValueError("self_loop_prob must lie in [0, 1]")
        lo, hi = self.weight_range
        if not 0 <= lo < hi:
            raise ValueError("weight_range must satisfy 0 <= lo < hi")
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")


@dataclass(frozen=True)
class RewireSpec:
    mode: str = "assortative"
    attempts: int = 30000
    seed: int = 0
    weight_range: tuple[float, float] = (0.0, 10.0)

    def __post_init__(self):
        if self.mode not in ("assortative", "disassortative"):
            raise ValueError("mode must be 'assortative' or 'disassortative'")
        if self.attempts < 0:
            raise ValueError("attempts must be >= 0")
        lo, hi = self.weight_range
        if not 0 <= lo < hi:
            raise ValueError("weight_range must satisfy 0 <= lo < hi")


@dataclass
class RewireStats:
    attempts: int = 0
    accepted: int = 0
    unchanged: int = 0
    shared_endpoint: int = 0
    multilink: int = 0
    disconnect: int = 0


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of ``k_nn ~ b * k**mu`` in log-log space."""

    mu: float
    b: float
    r2: float


def uniform_weights(rng: np.random.Generator, size, lo: float, hi: float) -> np.ndarray:
    """Uniform draws on ``(lo, hi]``, so a zero lower bound never yields a zero weight."""
    return hi - (hi - lo) * rng.random(size)


def generate(spec: GenSpec) -> Network:
    """Connected random network with random self-loops and uniform weights.

    Topologies that come out disconnected are discarded and redrawn from the
    same generator stream, up to ``spec.max_retries`` times.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.weight_range
    for _ in range(spec.max_retries):
        graph_seed = int(rng.integers(2**32))
        if spec.model == "erdos_renyi":
            g = nx.fast_gnp_random_graph(spec.n, spec.p, seed=graph_seed)
        else:
            g = nx.barabasi_albert_graph(spec.n, spec.m, seed=graph_seed)
        if not nx.is_connected(g):
            continue
        pairs = np.array(sorted((min(u, v), max(u, v)) for u, v in g.edges()), dtype=np.int64).reshape(-1, 2)
        looped = np.flatnonzero(rng.random(spec.n) < spec.self_loop_prob)
        rows = np.concatenate([pairs[:, 0], looped])
        cols = np.concatenate([pairs[:, 1], looped])
        weights = uniform_weights(rng, rows.size, lo, hi)
        return Network.from_arrays(spec.n, rows, cols, weights)
    raise GenerationError(
        f"no connected {spec.model} network with n={spec.n} after {spec.max_retries} attempts"
    )


def _reachable_all(nbrs: list[set], source: int, targets: set) -> bool:
    remaining = set(targets)
    remaining.discard(source)
    if not remaining:
        return True
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                if v in remaining:
                    remaining.discard(v)
                    if not remaining:
                        return True
                seen.add(v)
                queue.append(v)
    return False


def xbs_rewire(net: Network, spec: RewireSpec, return_stats: bool = False):
    """Degree-preserving Xulvi-Brunet & Sokolov rewiring.

    Each attempt picks two non-loop links with four distinct endpoints, ranks
    the endpoints by degree (ties broken by node id) and reconnects them
    highest-with-second and third-with-lowest (assortative) or
    highest-with-lowest and second-with-third (disassortative). Steps that
    would create a multi-link or disconnect the network are rolled back.
    Untouched links keep their weights; newly created links get a fresh
    uniform weight from ``spec.weight_range``. Self-loops are never selected.

    Returns the rewired network, or ``(network, RewireStats)`` when
    ``return_stats`` is set.
    """
    rows, cols, weights = net.edges
    loop = rows == cols
    if int((~loop).sum()) < 2:
        raise NetworkError("rewiring needs at least two non-loop links")
    if not is_connected(net):
        raise DisconnectedError("rewiring requires a connected network")

    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.weight_range
    deg = net.degrees
    links = [(int(i), int(j)) for i, j in zip(rows[~loop], cols[~loop])]
    weight_of = {pair: float(w) for pair, w in zip(links, weights[~loop])}
    nbrs: list[set] = [set() for _ in range(net.n)]
    for i, j in links:
        nbrs[i].add(j)
        nbrs[j].add(i)

    stats = RewireStats()
    n_links = len(links)
    for _ in range(spec.attempts):
        stats.attempts += 1
        x, y = rng.choice(n_links, size=2, replace=False)
        (a, b), (c, d) = links[x], links[y]
        if len({a, b, c, d}) < 4:
            stats.shared_endpoint += 1
            continue
        r = sorted((a, b, c, d), key=lambda v: (-deg[v], v))
        if spec.mode == "assortative":
            p1, p2 = (r[0], r[1]), (r[2], r[3])
        else:
            p1, p2 = (r[0], r[3]), (r[1], r[2])
        p1 = (min(p1), max(p1))
        p2 = (min(p2), max(p2))
        if {p1, p2} == {links[x], links[y]}:
            stats.unchanged += 1
            continue
        if p1[1] in nbrs[p1[0]] or p2[1] in nbrs[p2[0]]:
            stats.multilink += 1
            continue

        nbrs[a].discard(b); nbrs[b].discard(a)
        nbrs[c].discard(d); nbrs[d].discard(c)
        nbrs[p1[0]].add(p1[1]); nbrs[p1[1]].add(p1[0])
        nbrs[p2[0]].add(p2[1]); nbrs[p2[1]].add(p2[0])
        if not _reachable_all(nbrs, a, {b, c, d}):
            nbrs[p1[0]].discard(p1[1]); nbrs[p1[1]].discard(p1[0])
            nbrs[p2[0]].discard(p2[1]); nbrs[p2[1]].discard(p2[0])
            nbrs[a].add(b); nbrs[b].add(a)
            nbrs[c].add(d); nbrs[d].add(c)
            stats.disconnect += 1
            continue

        del weight_of[links[x]], weight_of[links[y]]
        w_new = uniform_weights(rng, 2, lo, hi)
        weight_of[p1] = float(w_new[0])
        weight_of[p2] = float(w_new[1])
        links[x], links[y] = p1, p2
        stats.accepted += 1

    out_rows = [i for i, _ in links] + rows[loop].tolist()
    out_cols = [j for _, j in links] + cols[loop].tolist()
    out_w = [weight_of[p] for p in links] + weights[loop].tolist()
    out = Network.from_arrays(net.n, out_rows, out_cols, out_w)
    return (out, stats) if return_stats else out


def pearson(x, y) -> float:
    """Pearson correlation; raises :class:`DegenerateError` if either input is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateError("correlation undefined: zero variance")
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return min(1.0, max(-1.0, r))


def _endpoint_correlation(net: Network, values: np.ndarray) -> float:
    rows, cols, _ = net.edges
    off = rows != cols
    if int(off.sum()) < 2:
        raise DegenerateError("assortativity needs at least two non-loop links")
    r, c = rows[off], cols[off]
    # both orderings of each undirected link
    x = np.concatenate([values[r], values[c]])
    y = np.concatenate([values[c], values[r]])
    return pearson(x, y)


def strength_assortativity(net: Network) -> float:
    """Pearson correlation of endpoint strengths over non-loop links."""
    return _endpoint_correlation(net, net.strengths)


def degree_assortativity(net: Network) -> float:
    return _endpoint_correlation(net, net.degrees.astype(float))


def mean_neighbor_strength(net: Network) -> np.ndarray:
    """Weighted local average of neighbour strengths for every node."""
    k = net.strengths
    return (net.adjacency @ k) / k


def fit_scaling(net: Network) -> ScalingFit:
    """Fit ``log k_nn = log b + mu * log k`` by least squares over nodes."""
    k = net.strengths
    if np.ptp(k) == 0:
        raise DegenerateError("scaling fit undefined: all strengths equal")
    knn = mean_neighbor_strength(net)
    fit = linregress(np.log(k), np.log(knn))
    return ScalingFit(mu=float(fit.slope), b=float(np.exp(fit.intercept)), r2=float(fit.rvalue**2))
