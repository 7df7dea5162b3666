from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialdrift.exceptions import DegenerateError, DisconnectedError, GenerationError, NetworkError
from socialdrift.netcore import Network, is_connected, validate
from socialdrift.netgen import (
    GenSpec,
    RewireSpec,
    degree_assortativity,
    fit_scaling,
    generate,
    mean_neighbor_strength,
    pearson,
    strength_assortativity,
    uniform_weights,
    xbs_rewire,
)

from conftest import random_instance, ring, star


def _pairs(net):
    rows, cols, w = net.edges
    return {(int(i), int(j)): float(x) for i, j, x in zip(rows, cols, w)}


@pytest.fixture(scope="module")
def base():
    return generate(GenSpec(n=120, p=0.08, seed=5))


class TestGenerate:
    def test_triangle_at_full_density(self):
        net = generate(GenSpec(n=3, p=1.0, self_loop_prob=0.0, seed=4))
        assert net.n_links == 3
        assert not net.self_loops.any()
        assert validate(net).valid

    def test_deterministic(self):
        spec = GenSpec(n=80, p=0.1, seed=11)
        assert generate(spec) == generate(spec)
        assert generate(spec) != generate(GenSpec(n=80, p=0.1, seed=12))

    def test_weights_in_range(self):
        net = generate(GenSpec(n=100, p=0.1, weight_range=(2.0, 3.0), seed=1))
        w = net.edges[2]
        assert w.min() > 2.0 and w.max() <= 3.0

    def test_self_loop_rate(self):
        net = generate(GenSpec(n=2000, p=0.005, self_loop_prob=0.05, seed=3))
        assert 60 <= int(net.self_loops.sum()) <= 140

    def test_barabasi_albert_heavy_tail(self):
        net = generate(GenSpec(n=1000, model="barabasi_albert", m=3, seed=2))
        deg = net.degrees
        assert deg.min() >= 3
        assert deg.max() > 10 * np.median(deg)

    def test_retry_cap(self):
        with pytest.raises(GenerationError):
            generate(GenSpec(n=50, p=0.01, seed=0, max_retries=5))

    def test_bad_specs(self):
        with pytest.raises(ValueError):
            GenSpec(n=1, p=0.5)
        with pytest.raises(ValueError):
            GenSpec(n=10, model="barabasi_albert")
        with pytest.raises(ValueError):
            GenSpec(n=10, p=0.5, weight_range=(3.0, 1.0))

    def test_uniform_weights_open_at_zero(self):
        w = uniform_weights(np.random.default_rng(0), 100000, 0.0, 1.0)
        assert w.min() > 0 and w.max() <= 1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["erdos_renyi", "barabasi_albert"]))
    def test_always_valid_and_connected(self, seed, model):
        spec = GenSpec(n=60, model=model, p=0.15, m=2, seed=seed)
        net = generate(spec)
        assert validate(net).valid
        assert is_connected(net)


class TestRewire:
    def test_zero_attempts_unchanged(self, base):
        out, stats = xbs_rewire(base, RewireSpec(attempts=0), return_stats=True)
        assert out == base
        assert stats.attempts == 0

    @pytest.mark.parametrize("mode", ["assortative", "disassortative"])
    def test_invariants(self, base, mode):
        out, stats = xbs_rewire(base, RewireSpec(mode=mode, attempts=2000, seed=1), return_stats=True)
        assert stats.accepted > 0
        assert np.array_equal(out.degrees, base.degrees)
        assert is_connected(out)
        assert validate(out).valid
        before, after = _pairs(base), _pairs(out)
        # only accepted steps touch weights, two links each
        differ = sum(1 for p, w in after.items() if before.get(p) != w)
        assert differ <= 2 * stats.accepted
        loops = [p for p in before if p[0] == p[1]]
        assert all(after[p] == before[p] for p in loops)
        counted = stats.accepted + stats.unchanged + stats.shared_endpoint + stats.multilink + stats.disconnect
        assert counted == stats.attempts == 2000

    def test_single_accepted_step_touches_two_links(self, base):
        for seed in range(50):
            out, stats = xbs_rewire(base, RewireSpec(mode="assortative", attempts=1, seed=seed), return_stats=True)
            if stats.accepted:
                before, after = _pairs(base), _pairs(out)
                assert len(set(before) - set(after)) == 2
                assert all(after[p] == w for p, w in before.items() if p in after)
                return
        pytest.fail("no accepted step in 50 seeds")

    def test_deterministic(self, base):
        spec = RewireSpec(mode="disassortative", attempts=500, seed=9)
        assert xbs_rewire(base, spec) == xbs_rewire(base, spec)

    def test_rejects_too_few_links(self):
        with pytest.raises(NetworkError):
            xbs_rewire(Network(2, [(0, 1, 1.0), (0, 0, 1.0)]), RewireSpec())

    def test_rejects_disconnected(self):
        with pytest.raises(DisconnectedError):
            xbs_rewire(Network(4, [(0, 1, 1.0), (2, 3, 1.0)]), RewireSpec())

    @staticmethod
    def _oracle_step(links, deg, mode):
        """All single-step outcomes of the rewiring rule, written independently."""
        out = []
        links = sorted(links)
        for x in range(len(links)):
            for y in range(x + 1, len(links)):
                nodes = set(links[x]) | set(links[y])
                if len(nodes) < 4:
                    continue
                r = sorted(nodes, key=lambda v: (-deg[v], v))
                new = [(r[0], r[1]), (r[2], r[3])] if mode == "assortative" else [(r[0], r[3]), (r[1], r[2])]
                new = [tuple(sorted(p)) for p in new]
                rest = [p for k, p in enumerate(links) if k not in (x, y)]
                if any(p in rest for p in new):
                    continue
                cand = tuple(sorted(rest + new))
                if _connected(4, cand):
                    out.append(cand)
        return out

    @pytest.mark.parametrize("mode", ["assortative", "disassortative"])
    def test_four_cycle_with_chord_exhaustive(self, mode):
        links = ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))
        net = Network(4, [(i, j, 1.0) for i, j in links])
        deg = net.degrees
        reachable = {tuple(sorted(links))}
        queue = deque(reachable)
        while queue:
            for nxt in self._oracle_step(queue.popleft(), deg, mode):
                if nxt not in reachable:
                    reachable.add(nxt)
                    queue.append(nxt)
        for seed in range(10):
            out = xbs_rewire(net, RewireSpec(mode=mode, attempts=50, seed=seed))
            rows, cols, _ = out.edges
            assert tuple(sorted(zip(rows.tolist(), cols.tolist()))) in reachable

    @pytest.mark.parametrize("mode,sign", [("assortative", 1), ("disassortative", -1)])
    def test_moves_assortativity(self, mode, sign):
        moved = 0
        for seed in range(20):
            net = generate(GenSpec(n=100, p=0.08, seed=seed))
            out = xbs_rewire(net, RewireSpec(mode=mode, attempts=1000, seed=seed))
            moved += sign * (degree_assortativity(out) - degree_assortativity(net)) > 0
        assert moved == 20


def _connected(n, links):
    adj = {i: set() for i in range(n)}
    for i, j in links:
        adj[i].add(j)
        adj[j].add(i)
    seen, stack = {0}, [0]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


class TestMetrics:
    def test_star_strength_assortativity(self):
        assert strength_assortativity(star()) == pytest.approx(-1.0)

    def test_ring_is_degenerate(self):
        with pytest.raises(DegenerateError):
            strength_assortativity(ring(6))

    def test_pearson_matches_numpy(self, rng):
        x, y = rng.normal(size=50), rng.normal(size=50)
        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-14)

    def test_large_er_is_neutral(self):
        net = generate(GenSpec(n=1000, p=0.025, seed=7))
        assert abs(strength_assortativity(net)) < 0.05
        assert abs(fit_scaling(net).mu) < 0.1

    def test_star_scaling(self):
        fit = fit_scaling(star())
        assert fit.mu == pytest.approx(-1.0)
        assert fit.b == pytest.approx(3.0)
        assert mean_neighbor_strength(star()).tolist() == [1.0, 3.0, 3.0, 3.0]

    def test_complete_graph_scaling_degenerate(self):
        net = Network(4, [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)])
        with pytest.raises(DegenerateError):
            fit_scaling(net)

    def test_assortative_rewiring_raises_mu(self):
        net = generate(GenSpec(n=300, model="barabasi_albert", m=5, seed=3))
        up = xbs_rewire(net, RewireSpec(mode="assortative", attempts=5000, seed=1))
        down = xbs_rewire(net, RewireSpec(mode="disassortative", attempts=5000, seed=1))
        assert fit_scaling(up).mu > fit_scaling(net).mu > fit_scaling(down).mu

    def test_random_instance_helper(self, rng):
        net, s = random_instance(rng, (10, 20))
        assert s.shape == (net.n,)
