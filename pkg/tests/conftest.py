import numpy as np
import pytest

from socialdrift.netcore import Network
from socialdrift.netgen import GenSpec, generate

_CRITERIA: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    _CRITERIA.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def star(leaves=3, weight=1.0):
    return Network(leaves + 1, [(0, j, weight) for j in range(1, leaves + 1)])


def ring(n, weight=1.0):
    return Network(n, [(i, (i + 1) % n, weight) for i in range(n)])


def dyad(weight=1.0):
    return Network(2, [(0, 1, weight)])


def random_instance(rng: np.random.Generator, n_range=(10, 200), mean_degree=10.0):
    """Connected ER network, (0, 10] weights, 1% self-loops, states in [-1, 1]."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    spec = GenSpec(n=n, model="erdos_renyi", p=min(1.0, mean_degree / (n - 1)), seed=int(rng.integers(2**62)))
    net = generate(spec)
    return net, rng.uniform(-1.0, 1.0, n)


def dense_social(A: np.ndarray, s: np.ndarray, c: float) -> np.ndarray:
    """Per-node evaluation of c * (sum_j a_ij s_j / sum_j a_ij - s_i)."""
    out = np.empty(len(s))
    for i in range(len(s)):
        out[i] = c * (sum(A[i, j] * s[j] for j in range(len(s))) / sum(A[i]) - s[i])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
