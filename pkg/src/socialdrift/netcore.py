"""Symmetric weighted networks with optional self-loops.

A :class:`Network` stores each undirected link once as ``(i, j, a_ij)`` with
``i <= j`` and mirrors it into a CSR adjacency matrix, so ``a_ij == a_ji``
holds by construction. A self-loop ``(i, i, a_ii)`` appears once on the
diagonal and contributes ``a_ii`` once to the strength ``k_i = sum_j a_ij``.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, TextIO, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exceptions import NetworkError, ZeroStrengthError

__all__ = [
    "Network",
    "ValidationReport",
    "validate",
    "is_connected",
    "local_average",
    "strengths",
    "check_states",
    "read_edgelist",
    "write_edgelist",
    "read_states",
    "write_states",
    "DENSE_MAX_N",
]

# Dense mirrors are for oracle checks only.
DENSE_MAX_N = 2000

PathOrFile = Union[str, os.PathLike, TextIO]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class Network:
    """Immutable symmetric weighted network.

    Parameters
    ----------
    n : int
        Number of nodes, ids ``0 .. n-1``.
    edges : iterable of (i, j, weight)
        Undirected links. Each unordered pair may appear once; ``(i, j)`` and
        ``(j, i)`` count as the same pair. Weights must be ``> 0``.
    """

    __slots__ = ("_n", "_rows", "_cols", "_weights", "_adj", "_strengths", "_degrees")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]] = ()):
        edges = list(edges)
        if edges:
            arr = np.asarray(edges, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise NetworkError("edges must be (i, j, weight) triples")
            ij = arr[:, :2]
            if not np.all(ij == np.round(ij)):
                raise NetworkError("node ids must be integers")
            rows, cols, weights = ij[:, 0].astype(np.int64), ij[:, 1].astype(np.int64), arr[:, 2]
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            weights = np.empty(0, dtype=float)
        self._init_arrays(int(n), rows, cols, weights)

    @classmethod
    def from_arrays(cls, n: int, rows, cols, weights) -> "Network":
        """Build from parallel arrays of link endpoints and weights."""
        net = cls.__new__(cls)
        net._init_arrays(
            int(n),
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(weights, dtype=float),
        )
        return net

    @classmethod
    def from_dense(cls, matrix) -> "Network":
        """Build from a dense symmetric matrix; zero entries mean no link."""
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NetworkError("adjacency matrix must be square")
        if not np.array_equal(a, a.T):
            raise NetworkError("adjacency matrix is not symmetric")
        if np.any(a < 0):
            raise NetworkError("negative link weight")
        rows, cols = np.nonzero(np.triu(a))
        return cls.from_arrays(a.shape[0], rows, cols, a[rows, cols])

    def _init_arrays(self, n, rows, cols, weights):
        if n < 1:
            raise NetworkError("network needs at least one node")
        if not (rows.shape == cols.shape == weights.shape) or rows.ndim != 1:
            raise NetworkError("edge arrays must be 1-d and equally long")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise NetworkError(f"node id out of range for n={n}")
        if np.any(weights <= 0):
            raise NetworkError("link weights must be > 0; absent links are not stored")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        order = np.lexsort((hi, lo))
        lo, hi, weights = lo[order], hi[order], weights[order].copy()
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                k = int(np.argmax(dup))
                raise NetworkError(f"duplicate link ({lo[k]}, {hi[k]})")
        self._n = n
        self._rows = _frozen(lo)
        self._cols = _frozen(hi)
        self._weights = _frozen(weights)

        off = lo != hi
        r = np.concatenate([lo, hi[off]])
        c = np.concatenate([hi, lo[off]])
        d = np.concatenate([weights, weights[off]])
        adj = sp.csr_array((d, (r, c)), shape=(n, n))
        adj.sort_indices()
        for a in (adj.data, adj.indices, adj.indptr):
            a.flags.writeable = False
        self._adj = adj
        # Row sums in CSR order: k_i = sum_j a_ij with a self-loop counted once.
        row_of = np.repeat(np.arange(n), np.diff(adj.indptr))
        self._strengths = _frozen(np.bincount(row_of, weights=adj.data, minlength=n).astype(float))
        self._degrees = _frozen(np.bincount(lo[off], minlength=n) + np.bincount(hi[off], minlength=n))

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Read-only ``(rows, cols, weights)`` with ``rows <= cols``, sorted."""
        return self._rows, self._cols, self._weights

    @property
    def n_links(self) -> int:
        return int(self._rows.size)

    @property
    def adjacency(self) -> sp.csr_array:
        """Symmetric CSR matrix ``A``. Treat as read-only."""
        return self._adj

    @property
    def strengths(self) -> np.ndarray:
        return self._strengths

    @property
    def degrees(self) -> np.ndarray:
        """Number of distinct non-self neighbours per node."""
        return self._degrees

    @property
    def self_loops(self) -> np.ndarray:
        """Boolean mask over :attr:`edges` marking self-loops."""
        return self._rows == self._cols

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour ids (self included if looped) and weights of node ``i``."""
        if not 0 <= i < self._n:
            raise IndexError(f"node {i} out of range for n={self._n}")
        lo, hi = self._adj.indptr[i], self._adj.indptr[i + 1]
        return self._adj.indices[lo:hi], self._adj.data[lo:hi]

    def weight(self, i: int, j: int) -> float:
        ids, w = self.neighbors(i)
        pos = np.searchsorted(ids, j)
        if pos < ids.size and ids[pos] == j:
            return float(w[pos])
        return 0.0

    def has_link(self, i: int, j: int) -> bool:
        return self.weight(i, j) > 0

    def with_weights(self, weights) -> "Network":
        """Same link set with new weights (aligned with :attr:`edges`); zeros drop the link."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != self._weights.shape:
            raise NetworkError("weights must align with edges")
        keep = weights != 0
        return Network.from_arrays(self._n, self._rows[keep], self._cols[keep], weights[keep])

    def to_dense(self, max_n: int = DENSE_MAX_N) -> np.ndarray:
        if self._n > max_n:
            raise NetworkError(f"dense mirror limited to n <= {max_n}")
        return self._adj.toarray()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._rows, other._rows)
            and np.array_equal(self._cols, other._cols)
            and np.array_equal(self._weights, other._weights)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Network(n={self._n}, links={self.n_links}, self_loops={int(self.self_loops.sum())})"


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.valid


def validate(net: Network) -> ValidationReport:
    """Check the model requirements: symmetry, finite weights, every k_i > 0."""
    report = ValidationReport()
    adj = net.adjacency
    if (adj != adj.T).nnz:
        report.problems.append("adjacency is not symmetric")
    _, _, w = net.edges
    bad = ~np.isfinite(w)
    if np.any(bad):
        report.problems.append(f"non-finite weight on {int(bad.sum())} link(s)")
    k = net.strengths
    for i in np.flatnonzero(~(k > 0)):
        report.problems.append(f"zero strength at node {int(i)}")
    recomputed = np.asarray(adj.sum(axis=1)).ravel()
    if np.all(np.isfinite(recomputed)) and not np.allclose(k, recomputed, rtol=1e-12, atol=0):
        report.problems.append("cached strengths disagree with row sums")
    return report


def is_connected(net: Network) -> bool:
    """True iff every node is reachable from every other (self-loops ignored)."""
    if net.n == 1:
        return True
    ncomp, _ = connected_components(net.adjacency, directed=False)
    return ncomp == 1


def strengths(net: Network) -> np.ndarray:
    return net.strengths


def local_average(net: Network, x, i: int) -> float:
    """Weighted average of ``x`` over the neighbours of ``i`` (self-loop included)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n,):
        raise ValueError(f"x must have length {net.n}")
    ids, w = net.neighbors(i)
    k = net.strengths[i]
    if not k > 0:
        raise ZeroStrengthError(f"zero strength at node {i}")
    return float(np.dot(w, x[ids]) / k)


def check_states(net: Network, s) -> np.ndarray:
    """Return ``s`` as a float vector after checking length and finiteness."""
    s = np.asarray(s, dtype=float)
    if s.shape != (net.n,):
        raise ValueError(f"state vector must have length {net.n}, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("state vector has non-finite entries")
    return s


def _open(target: PathOrFile, mode: str):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, encoding="utf-8", newline="\n")
    return _Borrowed(target)


class _Borrowed:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        return False


def write_edgelist(net: Network, target: PathOrFile) -> None:
    """Write the tab-separated edge list: ``n=<count>`` header, then ``i j w`` with i <= j."""
    rows, cols, w = net.edges
    with _open(target, "w") as fh:
        fh.write(f"n={net.n}\n")
        for i, j, a in zip(rows.tolist(), cols.tolist(), w.tolist()):
            fh.write(f"{i}\t{j}\t{a!r}\n")


def read_edgelist(source: PathOrFile) -> Network:
    n = None
    edges = []
    with _open(source, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if n is None:
                if not line.startswith("n="):
                    raise NetworkError(f"line {lineno}: expected 'n=<count>' header")
                n = int(line[2:])
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 3:
                raise NetworkError(f"line {lineno}: expected 'i<TAB>j<TAB>weight'")
            i, j = int(parts[0]), int(parts[1])
            if i > j:
                raise NetworkError(f"line {lineno}: links must be written with i <= j")
            edges.append((i, j, float(parts[2])))
    if n is None:
        raise NetworkError("missing 'n=<count>' header")
    return Network(n, edges)


def edgelist_string(net: Network) -> str:
    buf = io.StringIO()
    write_edgelist(net, buf)
    return buf.getvalue()


def write_states(s, target: PathOrFile) -> None:
    """One state per line under an ``s`` header."""
    with _open(target, "w") as fh:
        fh.write("s\n")
        for v in np.asarray(s, dtype=float).tolist():
            fh.write(f"{v!r}\n")


def read_states(source: PathOrFile) -> np.ndarray:
    values = []
    with _open(source, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line == "s":
                continue
            values.append(float(line.split(",")[0]))
    return np.asarray(values, dtype=float)
