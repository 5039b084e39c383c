"""Undirected weighted graphs and the density primitives built on them.

A :class:`Graph` stores a symmetric weight matrix with entries in ``[0, 1]``
and an empty diagonal.  Below ``dense_threshold`` vertices the matrix is a
dense ``numpy`` array, above it a ``scipy.sparse`` CSR matrix.  Every
algorithm in the package reads the graph through :meth:`Graph.block`, which
returns a dense sub-matrix for a pair of vertex lists, so both storage
layouts behave identically.
"""

from __future__ import annotations

import re
import warnings
from pathlib import Path

import numpy as np
from scipy import sparse

DENSE_THRESHOLD = 8192
_N_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)\s*$")


class ContractError(ValueError):
    """Raised when a caller violates a documented precondition."""


class EdgeListError(ValueError):
    """Malformed edge-list input; ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class Graph:
    """Immutable undirected graph with weights in [0, 1] and no self-loops."""

    def __init__(self, weights, *, dense_threshold: int = DENSE_THRESHOLD, validate: bool = True):
        n = weights.shape[0]
        if weights.shape != (n, n):
            raise ContractError(f"weight matrix must be square, got {weights.shape}")
        self.n = int(n)
        self.dense_threshold = dense_threshold
        if sparse.issparse(weights):
            w = sparse.csr_matrix(weights, dtype=np.float64)
            w.eliminate_zeros()
        else:
            w = np.array(weights, dtype=np.float64)
        if self.n > dense_threshold and not sparse.issparse(w):
            w = sparse.csr_matrix(w)
        elif self.n <= dense_threshold and sparse.issparse(w):
            w = w.toarray()
        if validate:
            _validate(w)
        if isinstance(w, np.ndarray):
            w.setflags(write=False)
        self._w = w

    @classmethod
    def from_edges(cls, n, edges, weights=None, **kwargs) -> "Graph":
        """Build a graph from an ``(E, 2)`` array of vertex pairs."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if weights is None:
            weights = np.ones(len(edges))
        weights = np.asarray(weights, dtype=np.float64)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ContractError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ContractError("self-loops are not allowed")
        # duplicate pairs keep the last weight
        lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
        keys = lo[::-1] * n + hi[::-1]
        _, first = np.unique(keys, return_index=True)
        lo, hi, weights = lo[::-1][first], hi[::-1][first], weights[::-1][first]
        u = np.concatenate([lo, hi])
        v = np.concatenate([hi, lo])
        w = np.concatenate([weights, weights])
        if n > kwargs.get("dense_threshold", DENSE_THRESHOLD):
            mat = sparse.csr_matrix((w, (u, v)), shape=(n, n))
        else:
            mat = np.zeros((n, n))
            mat[u, v] = w
        return cls(mat, **kwargs)

    @property
    def is_dense(self) -> bool:
        return isinstance(self._w, np.ndarray)

    @property
    def weights(self):
        """The underlying (read-only) weight matrix."""
        return self._w

    def to_dense(self) -> np.ndarray:
        if self.is_dense:
            return self._w
        return self._w.toarray()

    def block(self, rows, cols) -> np.ndarray:
        """Dense sub-matrix ``W[rows][:, cols]``."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.is_dense:
            return self._w[np.ix_(rows, cols)]
        return self._w[rows][:, cols].toarray()

    def weight(self, u: int, v: int) -> float:
        return float(self._w[u, v])

    def degrees(self) -> np.ndarray:
        return np.asarray(self._w.sum(axis=1)).ravel()

    def edges(self):
        """Canonical edge arrays ``(u, v, w)`` with ``u < v``, sorted by ``(u, v)``."""
        if self.is_dense:
            u, v = np.nonzero(np.triu(self._w, 1))
            w = self._w[u, v]
        else:
            up = sparse.triu(self._w, 1).tocoo()
            order = np.lexsort((up.col, up.row))
            u, v, w = up.row[order], up.col[order], up.data[order]
        return u.astype(np.int64), v.astype(np.int64), np.asarray(w, dtype=np.float64)

    @property
    def num_edges(self) -> int:
        return len(self.edges()[0])

    def is_weighted(self) -> bool:
        w = self.edges()[2]
        return bool(np.any(w != 1.0))

    def __repr__(self):
        kind = "dense" if self.is_dense else "sparse"
        return f"Graph(n={self.n}, edges={self.num_edges}, {kind})"


def _validate(w):
    if sparse.issparse(w):
        data = w.data
        if (abs(w - w.T) > 1e-12).nnz:
            raise ContractError("weight matrix is not symmetric")
        if np.any(w.diagonal() != 0):
            raise ContractError("self-loops are not allowed")
    else:
        data = w
        if not np.allclose(w, w.T, rtol=0, atol=1e-12):
            raise ContractError("weight matrix is not symmetric")
        if np.any(np.diag(w) != 0):
            raise ContractError("self-loops are not allowed")
    if data.size and (data.min() < 0 or data.max() > 1):
        raise ContractError("weights must lie in [0, 1]")


def as_vertex_set(vs, n=None) -> np.ndarray:
    """Validate and return a vertex list as an int64 array."""
    arr = np.asarray(vs, dtype=np.int64).ravel()
    if len(np.unique(arr)) != len(arr):
        raise ContractError("vertex set contains duplicates")
    if n is not None and len(arr) and (arr.min() < 0 or arr.max() >= n):
        raise ContractError("vertex index out of range")
    return arr


def _disjoint_pair(g, ci, cj):
    ci = as_vertex_set(ci, g.n)
    cj = as_vertex_set(cj, g.n)
    if len(ci) == 0 or len(cj) == 0:
        raise ContractError("vertex sets must be non-empty")
    if np.intersect1d(ci, cj).size:
        raise ContractError("vertex sets must be disjoint")
    return ci, cj


def edge_density(g: Graph, ci, cj) -> float:
    """Summed cross weight of ``ci`` and ``cj`` over ``|ci|*|cj|``."""
    ci, cj = _disjoint_pair(g, ci, cj)
    return float(g.block(ci, cj).sum()) / (len(ci) * len(cj))


def internal_density(g: Graph, c) -> float:
    """``e(c, c) / |c|**2`` with every internal edge counted once.

    A clique on ``m`` vertices therefore scores ``(m - 1) / (2 m)``, never 1.
    """
    c = as_vertex_set(c, g.n)
    if len(c) == 0:
        raise ContractError("vertex set must be non-empty")
    return float(g.block(c, c).sum()) / 2.0 / len(c) ** 2


def within_probability(g: Graph, c) -> float:
    """Mean weight over the distinct vertex pairs of ``c`` (0 for singletons)."""
    c = as_vertex_set(c, g.n)
    m = len(c)
    if m < 2:
        return 0.0
    return float(g.block(c, c).sum()) / (m * (m - 1))


def bipartite_degrees(g: Graph, a, b):
    """Degrees across the bipartite graph between equal-size sets ``a`` and ``b``.

    Returns ``(degrees, mean)`` where ``degrees`` lists the vertices of ``a``
    followed by those of ``b`` and ``mean = sum(degrees) / (2 m)``.
    """
    a, b = _disjoint_pair(g, a, b)
    if len(a) != len(b):
        raise ContractError("bipartite classes must have equal size")
    x = g.block(a, b)
    deg = np.concatenate([x.sum(axis=1), x.sum(axis=0)])
    return deg, float(deg.sum()) / (2 * len(a))


def load_edge_list(path, n_hint=None, **kwargs) -> Graph:
    """Read a ``u v [w]`` edge list with ``#`` comments.

    Duplicate pairs keep the last weight.  Self-loop lines are skipped and
    reported through a single :class:`UserWarning`.
    """
    text = Path(path).read_text(encoding="utf-8")
    pairs = {}
    loops = 0
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _N_HEADER.match(line)
            if m:
                max_id = max(max_id, int(m.group(1)) - 1)
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(f"expected 'u v [w]', got {raw!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise EdgeListError(f"cannot parse {raw!r}", lineno) from None
        if u < 0 or v < 0:
            raise EdgeListError("vertex ids must be non-negative", lineno)
        if not 0.0 <= w <= 1.0:
            raise EdgeListError(f"weight {w} outside [0, 1]", lineno)
        max_id = max(max_id, u, v)
        if u == v:
            loops += 1
            continue
        pairs[(min(u, v), max(u, v))] = w
    if loops:
        warnings.warn(f"{path}: dropped {loops} self-loop line(s)", stacklevel=2)
    n = max_id + 1
    if n_hint is not None:
        n = max(n, int(n_hint))
    if pairs:
        edges = np.array(list(pairs.keys()), dtype=np.int64)
        weights = np.array(list(pairs.values()))
        # zero-weight lines carry no edge
        keep = weights > 0
        edges, weights = edges[keep], weights[keep]
    else:
        edges, weights = np.empty((0, 2), dtype=np.int64), np.empty(0)
    return Graph.from_edges(n, edges, weights, **kwargs)


def save_edge_list(g: Graph, path) -> None:
    """Write ``g`` in canonical order; weights are written only for weighted graphs."""
    u, v, w = g.edges()
    weighted = bool(np.any(w != 1.0))
    lines = [f"# n={g.n}"]
    if weighted:
        lines += [f"{a} {b} {float(x)!r}" for a, b, x in zip(u, v, w)]
    else:
        lines += [f"{a} {b}" for a, b in zip(u, v)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
