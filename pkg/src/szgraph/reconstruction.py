"""Blow a reduced graph back up to n vertices and measure lp reconstruction error."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .graph import ContractError, Graph

DM_MAGIC = b"SZEDMv1\0"


def density_matrix(g: Graph) -> np.ndarray:
    """Dense weighted adjacency of ``g``."""
    return np.array(g.to_dense(), dtype=np.float64)


def blow_up(r, internal=None) -> np.ndarray:
    """n x n density matrix of the reconstructed graph.

    Cross-class entries take the reduced-graph weight, same-class entries
    the class's internal density; the diagonal and every row/column of an
    exceptional (``-1``) vertex are zero.
    """
    internal = r.internal if internal is None else np.asarray(internal, dtype=np.float64)
    k = r.k
    if r.weights.shape != (k, k) or len(internal) != k:
        raise ContractError("reduced graph weights/internal densities do not match k")
    labels = np.asarray(r.membership, dtype=np.int64)
    if labels.max(initial=-1) >= k:
        raise ContractError("membership refers to a class beyond k")
    ext = np.zeros((k + 1, k + 1))
    ext[:k, :k] = r.weights
    ext[np.arange(k), np.arange(k)] = internal
    # -1 indexes the trailing all-zero row/column
    out = ext[np.ix_(labels, labels)]
    np.fill_diagonal(out, 0.0)
    return out


def reconstruction_error(a, b, p: float = 2, normalized: bool = False) -> float:
    """``(sum |a - b|**p) ** (1/p)`` over all entries; ``normalized`` divides by ``n**(2/p)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch: {a.shape} vs {b.shape}")
    if p < 1:
        raise ContractError("p must be at least 1")
    diff = np.abs(a - b).ravel()
    if p == 1:
        err = float(diff.sum())
    elif p == 2:
        err = float(np.sqrt(diff @ diff))
    else:
        err = float(np.sum(diff ** p) ** (1.0 / p))
    if normalized:
        err /= a.shape[0] ** (2.0 / p)
    return err


def write_density_matrix(mat, path) -> None:
    """Binary dump: magic, n as little-endian u64, row-major little-endian float32."""
    mat = np.asarray(mat)
    n = mat.shape[0]
    with open(path, "wb") as fh:
        fh.write(DM_MAGIC)
        fh.write(struct.pack("<Q", n))
        fh.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())


def read_density_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != DM_MAGIC:
        raise ValueError("not a density matrix dump")
    (n,) = struct.unpack("<Q", raw[8:16])
    body = np.frombuffer(raw, dtype="<f4", offset=16)
    if body.size != n * n:
        raise ValueError(f"expected {n * n} entries, found {body.size}")
    return body.reshape(n, n).astype(np.float64)
