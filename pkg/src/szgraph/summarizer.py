"""Iterated check/refine loop producing a reduced graph.

The loop keeps refining an equitable partition, collects candidate
partitions and returns the one with the largest ``sze_idx`` together with
its reduced graph: one supernode per class, edge weight equal to the pair
density for regular pairs above ``d_prime`` and zero otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .graph import ContractError, Graph
from .refinement import DENSE_THRESHOLD, refine
from .regularity import (
    EquitablePartition,
    _Blocks,
    check_all_pairs,
    count_irregular,
    sze_idx,
)

log = logging.getLogger(__name__)

SUMMARY_MAGIC = "SZE-SUMMARY v1"


class SummaryFailed(RuntimeError):
    """No partition survived the loop; ``trace`` records what happened."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class SummaryConfig:
    epsilon: float = 0.8
    c_min: float = 0.9
    d_prime: float = 0.0
    initial_k: int = 4
    seed: int = 0
    classic_loop: bool = False
    fallback: bool = False
    dense_threshold: float = DENSE_THRESHOLD
    random_partner: bool = False
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ContractError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.c_min < 1:
            raise ContractError(f"c_min must lie in (0, 1), got {self.c_min}")
        if not 0 <= self.d_prime <= 1:
            raise ContractError(f"d_prime must lie in [0, 1], got {self.d_prime}")
        if self.initial_k < 2:
            raise ContractError("initial_k must be at least 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ContractError("seed must be a 64-bit unsigned integer")

    def describe(self) -> dict:
        return asdict(self)


@dataclass
class ReducedGraph:
    """Weighted summary graph with one node per partition class."""

    k: int
    m: int
    n: int
    membership: np.ndarray
    weights: np.ndarray
    internal: np.ndarray
    epsilon: float
    d_prime: float = 0.0
    sze: float = 0.0

    def __post_init__(self):
        self.membership = np.asarray(self.membership, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.internal = np.asarray(self.internal, dtype=np.float64)
        if self.weights.shape != (self.k, self.k):
            raise ContractError("weight matrix shape does not match k")
        if len(self.membership) != self.n or len(self.internal) != self.k:
            raise ContractError("membership or internal densities have the wrong length")
        if not np.array_equal(self.weights, self.weights.T) or np.any(np.diag(self.weights)):
            raise ContractError("weights must be symmetric with a zero diagonal")

    def classes(self):
        return [np.flatnonzero(self.membership == i) for i in range(self.k)]


@dataclass
class IterationStats:
    k: int
    m: int
    irregular: int
    sze: float
    compression: float
    collected: bool = False


class Summary(NamedTuple):
    partition: EquitablePartition
    reduced: ReducedGraph
    trace: list


def initial_partition(g: Graph, k: int, seed, epsilon: float = 0.1) -> EquitablePartition:
    """Shuffle the vertices and cut ``k`` classes of ``n // k``; the rest is ``c0``."""
    if k < 2:
        raise ContractError("initial partition needs k >= 2")
    if k > g.n:
        raise ContractError(f"k={k} exceeds n={g.n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.n)
    m = g.n // k
    classes = [perm[i * m:(i + 1) * m] for i in range(k)]
    return EquitablePartition(classes, perm[k * m:], g.n, epsilon)


def compression_rate(p: EquitablePartition) -> float:
    return 1.0 - p.k / p.n


def build_reduced(g: Graph, p: EquitablePartition, verdicts: dict, d_prime: float = 0.0) -> ReducedGraph:
    """Reduced graph of ``p``: regular pair densities at or above ``d_prime``, else 0.

    ``internal`` holds each class's mean weight over distinct vertex pairs,
    which is what the blow-up fills the diagonal blocks with.
    """
    k, m = p.k, p.m
    sums = _Blocks(g, p).sums()
    dens = sums / m ** 2
    w = np.zeros((k, k))
    for (r, s), v in verdicts.items():
        if v.regular and dens[r, s] >= d_prime:
            w[r, s] = w[s, r] = dens[r, s]
    internal = np.diag(sums) / (m * (m - 1)) if m > 1 else np.zeros(k)
    iu = np.triu_indices(k, 1)
    sze = float((dens[iu] ** 2).sum()) / k ** 2
    return ReducedGraph(k, m, p.n, p.labels(), w, internal, p.epsilon, d_prime, sze)


def summarize(g: Graph, cfg: SummaryConfig = None) -> Summary:
    """Run the summarization loop on ``g``.

    Every checked partition with at most ``eps * C(k, 2)`` irregular pairs
    is a candidate.  By default the loop refines candidates and stops at the
    first partition that has too many irregular pairs, whose refinement
    overflows the exceptional set, or whose compression rate drops below
    ``c_min``.  With ``cfg.classic_loop`` irregularity triggers refinement
    instead and the loop stops at the first candidate.
    """
    cfg = cfg or SummaryConfig()
    eps = cfg.epsilon
    rng = np.random.default_rng(cfg.seed)
    p = initial_partition(g, cfg.initial_k, rng, eps)
    trace = []
    collected = []  # (partition, verdicts)
    while True:
        verdicts = check_all_pairs(g, p, eps, cfg.threads)
        irr = count_irregular(verdicts)
        # a reduced graph needs a partition that passed the pair count
        pairs_ok = irr <= eps * math.comb(p.k, 2)
        compression = compression_rate(p)
        passes = pairs_ok and compression >= cfg.c_min
        stats = IterationStats(p.k, p.m, irr, sze_idx(g, p), compression, passes)
        trace.append(stats)
        if passes:
            collected.append((p, verdicts))
        log.info(
            "k=%d m=%d irregular=%d sze=%.6f compression=%.4f",
            stats.k, stats.m, irr, stats.sze, stats.compression,
        )
        if compression < cfg.c_min or pairs_ok == cfg.classic_loop:
            break
        # m < 4 would leave classes too small to check
        if p.m < 4:
            break
        outcome = refine(
            g, p, verdicts, rng=rng,
            threshold=cfg.dense_threshold, random_partner=cfg.random_partner,
        )
        if not outcome.regular or outcome.partition.k < 2:
            break
        if compression_rate(outcome.partition) < cfg.c_min:
            # could never become a candidate; skip its pair checks
            break
        p = outcome.partition

    if not collected:
        if not cfg.fallback:
            raise SummaryFailed("no partition was collected", trace)
        collected = [(p, verdicts)]
        trace[-1].collected = True
    best_p, best_v = _select(g, collected)
    return Summary(best_p, build_reduced(g, best_p, best_v, cfg.d_prime), trace)


def _select(g, collected):
    # maximum sze_idx; ties -> fewest classes
    scored = [(sze_idx(g, p), -p.k, i) for i, (p, _) in enumerate(collected)]
    _, _, i = max(scored, key=lambda t: (t[0], t[1], -t[2]))
    return collected[i]


# -- summary files ------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def format_summary(r: ReducedGraph) -> list:
    """Summary file lines (without trailing newlines)."""
    lines = [
        SUMMARY_MAGIC,
        f"n={r.n} k={r.k} m={r.m} eps={r.epsilon!r} dprime={r.d_prime!r} sze={_fmt(r.sze)}",
        " ".join(str(int(c)) for c in r.membership),
    ]
    upper = np.triu(r.weights, 1)
    for row in upper:
        lines.append(" ".join(_fmt(x) for x in row))
    lines.append("internal=" + " ".join(_fmt(x) for x in r.internal))
    return lines


def parse_summary(lines) -> ReducedGraph:
    lines = [ln.rstrip("\n") for ln in lines]
    if not lines or lines[0] != SUMMARY_MAGIC:
        raise ValueError(f"not a summary file (expected {SUMMARY_MAGIC!r})")
    try:
        head = dict(tok.split("=", 1) for tok in lines[1].split())
        n, k, m = int(head["n"]), int(head["k"]), int(head["m"])
        membership = np.array(lines[2].split(), dtype=np.int64)
        upper = np.array([ln.split() for ln in lines[3:3 + k]], dtype=np.float64).reshape(k, k)
        internal = np.zeros(k)
        for ln in lines[3 + k:]:
            if ln.startswith("internal="):
                internal = np.array(ln[len("internal="):].split(), dtype=np.float64)
    except (KeyError, ValueError, IndexError) as exc:
        raise ValueError(f"malformed summary: {exc}") from None
    w = np.triu(upper, 1)
    w = w + w.T
    return ReducedGraph(
        k, m, n, membership, w, internal,
        float(head["eps"]), float(head["dprime"]), float(head["sze"]),
    )


def write_summary(r: ReducedGraph, path) -> None:
    Path(path).write_text("\n".join(format_summary(r)) + "\n", encoding="utf-8")


def read_summary(path) -> ReducedGraph:
    return parse_summary(Path(path).read_text(encoding="utf-8").splitlines())
