"""Planted-clique graphs with inter/intra-cluster noise, and edge perturbation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ContractError, Graph


@dataclass
class GeneratorConfig:
    n: int
    num_c: int
    eta1: float
    eta2: float
    seed: int = 0

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            if not 0 <= getattr(self, name) <= 1:
                raise ContractError(f"{name} must lie in [0, 1]")
        if self.num_c < 1 or self.n // self.num_c < 2:
            raise ContractError("clusters need at least two vertices each")

    @property
    def clust_dim(self) -> int:
        return self.n // self.num_c


def _upper_bernoulli(rng, n, prob):
    """Symmetric boolean matrix with independent upper-triangle coin flips."""
    coins = rng.random((n, n), dtype=np.float32) < prob
    upper = np.triu(coins, 1)
    return upper | upper.T


def generate(cfg: GeneratorConfig):
    """Noisy planted cliques.

    Returns ``(g, gt, labels)``: the noisy graph, the noiseless union of
    cliques, and the cluster index of every vertex (``-1`` for vertices left
    over when ``num_c`` does not divide ``n``).
    """
    rng = np.random.default_rng(cfg.seed)
    n, dim = cfg.n, cfg.clust_dim
    perm = rng.permutation(n)
    labels = np.full(n, -1, dtype=np.int64)
    labels[perm[: dim * cfg.num_c]] = np.arange(dim * cfg.num_c) // dim
    same = (labels[:, None] == labels[None, :]) & (labels[:, None] >= 0)
    np.fill_diagonal(same, False)

    background = _upper_bernoulli(rng, n, cfg.eta1)
    keep = _upper_bernoulli(rng, n, 1.0 - cfg.eta2)
    adj = np.where(same, keep, background)
    np.fill_diagonal(adj, False)
    g = Graph(adj.astype(np.float64), validate=False)
    gt = Graph(same.astype(np.float64), validate=False)
    return g, gt, labels


def perturb(g: Graph, noise_probability: float, seed=0) -> Graph:
    """Add each absent vertex pair as a unit edge with the given probability."""
    if not 0 <= noise_probability <= 1:
        raise ContractError("noise probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    w = np.array(g.to_dense())
    add = _upper_bernoulli(rng, g.n, noise_probability) & (w == 0)
    np.fill_diagonal(add, False)
    w[add] = 1.0
    return Graph(w, dense_threshold=g.dense_threshold, validate=False)
