"""Small graph builders shared by the tests."""

import numpy as np

from szgraph.graph import Graph


def random_graph(n, p, seed=0, weighted=False):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, 1).astype(float)
    if weighted:
        upper *= rng.random((n, n))
    return Graph(upper + upper.T)


def bipartite_graph(x):
    """Graph on 2m vertices whose only edges form the block ``x`` between 0..m-1 and m..2m-1."""
    m_a, m_b = x.shape
    n = m_a + m_b
    w = np.zeros((n, n))
    w[:m_a, m_a:] = x
    w[m_a:, :m_a] = x.T
    return Graph(w)


def clique_union(sizes):
    n = sum(sizes)
    w = np.zeros((n, n))
    start = 0
    for s in sizes:
        w[start:start + s, start:start + s] = 1
        start += s
    np.fill_diagonal(w, 0)
    return Graph(w)
