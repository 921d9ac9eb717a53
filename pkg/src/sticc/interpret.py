"""Read a cluster's precision matrix as an MRF and rank attributes by
betweenness centrality."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import ToeplitzPrecision


@dataclass(frozen=True)
class MrfGraph:
    n_nodes: int
    D: int
    edges: frozenset          # (u, v), u < v; node u = layer * D + attribute
    threshold: float
    weights: dict | None = None

    def node(self, u: int) -> tuple[int, int]:
        """(attribute, layer) of node u."""
        return u % self.D, u // self.D

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_nodes)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj


def extract_graph(tp: ToeplitzPrecision | np.ndarray, threshold: float = 1e-5, D: int | None = None) -> MrfGraph:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if isinstance(tp, ToeplitzPrecision):
        theta, D = tp.assemble(), tp.D
    else:
        theta = np.asarray(tp, dtype=float)
        D = D or theta.shape[0]
    n = theta.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    # either triangle exceeding the threshold makes an edge
    mask = (np.abs(theta[iu, ju]) > threshold) | (np.abs(theta[ju, iu]) > threshold)
    edges = frozenset(zip(iu[mask].tolist(), ju[mask].tolist()))
    weights = {e: float(theta[e]) for e in edges}
    return MrfGraph(n, D, edges, threshold, weights)


def betweenness_nodes(g: MrfGraph, normalized: bool = True) -> np.ndarray:
    """Brandes accumulation over unweighted shortest paths (undirected)."""
    n = g.n_nodes
    adj = g.adjacency()
    cb = np.zeros(n)
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1)
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    cb /= 2.0  # each unordered pair counted from both ends
    if normalized and n > 2:
        cb /= (n - 1) * (n - 2) / 2.0
    return cb


def betweenness(g: MrfGraph, normalized: bool = True) -> np.ndarray:
    """Per-attribute centrality: mean over the attribute's layer nodes."""
    cb = betweenness_nodes(g, normalized)
    return cb.reshape(-1, g.D).mean(axis=0)


def cluster_centralities(models, threshold: float = 1e-5) -> np.ndarray:
    """(K, D) attribute centralities, one row per fitted cluster."""
    return np.array([betweenness(extract_graph(m.precision, threshold)) for m in models])


def edge_rows(g: MrfGraph):
    return [(u, v, g.weights[(u, v)] if g.weights else 1.0) for u, v in sorted(g.edges)]
