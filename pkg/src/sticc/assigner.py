"""Cluster assignment with the spatial consistency penalty.

Each subregion n pays its negative log likelihood under the chosen cluster
plus ``beta`` when its label differs from that of its nearest subregion.
The pointer graph ``n -> nearest[n]`` is a pseudoforest (every component
holds exactly one cycle, a mutual-nearest pair for k-NN data), so the
minimum-cost labeling is found exactly by min-sum dynamic programming on
trees: mutual pairs collapse into one edge of weight 2*beta and any longer
cycle is broken by conditioning on one of its labels.

Components can additionally be joined by ``links`` (each weighted
``beta``) so that a very large ``beta`` drives all points into one cluster.
The reported objective never includes the links.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .dataset import SubregionSet
from .model import ClusterModel


@dataclass(frozen=True, eq=False)
class Assignment:
    labels: np.ndarray
    objective_likelihood: float
    objective_penalty: float
    beta: float = 0.0

    @property
    def objective(self) -> float:
        return self.objective_likelihood + self.objective_penalty

    @property
    def disagreements(self) -> int:
        return 0 if self.beta == 0 else int(round(self.objective_penalty / self.beta))


def node_cost_matrix(stacked: np.ndarray, models: Sequence[ClusterModel]) -> np.ndarray:
    """(N, K) negative log likelihoods."""
    if not models:
        raise ValueError("need at least one cluster model")
    dims = {m.mean.shape[0] for m in models}
    if len(dims) != 1 or stacked.shape[1] not in dims:
        raise ValueError("all models must match the subregion length D*R")
    return np.column_stack([m.nll(stacked) for m in models])


def assignment_terms(costs: np.ndarray, labels: np.ndarray, nearest: np.ndarray, beta: float):
    """(likelihood part, penalty part) of the assignment objective."""
    labels = np.asarray(labels)
    lik = float(costs[np.arange(len(labels)), labels].sum())
    disagree = int(np.count_nonzero(labels != labels[nearest]))
    return lik, beta * disagree


def _edges(nearest: np.ndarray, beta: float, links) -> dict:
    w = defaultdict(float)
    for a, b in enumerate(nearest):
        b = int(b)
        w[(min(a, b), max(a, b))] += beta
    for a, b in links:
        a, b = int(a), int(b)
        w[(min(a, b), max(a, b))] += beta
    return w


def _tree_dp(order, parent, pw, unary):
    """Min-sum DP on a rooted tree; ``order`` is BFS order (root first)."""
    b = {v: unary[v].copy() for v in order}
    for v in reversed(order[1:]):
        bv = b[v]
        b[parent[v]] += np.minimum(bv, bv.min() + pw[v])
    root = order[0]
    labels = {root: int(np.argmin(b[root]))}
    total = float(b[root][labels[root]])
    for v in order[1:]:
        bv = b[v]
        lp = labels[parent[v]]
        k = int(np.argmin(bv))
        stay, switch = bv[lp], bv[k] + pw[v]
        if switch < stay:
            labels[v] = k
        elif stay < switch:
            labels[v] = lp
        else:
            labels[v] = min(k, lp)
    return labels, total


def min_cost_labels(costs: np.ndarray, nearest: np.ndarray, beta: float, links=()) -> np.ndarray:
    """Exact minimizer of sum costs[n, l_n] + beta * #{l_n != l_nearest[n]}
    (+ beta per disagreeing link).  Ties prefer lower cluster indices."""
    N, K = costs.shape
    if beta == 0:
        return np.argmin(costs, axis=1)
    weights = _edges(np.asarray(nearest), beta, links)
    adj = defaultdict(list)
    for (a, b), w in weights.items():
        adj[a].append((b, w))
        adj[b].append((a, w))

    labels = np.zeros(N, dtype=np.int64)
    seen = np.zeros(N, dtype=bool)
    for root in range(N):
        if seen[root]:
            continue
        order, parent, pw = [root], {root: -1}, {root: 0.0}
        seen[root] = True
        extra = []
        q = deque([root])
        while q:
            v = q.popleft()
            for u, w in sorted(adj[v]):
                if u == parent[v]:
                    continue
                if seen[u]:
                    extra.append((v, u, w))
                    continue
                seen[u] = True
                parent[u] = v
                pw[u] = w
                order.append(u)
                q.append(u)
        # each non-tree edge was seen from both ends; keep one copy
        extra = sorted({(min(a, b), max(a, b), w) for a, b, w in extra})
        if not extra:
            comp_labels, _ = _tree_dp(order, parent, pw, costs)
        else:
            best = None
            for fixed in product(range(K), repeat=len(extra)):
                unary = {v: costs[v].astype(float) for v in order}
                for (a, b, w), k in zip(extra, fixed):
                    mask = np.full(K, np.inf)
                    mask[k] = 0.0
                    unary[b] = unary[b] + mask
                    unary[a] = unary[a] + w * (np.arange(K) != k)
                cand, total = _tree_dp(order, parent, pw, unary)
                if best is None or total < best[1]:
                    best = (cand, total)
            comp_labels = best[0]
        for v, k in comp_labels.items():
            labels[v] = k
    return labels


def assign(subs: SubregionSet, models: Sequence[ClusterModel], beta: float,
           previous: np.ndarray | None = None, costs: np.ndarray | None = None,
           use_links: bool = True) -> Assignment:
    """Assign every subregion to a cluster.

    With ``previous`` labels given, the result is whichever of the new and
    previous labelings has the lower objective (new wins ties), so repeated
    calls never increase it.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if costs is None:
        costs = node_cost_matrix(subs.stacked, models)
    K = costs.shape[1]
    nearest = subs.nearest_subregion
    if K == 1:
        labels = np.zeros(subs.count, dtype=np.int64)
    else:
        links = subs.links if use_links else ()
        labels = min_cost_labels(costs, nearest, beta, links)
    lik, pen = assignment_terms(costs, labels, nearest, beta)
    if previous is not None:
        previous = np.asarray(previous, dtype=np.int64)
        p_lik, p_pen = assignment_terms(costs, previous, nearest, beta)
        if p_lik + p_pen < lik + pen:
            labels, lik, pen = previous.copy(), p_lik, p_pen
    return Assignment(labels, lik, pen, beta)


def sparsity_term(models: Sequence[ClusterModel], lam: float) -> float:
    total = 0.0
    for m in models:
        theta = m.theta
        total += np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return lam * float(total)


def total_objective(subs: SubregionSet, models: Sequence[ClusterModel], labels, beta: float,
                    lam: float, costs: np.ndarray | None = None) -> float:
    if costs is None:
        costs = node_cost_matrix(subs.stacked, models)
    lik, pen = assignment_terms(costs, np.asarray(labels), subs.nearest_subregion, beta)
    return lik + pen + sparsity_term(models, lam)
