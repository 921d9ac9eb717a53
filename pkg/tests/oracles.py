"""Slow, independent reference implementations used as test oracles.

None of these import the package under test; they work from first
principles (pair enumeration, exhaustive search, brute-force geometry).
"""
from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np


def pair_count_ari(a, b) -> float:
    """ARI from explicit enumeration of all point pairs."""
    n = len(a)
    ss = sd = ds = dd = 0
    for i, j in itertools.combinations(range(n), 2):
        same_a, same_b = a[i] == a[j], b[i] == b[j]
        if same_a and same_b:
            ss += 1
        elif same_a:
            sd += 1
        elif same_b:
            ds += 1
        else:
            dd += 1
    denom = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd)
    if denom == 0:
        return 1.0
    return 2.0 * (ss * dd - sd * ds) / denom


def brute_macro_f1(truth, pred, K) -> float:
    best = -1.0
    for perm in itertools.permutations(range(K)):
        mapped = [perm[p] for p in pred]
        f1s = []
        for c in range(K):
            tp = sum(1 for t, m in zip(truth, mapped) if t == c and m == c)
            fp = sum(1 for t, m in zip(truth, mapped) if t != c and m == c)
            fn = sum(1 for t, m in zip(truth, mapped) if t == c and m != c)
            f1s.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
        best = max(best, sum(f1s) / K)
    return best


def brute_knn(coords, k):
    coords = np.asarray(coords, dtype=float)
    out = []
    for i in range(len(coords)):
        d = [(math.dist(coords[i], coords[j]), j) for j in range(len(coords)) if j != i]
        d.sort()
        out.append([j for _, j in d[:k]])
    return np.array(out)


def two_pass_covariance(X):
    X = np.asarray(X, dtype=float)
    m, d = X.shape
    mean = [sum(X[i, a] for i in range(m)) / m for a in range(d)]
    cov = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            cov[a, b] = sum((X[i, a] - mean[a]) * (X[i, b] - mean[b]) for i in range(m)) / m
    return np.array(mean), cov


def brute_delaunay_edges(P) -> set:
    """Edges of every triangle whose circumcircle holds no other point (O(N^4))."""
    P = np.asarray(P, dtype=float)
    n = len(P)
    edges = set()
    for i, j, k in itertools.combinations(range(n), 3):
        a, b, c = P[i], P[j], P[k]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-14:
            continue
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
        others = [m for m in range(n) if m not in (i, j, k)]
        if all((P[m, 0] - ux) ** 2 + (P[m, 1] - uy) ** 2 > r2 * (1 + 1e-9) for m in others):
            edges |= {(i, j), (i, k), (j, k)}
    return edges


def exhaustive_assignment(costs, nearest, beta):
    """Minimum over all K^N labelings of sum cost + beta * disagreements."""
    costs = np.asarray(costs, dtype=float)
    N, K = costs.shape
    nearest = np.asarray(nearest)
    grids = np.array(list(itertools.product(range(K), repeat=N)), dtype=np.int64)
    lik = costs[np.arange(N), grids].sum(axis=1)
    pen = beta * (grids != grids[:, nearest]).sum(axis=1)
    total = lik + pen
    i = int(np.argmin(total))
    return float(total[i]), grids[i]


def projected_gradient_tgl(S, lam, m, steps=100_000, lr=2e-3):
    """D=1, R=2 Toeplitz graphical lasso on Theta = [[a, b], [b, a]].

    Gradient step on the smooth part projected onto the two Toeplitz
    coordinates, then a soft-threshold step on b; steps that leave the PD
    cone are halved.
    """
    S = np.asarray(S, dtype=float)
    inv = np.linalg.inv(S)
    a, b = (inv[0, 0] + inv[1, 1]) / 2, (inv[0, 1] + inv[1, 0]) / 2
    if abs(b) >= a:
        b = 0.0
    t = lam / m

    def f(a, b):
        return -math.log(a * a - b * b) + S[0, 0] * a + S[1, 1] * a + 2 * S[0, 1] * b + 2 * t * abs(b)

    for _ in range(steps):
        det = a * a - b * b
        # inverse of [[a, b], [b, a]] is [[a, -b], [-b, a]] / det
        ga = -2 * a / det + S[0, 0] + S[1, 1]
        gb = 2 * b / det + 2 * S[0, 1]
        step = lr
        while True:
            na = a - step * ga
            nb = b - step * gb
            nb = math.copysign(max(abs(nb) - step * 2 * t, 0.0), nb)
            if na > abs(nb):
                break
            step /= 2
        a, b = na, nb
    return f(a, b), np.array([[a, b], [b, a]])


def brute_betweenness(n, edges) -> np.ndarray:
    """Normalized betweenness by enumerating every shortest path explicitly."""
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)

    def dist_from(s):
        d = {s: 0}
        q = deque([s])
        while q:
            v = q.popleft()
            for w in adj[v]:
                if w not in d:
                    d[w] = d[v] + 1
                    q.append(w)
        return d

    def paths(s, t, d):
        if s == t:
            return [[s]]
        out = []
        for w in adj[s]:
            if d.get(w) == d[s] + 1 and dt[w] == dt[s] - 1:
                out += [[s] + p for p in paths(w, t, d)]
        return out

    cb = np.zeros(n)
    for s, t in itertools.combinations(range(n), 2):
        ds_ = dist_from(s)
        if t not in ds_:
            continue
        dt = dist_from(t)
        ps = paths(s, t, ds_)
        for v in range(n):
            if v not in (s, t):
                cb[v] += sum(v in p for p in ps) / len(ps)
    if n > 2:
        cb /= (n - 1) * (n - 2) / 2
    return cb


def exhaustive_two_means_sse(X) -> float:
    X = np.asarray(X, dtype=float)
    n = len(X)
    best = math.inf
    for mask in range(1, 2 ** (n - 1)):
        g = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        sse = ((X[g] - X[g].mean(0)) ** 2).sum() + ((X[~g] - X[~g].mean(0)) ** 2).sum()
        best = min(best, sse)
    return best
