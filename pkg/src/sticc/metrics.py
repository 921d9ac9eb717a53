"""Clustering quality: ARI, permutation-matched macro-F1, join count ratio."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import islice, permutations
from math import comb

import numpy as np

from .dataset import GeoDataset, knn


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class AdjacencyGraph:
    edges: frozenset      # of (i, j) with i < j
    source: str = "delaunay"
    collinear_fallback: bool = False

    def __post_init__(self):
        for i, j in self.edges:
            if i >= j:
                raise ValueError(f"edge {(i, j)} must satisfy i < j (no self-loops)")

    @classmethod
    def from_pairs(cls, pairs, source: str = "custom", **kw) -> "AdjacencyGraph":
        return cls(frozenset((min(a, b), max(a, b)) for a, b in pairs if a != b), source, **kw)

    def array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=np.int64).reshape(-1, 2)


@dataclass
class MetricReport:
    ari: float
    macro_f1: float
    permutation: list
    j_same: int
    j_diff: int
    j_total: int
    join_count_ratio: float = field(init=False)

    def __post_init__(self):
        if self.j_same + self.j_diff != self.j_total:
            raise ValueError("join counts are inconsistent")
        self.join_count_ratio = self.j_same / self.j_total

    def to_json(self) -> dict:
        return {
            "ari": self.ari,
            "macro_f1": self.macro_f1,
            "permutation": list(self.permutation),
            "join_count": {"same": self.j_same, "diff": self.j_diff, "total": self.j_total,
                           "ratio": self.join_count_ratio},
        }


def _check_pair(truth, pred):
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"label arrays differ in shape: {truth.shape} vs {pred.shape}")
    return truth, pred


def contingency(truth, pred) -> np.ndarray:
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(table, (t, p), 1)
    return table


def ari(truth, pred) -> float:
    """Adjusted Rand index from pair counts of the contingency table."""
    truth, pred = _check_pair(truth, pred)
    n = len(truth)
    if n < 2:
        raise ValueError("ARI needs at least two points")
    table = contingency(truth, pred)
    sum_ij = sum(comb(int(v), 2) for v in table.ravel())
    sum_a = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all singletons or one block each)
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


def f1_matrix(truth, pred, K: int) -> np.ndarray:
    """F1[c, p] when predicted label p is read as class c; 0 where undefined."""
    C = np.zeros((K, K))
    np.add.at(C, (truth, pred), 1)
    t = C.sum(axis=1)[:, None]
    p = C.sum(axis=0)[None, :]
    denom = t + p
    with np.errstate(invalid="ignore", divide="ignore"):
        F = np.where(denom > 0, 2.0 * C / denom, 0.0)
    return F


def macro_f1(truth, pred, K: int | None = None):
    """Best macro-F1 over all K! relabelings of ``pred``.

    Returns ``(score, perm)`` where ``perm[p]`` is the class predicted
    label p is mapped to.  The first permutation in lexicographic order
    wins ties, so identical labelings map to the identity.
    """
    truth, pred = _check_pair(truth, pred)
    truth = truth.astype(np.int64)
    pred = pred.astype(np.int64)
    if K is None:
        K = int(max(truth.max(), pred.max())) + 1
    if K > 10:
        raise ValueError(f"K={K} too large for exhaustive permutation search (max 10)")
    if truth.min() < 0 or pred.min() < 0 or truth.max() >= K or pred.max() >= K:
        raise ValueError("labels must lie in [0, K)")
    F = f1_matrix(truth, pred, K)
    it = permutations(range(K))
    best_score, best_perm = -1.0, None
    while True:
        chunk = np.array(list(islice(it, 50_000)), dtype=np.int64)
        if len(chunk) == 0:
            break
        # score of perm: mean over p of F[perm[p], p]
        scores = F[chunk, np.arange(K)].mean(axis=1)
        i = int(np.argmax(scores))
        if scores[i] > best_score:
            best_score, best_perm = float(scores[i]), chunk[i].tolist()
    return best_score, best_perm


def join_counts(labels, adj: AdjacencyGraph) -> tuple[int, int, int]:
    labels = np.asarray(labels)
    e = adj.array()
    if len(e) == 0:
        raise UndefinedMetricError("join count ratio is undefined for an empty edge set")
    if e.max() >= len(labels):
        raise ValueError("adjacency references a point outside the label array")
    same = int(np.count_nonzero(labels[e[:, 0]] == labels[e[:, 1]]))
    return same, len(e) - same, len(e)


def join_count_ratio(labels, adj: AdjacencyGraph) -> float:
    same, _, total = join_counts(labels, adj)
    return same / total


# -- adjacency ---------------------------------------------------------------

GHOST = -1   # the vertex at infinity closing every hull edge


def _orient(a, b, c):
    """Twice the signed area of (a, b, c); positive when counter-clockwise."""
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _in_conflict(P: np.ndarray, tris: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Triangles whose open circumdisk contains p.

    Real triangles are counter-clockwise and use the in-circle determinant.
    A ghost triangle (u, v, GHOST) stands for the half-plane left of u->v,
    i.e. outside the hull edge v->u; points on that edge's open segment
    conflict too.
    """
    ghost = tris[:, 2] == GHOST
    out = np.zeros(len(tris), dtype=bool)
    real = ~ghost
    if real.any():
        a, b, c = (P[tris[real, k]] - p for k in range(3))
        la, lb, lc = (a ** 2).sum(1), (b ** 2).sum(1), (c ** 2).sum(1)
        det = (la * (b[:, 0] * c[:, 1] - c[:, 0] * b[:, 1])
               + lb * (c[:, 0] * a[:, 1] - a[:, 0] * c[:, 1])
               + lc * (a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))
        scale = (la + lb + lc) ** 2
        out[real] = det > 1e-12 * scale
    if ghost.any():
        u, v = P[tris[ghost, 0]], P[tris[ghost, 1]]
        o = _orient(u, v, p)
        span = ((v - u) ** 2).sum(1)
        on_line = np.abs(o) <= 1e-12 * span
        t = ((p - u) * (v - u)).sum(1)
        between = on_line & (t > 0) & (t < span)
        out[ghost] = (o > 1e-12 * span) | between
    return out


def bowyer_watson(points: np.ndarray) -> np.ndarray:
    """Delaunay triangles (index triples) by incremental Bowyer-Watson insertion.

    Instead of a finite super-triangle the hull is closed by ghost triangles
    through a vertex at infinity, so slivers along the hull are never lost.
    Input must contain three non-collinear points.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(float((hi - lo).max()), 1e-300)
    P = (pts - lo) / span                    # unit box keeps the tests well scaled
    i0, i1 = 0, next(i for i in range(1, n) if np.any(P[i] != P[0]))
    areas = np.abs(_orient(P[i0], P[i1], P))
    i2 = int(np.argmax(areas > 1e-12 * max(areas.max(), 1e-300)))
    if _orient(P[i0], P[i1], P[i2]) < 0:
        i1, i2 = i2, i1
    tris = np.array([[i0, i1, i2], [i1, i0, GHOST], [i2, i1, GHOST], [i0, i2, GHOST]], dtype=np.int64)
    for i in range(n):
        if i in (i0, i1, i2):
            continue
        bad = _in_conflict(P, tris, P[i])
        directed = set()
        for t in tris[bad]:
            directed.update(((t[0], t[1]), (t[1], t[2]), (t[2], t[0])))
        boundary = [(a, b) for a, b in directed if (b, a) not in directed]
        new = []
        for a, b in boundary:
            # keep the ghost in the last slot: (a, GHOST, i) rotates to (i, a, GHOST)
            if a == GHOST:
                new.append((b, i, GHOST))
            elif b == GHOST:
                new.append((i, a, GHOST))
            else:
                new.append((a, b, i))
        tris = np.vstack([tris[~bad], np.array(new, dtype=np.int64).reshape(-1, 3)])
    return tris[tris[:, 2] != GHOST]


def _collinear(P: np.ndarray) -> bool:
    c = P - P.mean(axis=0)
    s = np.linalg.svd(c, compute_uv=False)
    return s.size < 2 or s[1] <= 1e-12 * max(s[0], 1e-300)


def delaunay(ds: GeoDataset | np.ndarray, jitter: float = 1e-9, seed: int = 0) -> AdjacencyGraph:
    """Delaunay edges of the point coordinates.

    Duplicate coordinates are jittered by ``jitter`` (relative to the extent).
    All-collinear input falls back to a path along the line and sets
    ``collinear_fallback``.
    """
    xy = np.asarray(ds.coords if isinstance(ds, GeoDataset) else ds, dtype=float)
    n = len(xy)
    if n < 3:
        raise ValueError("Delaunay adjacency needs at least 3 points")
    if _collinear(xy):
        warnings.warn("all points are collinear; using path adjacency along the line")
        c = xy - xy.mean(axis=0)
        direction = np.linalg.svd(c)[2][0]
        order = np.lexsort((np.arange(n), c @ direction))
        return AdjacencyGraph.from_pairs(zip(order[:-1], order[1:]), "delaunay", collinear_fallback=True)
    _, first, counts = np.unique(xy, axis=0, return_index=True, return_counts=True)
    if np.any(counts > 1):
        rng = np.random.default_rng(seed)
        span = float(np.ptp(xy, axis=0).max())
        dup = np.ones(n, dtype=bool)
        dup[first] = False
        xy = xy.copy()
        xy[dup] += rng.uniform(-1, 1, size=(dup.sum(), 2)) * jitter * span
    tris = bowyer_watson(xy)
    pairs = set()
    for a, b, c in tris:
        pairs.update({(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))})
    return AdjacencyGraph(frozenset((int(a), int(b)) for a, b in pairs), "delaunay")


def knn_adjacency(ds: GeoDataset | np.ndarray, k: int = 4) -> AdjacencyGraph:
    """Union of directed k-NN edges, stored undirected."""
    nb = knn(ds, k)
    return AdjacencyGraph.from_pairs(((i, int(j)) for i in range(len(nb)) for j in nb[i]), "knn_symmetrized")


def evaluate(truth, pred, adj: AdjacencyGraph, K: int | None = None) -> MetricReport:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if K is None:
        K = int(max(truth.max(), pred.max())) + 1
    f1, perm = macro_f1(truth, pred, K)
    same, diff, total = join_counts(pred, adj)
    return MetricReport(ari(truth, pred), f1, perm, same, diff, total)
