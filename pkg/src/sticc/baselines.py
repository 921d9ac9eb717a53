"""K-Means and spatial K-Means reference clusterers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GeoDataset


@dataclass(frozen=True)
class KMeansConfig:
    K: int
    max_iter: int = 300
    seed: int = 0
    coord_weight: float = 0.0   # 0 -> attributes only
    standardize: bool = True    # z-score attribute columns first
    n_init: int = 10


def _zscore(X: np.ndarray) -> np.ndarray:
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def kmeans_pp(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def lloyd(X: np.ndarray, K: int, max_iter: int = 300, seed: int = 0, n_init: int = 1,
          history: list | None = None):
    """Lloyd iterations from k-means++ seeds; best of ``n_init`` restarts.

    Returns ``(labels, centers, inertia)``.  If ``history`` is a list, the
    within-cluster sum of squares after every assignment step of the winning
    restart is appended to it.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if not 1 <= K <= n:
        raise ValueError(f"K must be in [1, N] = [1, {n}], got {K}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        trace = []
        centers = kmeans_pp(X, K, rng)
        labels = None
        for _ in range(max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new = np.argmin(d2, axis=1)
            trace.append(float(d2[np.arange(n), new].sum()))
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for k in range(K):
                members = X[labels == k]
                if len(members):
                    centers[k] = members.mean(axis=0)
                else:
                    # empty cluster: move its centre to the worst-served point
                    far = int(np.argmax(d2[np.arange(n), labels]))
                    centers[k] = X[far]
                    labels[far] = k
        inertia = float(((X - centers[labels]) ** 2).sum())
        if best is None or inertia < best[2] - 1e-12:
            best = (labels.copy(), centers.copy(), inertia, trace)
    if history is not None:
        history.extend(best[3])
    return best[0], best[1], best[2]


def features(ds: GeoDataset, cfg: KMeansConfig) -> np.ndarray:
    X = _zscore(ds.attrs) if cfg.standardize else ds.attrs.astype(float)
    if cfg.coord_weight > 0:
        X = np.hstack([X, cfg.coord_weight * _zscore(ds.coords)])
    return X


def kmeans(ds: GeoDataset, cfg: KMeansConfig) -> np.ndarray:
    if cfg.K > ds.count:
        raise ValueError(f"K={cfg.K} exceeds N={ds.count}")
    labels, _, _ = lloyd(features(ds, cfg), cfg.K, cfg.max_iter, cfg.seed, cfg.n_init)
    return labels


def spatial_kmeans(ds: GeoDataset, K: int, seed: int = 0, coord_weight: float = 1.0) -> np.ndarray:
    return kmeans(ds, KMeansConfig(K=K, seed=seed, coord_weight=coord_weight))
