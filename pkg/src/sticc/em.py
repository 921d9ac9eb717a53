"""Alternating assignment / Toeplitz graphical lasso fitting loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assigner import Assignment, assign, assignment_terms, node_cost_matrix, sparsity_term
from .baselines import lloyd
from .dataset import GeoDataset, SubregionSet, build_subregions
from .model import ClusterModel, empirical_stats
from .tgl import AdmmConfig, TglProblem, solve

log = logging.getLogger(__name__)


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class SticcConfig:
    K: int
    R: int = 3
    beta: float = 3.0
    lam: float = 0.1
    max_em_iter: int = 100
    seed: int = 0
    init: str = "kmeans"          # or "random"
    standardize: bool = True      # z-score attributes before stacking
    empty_policy: str = "keep"    # "keep" the stale model, or "reseed" worst-fit points
    use_links: bool = True        # join nearest-subregion components (see assigner)
    kmeans_restarts: int = 10
    admm: AdmmConfig = field(default_factory=AdmmConfig)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if self.beta < 0 or self.lam < 0:
            raise ValueError("beta and lam must be >= 0")
        if self.max_em_iter < 1:
            raise ValueError("max_em_iter must be >= 1")
        if self.init not in ("kmeans", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.empty_policy not in ("keep", "reseed"):
            raise ValueError(f"unknown empty_policy {self.empty_policy!r}")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    likelihood: float
    penalty: float
    sparsity: float


@dataclass(eq=False)
class FitResult:
    assignment: Assignment
    models: list
    objective_trace: list
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    subregions: SubregionSet | None = None
    attr_center: np.ndarray | None = None
    attr_scale: np.ndarray | None = None

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels


def standardize(X: np.ndarray):
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return (X - center) / scale, center, scale


def initialize(subs: SubregionSet, cfg: SticcConfig) -> np.ndarray:
    N, K = subs.count, cfg.K
    if N < K:
        raise ValueError(f"cannot form {K} non-empty clusters from {N} points")
    if N == K:
        return np.arange(N, dtype=np.int64)
    if cfg.init == "kmeans":
        labels, _, _ = lloyd(subs.stacked, K, seed=cfg.seed, n_init=cfg.kmeans_restarts)
        if len(np.unique(labels)) < K:
            # identical points can leave k-means with fewer distinct groups
            spread = np.sum((subs.stacked - subs.stacked.mean(axis=0)) ** 2, axis=1)
            labels = repair_empty(labels, np.repeat(spread[:, None], K, axis=1), K)
        return labels.astype(np.int64)
    rng = np.random.default_rng(cfg.seed)
    for _ in range(100):
        labels = rng.integers(K, size=N)
        if len(np.unique(labels)) == K:
            return labels.astype(np.int64)
    raise ValueError("random initialization failed to fill all clusters in 100 attempts")


def repair_empty(labels: np.ndarray, node_costs: np.ndarray, K: int) -> np.ndarray:
    """Give each empty cluster the worst-fitting point of a cluster that can spare one."""
    labels = np.asarray(labels, dtype=np.int64).copy()
    N = len(labels)
    if N < K:
        raise ValueError(f"cannot fill {K} clusters with {N} points")
    own_cost = node_costs[np.arange(N), labels].astype(float)
    moved = np.zeros(N, dtype=bool)
    for k in range(K):
        counts = np.bincount(labels, minlength=K)
        if counts[k] > 0:
            continue
        eligible = (~moved) & (counts[labels] > 1)
        cand = np.where(eligible, own_cost, -np.inf)
        n = int(np.argmax(cand))
        labels[n] = k
        moved[n] = True
    return labels


def _cluster_objective(model: ClusterModel, members: np.ndarray, lam: float) -> float:
    val = float(model.nll(members).sum()) if len(members) else 0.0
    return val + sparsity_term([model], lam)


def m_step(subs: SubregionSet, labels: np.ndarray, cfg: SticcConfig, previous=None, warm=None):
    """Refit every cluster; keeps the previous precision if it scores better.

    The likelihood carries a factor 1/2 that the trace/log-det form drops,
    so the solver sees penalty 2*lam to minimize exactly the cluster's share
    of the full objective.
    """
    R, D = subs.radius, subs.dim_attributes
    models, states = [], []
    for k in range(cfg.K):
        members = subs.stacked[labels == k]
        if len(members) == 0:
            if previous is None:
                raise ValueError(f"cluster {k} is empty")
            old = previous[k]
            models.append(ClusterModel(old.mean, old.precision, old.log_det, 0))
            states.append(warm[k] if warm else None)
            continue
        st = empirical_stats(members)
        sol = solve(TglProblem(st.covariance, 2.0 * cfg.lam, len(members), R, D), cfg.admm,
                    warm[k] if warm else None)
        cand = ClusterModel.build(st.mean, sol.precision, len(members))
        if previous is not None:
            old = ClusterModel.build(st.mean, previous[k].precision, len(members))
            if _cluster_objective(old, members, cfg.lam) < _cluster_objective(cand, members, cfg.lam):
                cand = old
        models.append(cand)
        states.append(sol.warm_start)
    return models, states


def _trace_row(it, costs, labels, subs, models, cfg) -> TraceRow:
    lik, pen = assignment_terms(costs, labels, subs.nearest_subregion, cfg.beta)
    sp = sparsity_term(models, cfg.lam)
    return TraceRow(it, lik + pen + sp, lik, pen, sp)


def fit(ds: GeoDataset, cfg: SticcConfig, init_labels: np.ndarray | None = None) -> FitResult:
    N = ds.count
    if cfg.K > N:
        raise ValueError(f"K={cfg.K} exceeds N={N}")
    if cfg.R > N:
        raise ValueError(f"R={cfg.R} exceeds N={N}")
    if cfg.K > 1 and np.all(np.ptp(ds.attrs, axis=0) == 0):
        raise DegenerateInputError("all points have identical attributes; cannot form K > 1 clusters")

    if cfg.standardize:
        X, center, scale = standardize(ds.attrs)
    else:
        X, center, scale = ds.attrs, np.zeros(ds.dim_attributes), np.ones(ds.dim_attributes)
    subs = build_subregions(ds, cfg.R, attrs=X)
    if not cfg.use_links:
        subs.links = np.empty((0, 2), dtype=np.int64)

    labels = initialize(subs, cfg) if init_labels is None else np.asarray(init_labels, dtype=np.int64)
    models, warm = m_step(subs, labels, cfg)
    costs = node_cost_matrix(subs.stacked, models)
    trace = [_trace_row(0, costs, labels, subs, models, cfg)]

    converged = False
    it = 0
    for it in range(1, cfg.max_em_iter + 1):
        a = assign(subs, models, cfg.beta, previous=labels, costs=costs)
        if np.array_equal(a.labels, labels):
            converged = True
            break
        labels = a.labels
        if cfg.empty_policy == "reseed" and len(np.unique(labels)) < cfg.K:
            labels = repair_empty(labels, costs, cfg.K)
        models, warm = m_step(subs, labels, cfg, previous=models, warm=warm)
        costs = node_cost_matrix(subs.stacked, models)
        trace.append(_trace_row(it, costs, labels, subs, models, cfg))
        log.debug("iter %d objective %.6f", it, trace[-1].objective)

    lik, pen = assignment_terms(costs, labels, subs.nearest_subregion, cfg.beta)
    assignment = Assignment(labels, lik, pen, cfg.beta)
    return FitResult(assignment, models, [r.objective for r in trace], it, converged, trace, subs,
                     center, scale)
