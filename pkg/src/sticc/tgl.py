"""Toeplitz graphical lasso solved by ADMM.

Minimizes  -log det T + tr(S T) + (lam / m) * sum_{i != j} |T_ij|
over symmetric block-Toeplitz T, with the splitting

    T-step: prox of -log det + trace (closed form through eigh)
    Z-step: projection onto block-Toeplitz matrices plus soft-threshold
    U-step: scaled dual ascent on T - Z
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ToeplitzPrecision, logdet_pd, NotPositiveDefiniteError


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    max_iter: int = 1000
    eps_abs: float = 1e-9
    eps_rel: float = 1e-9
    # residual balancing: rescale rho by 2 when one residual dominates 10x
    adaptive_rho: bool = True
    adapt_every: int = 10

    def __post_init__(self):
        if self.rho <= 0 or self.max_iter < 1 or self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("ADMM parameters must be positive")


@dataclass
class TglProblem:
    S: np.ndarray
    lam: float
    member_count: int
    R: int
    D: int

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        if self.S.shape != (self.R * self.D, self.R * self.D):
            raise ValueError(f"S has shape {self.S.shape}, expected {(self.R * self.D,) * 2}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.member_count < 1:
            raise ValueError("member_count must be >= 1")


@dataclass
class TglSolution:
    precision: ToeplitzPrecision
    converged: bool
    iterations: int
    objective: float
    # final ADMM state, reusable as a warm start
    Z: np.ndarray
    U: np.ndarray
    rho: float = 1.0

    @property
    def warm_start(self) -> tuple:
        return self.Z, self.U, self.rho


RIDGE_EPS = 1e-6


def tgl_objective(theta: np.ndarray, S: np.ndarray, lam: float, member_count: int) -> float:
    off = np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return -logdet_pd(theta) + float(np.sum(S * theta)) + lam / member_count * off


def theta_update(Z: np.ndarray, U: np.ndarray, S: np.ndarray, rho: float) -> np.ndarray:
    """argmin_T -log det T + tr(S T) + rho/2 ||T - Z + U||_F^2."""
    M = (Z - U) - S / rho
    if not np.allclose(M, M.T, rtol=0, atol=1e-9 * max(1.0, np.abs(M).max())):
        raise ValueError("theta_update needs symmetric inputs")
    M = 0.5 * (M + M.T)
    d, Q = np.linalg.eigh(M)
    t = (d + np.sqrt(d * d + 4.0 / rho)) / 2.0
    out = (Q * t) @ Q.T
    return 0.5 * (out + out.T)


def toeplitz_average(V: np.ndarray, R: int, D: int) -> np.ndarray:
    """Per-class averages as (R, D, D) blocks: the Frobenius projection onto
    symmetric block-Toeplitz matrices, expressed through its first block column."""
    blocks = np.empty((R, D, D))
    for r in range(R):
        low = np.mean([V[(s + r) * D:(s + r + 1) * D, s * D:(s + 1) * D] for s in range(R - r)], axis=0)
        up = np.mean([V[s * D:(s + 1) * D, (s + r) * D:(s + r + 1) * D] for s in range(R - r)], axis=0)
        blocks[r] = 0.5 * (low + up.T)
    return blocks


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def z_update(theta_plus_u: np.ndarray, lam: float, member_count: int, rho: float,
             R: int, D: int) -> np.ndarray:
    blocks = toeplitz_average(theta_plus_u, R, D)
    if lam > 0:
        t = lam / (member_count * rho)
        diag = np.diag(blocks[0]).copy()
        blocks = soft_threshold(blocks, t)
        np.fill_diagonal(blocks[0], diag)
    return ToeplitzPrecision(blocks).assemble()


def _regularize(S: np.ndarray) -> np.ndarray:
    n = S.shape[0]
    scale = np.trace(S) / n
    w = np.linalg.eigvalsh(S)
    if w[0] > 1e-10 * max(scale, np.finfo(float).tiny):
        return S
    ridge = RIDGE_EPS * (scale if scale > 0 else 1.0)
    return S + ridge * np.eye(n)


def _make_pd(Z: np.ndarray, R: int, D: int) -> np.ndarray:
    try:
        np.linalg.cholesky(Z)
        return Z
    except np.linalg.LinAlgError:
        pass
    w = np.linalg.eigvalsh(Z)
    shift = -w[0] + 1e-8 * max(1.0, float(np.mean(np.diag(Z))))
    blocks = toeplitz_average(Z, R, D)
    blocks[0] += shift * np.eye(D)
    return ToeplitzPrecision(blocks).assemble()


def solve(p: TglProblem, cfg: AdmmConfig | None = None, warm: tuple | None = None) -> TglSolution:
    """Block-Toeplitz sparse precision for one cluster.

    ``warm`` is an optional ``(Z, U, rho)`` triple from a previous solve of the same
    shape.  The returned precision is the Z iterate, exactly block-Toeplitz;
    if it is not PD its A(0) diagonal is shifted until it is.
    """
    cfg = cfg or AdmmConfig()
    S = p.S
    if not np.allclose(S, S.T, rtol=0, atol=1e-10 * max(1.0, np.abs(S).max())):
        raise ValueError("S must be symmetric")
    S = _regularize(0.5 * (S + S.T))
    n = S.shape[0]
    rho = cfg.rho
    if warm is None:
        Z = np.eye(n)
        U = np.zeros((n, n))
    else:
        Z, U = (np.array(a, dtype=float) for a in warm[:2])
        if len(warm) > 2:
            rho = float(warm[2])

    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        theta = theta_update(Z, U, S, rho)
        Z_prev = Z
        Z = z_update(theta + U, p.lam, p.member_count, rho, p.R, p.D)
        U = U + theta - Z
        r = np.linalg.norm(theta - Z)
        s = rho * np.linalg.norm(Z - Z_prev)
        eps_pri = n * cfg.eps_abs + cfg.eps_rel * max(np.linalg.norm(theta), np.linalg.norm(Z))
        eps_dual = n * cfg.eps_abs + cfg.eps_rel * rho * np.linalg.norm(U)
        if r <= eps_pri and s <= eps_dual:
            converged = True
            break
        if cfg.adaptive_rho and it % cfg.adapt_every == 0:
            if r > 10.0 * s:
                rho *= 2.0
                U = U / 2.0
            elif s > 10.0 * r:
                rho /= 2.0
                U = U * 2.0

    Z_state = Z
    Z = _make_pd(Z, p.R, p.D)
    tp = ToeplitzPrecision.from_matrix(Z, p.R)
    try:
        obj = tgl_objective(Z, p.S, p.lam, p.member_count)
    except NotPositiveDefiniteError:
        obj = np.inf
    return TglSolution(tp, converged, it, obj, Z_state, U, rho)
