"""Block-Toeplitz precision matrices and per-cluster Gaussian models."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class ToeplitzPrecision:
    """Blocks A(0)..A(R-1), each D x D; A(0) symmetric.

    Block (i, j) of the assembled matrix is A(i-j) below the diagonal and
    A(j-i)^T above it.
    """

    blocks: np.ndarray  # (R, D, D)

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError("blocks must have shape (R, D, D)")
        object.__setattr__(self, "blocks", b)

    @property
    def R(self) -> int:
        return self.blocks.shape[0]

    @property
    def D(self) -> int:
        return self.blocks.shape[1]

    def assemble(self) -> np.ndarray:
        return assemble(self)

    @classmethod
    def from_matrix(cls, theta: np.ndarray, R: int) -> "ToeplitzPrecision":
        """Read blocks off the first block column (assumes block-Toeplitz input)."""
        theta = np.asarray(theta, dtype=float)
        D = theta.shape[0] // R
        return cls(np.stack([theta[r * D:(r + 1) * D, :D] for r in range(R)]))

    def to_json(self) -> dict:
        return {"blocks": self.blocks.tolist(), "R": self.R, "D": self.D}

    @classmethod
    def from_json(cls, obj: dict) -> "ToeplitzPrecision":
        tp = cls(np.array(obj["blocks"], dtype=float))
        if tp.R != obj["R"] or tp.D != obj["D"]:
            raise ValueError("R/D do not match block shapes")
        return tp


def assemble(tp: ToeplitzPrecision) -> np.ndarray:
    R, D = tp.R, tp.D
    out = np.empty((R * D, R * D))
    for i in range(R):
        for j in range(R):
            blk = tp.blocks[i - j] if i >= j else tp.blocks[j - i].T
            out[i * D:(i + 1) * D, j * D:(j + 1) * D] = blk
    return out


def is_block_toeplitz(theta: np.ndarray, R: int) -> bool:
    """Exact check: block (i, j) equals block (i+1, j+1) bit for bit, and symmetry."""
    D = theta.shape[0] // R
    if not np.array_equal(theta, theta.T):
        return False
    for i in range(R - 1):
        for j in range(R - 1):
            a = theta[i * D:(i + 1) * D, j * D:(j + 1) * D]
            b = theta[(i + 1) * D:(i + 2) * D, (j + 1) * D:(j + 2) * D]
            if not np.array_equal(a, b):
                return False
    return True


def logdet_pd(theta: np.ndarray) -> float:
    """log det via Cholesky; failure means the matrix is not PD."""
    try:
        L = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("precision matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(L))))


@dataclass(frozen=True, eq=False)
class ClusterModel:
    mean: np.ndarray
    precision: ToeplitzPrecision
    log_det: float
    member_count: int = 0

    @classmethod
    def build(cls, mean, precision: ToeplitzPrecision, member_count: int = 0) -> "ClusterModel":
        mean = np.asarray(mean, dtype=float)
        theta = precision.assemble()
        if mean.shape != (theta.shape[0],):
            raise ValueError(f"mean has length {mean.shape}, expected {theta.shape[0]}")
        return cls(mean, precision, logdet_pd(theta), int(member_count))

    @property
    def theta(self) -> np.ndarray:
        return self.precision.assemble()

    def nll(self, X: np.ndarray) -> np.ndarray:
        """Negative log likelihood of each row of X."""
        return -log_likelihood(self, X)

    def to_json(self, cluster: int | None = None) -> dict:
        out = {"mean": self.mean.tolist(), "blocks": self.precision.blocks.tolist(),
               "log_det": self.log_det, "member_count": self.member_count}
        if cluster is not None:
            out = {"cluster": cluster, **out}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ClusterModel":
        return cls.build(obj["mean"], ToeplitzPrecision(np.array(obj["blocks"])), obj.get("member_count", 0))


def log_likelihood(cm: ClusterModel, x: np.ndarray):
    """Gaussian log density with precision ``cm.theta``; x is one vector or rows."""
    x = np.asarray(x, dtype=float)
    dim = cm.mean.shape[0]
    if x.shape[-1] != dim:
        raise ValueError(f"subregion length {x.shape[-1]} does not match model dimension {dim}")
    diff = x - cm.mean
    theta = cm.theta
    quad = np.einsum("...i,ij,...j->...", diff, theta, diff)
    ll = -0.5 * quad + 0.5 * cm.log_det - 0.5 * dim * LOG_2PI
    return float(ll) if np.ndim(ll) == 0 else ll


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    mean: np.ndarray
    covariance: np.ndarray
    count: int


def empirical_stats(members) -> EmpiricalStats:
    X = np.atleast_2d(np.asarray(members, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise ValueError("empirical_stats needs at least one member")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / X.shape[0]
    cov = 0.5 * (cov + cov.T)
    return EmpiricalStats(mean, cov, X.shape[0])


def save_precision_json(tp: ToeplitzPrecision, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tp.to_json(), fh)


def save_precision_csv(tp: ToeplitzPrecision, path) -> None:
    np.savetxt(path, tp.assemble(), delimiter=",", fmt="%.17g")
