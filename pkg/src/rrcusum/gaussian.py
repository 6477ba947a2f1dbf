"""Gaussian local laws and the closed forms that go with them.

All observation models used in the experiments are zero-mean multivariate
normals whose covariance is a correlation matrix (unit diagonal), so the
information numbers and likelihood ratios below have explicit expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.linalg import solve_triangular

from .model import LocalDistribution

__all__ = [
    "ModelInfeasibleError",
    "CorrelationMatrix",
    "GaussianLocal",
    "equicorrelation_det",
    "gaussian_info_number",
    "mean_change_info_number",
    "gaussian_llr",
    "gaussian_kl",
    "build_correlation_matrix",
    "sample_local",
]

_LOG_2PI = math.log(2.0 * math.pi)
# Cholesky pivots below this are treated as a failed positivity check.
_MIN_PIVOT = 1e-10


class ModelInfeasibleError(ValueError):
    """Raised when a requested correlation structure is not positive definite."""


def _first_failing_minor(a: np.ndarray) -> int:
    """Order of the smallest leading principal submatrix that is not positive definite."""
    for k in range(1, a.shape[0] + 1):
        try:
            piv = np.linalg.cholesky(a[:k, :k]).diagonal().min()
        except np.linalg.LinAlgError:
            return k
        if piv < _MIN_PIVOT:
            return k
    raise ValueError("matrix is positive definite, no failing minor")


def _cholesky_or_raise(a: np.ndarray, what: str) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        chol = None
    if chol is None or chol.diagonal().min() < _MIN_PIVOT:
        k = _first_failing_minor(a)
        raise ModelInfeasibleError(
            f"{what} is not positive definite: leading principal minor of order {k} fails"
        )
    return chol


@dataclass(frozen=True)
class CorrelationMatrix:
    """A symmetric positive definite matrix with unit diagonal.

    Validated at construction; the array is frozen afterwards.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"correlation matrix must be square, got shape {a.shape}")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(a), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        off = a[~np.eye(a.shape[0], dtype=bool)]
        if off.size and np.abs(off).max() >= 1.0:
            raise ValueError("off-diagonal correlations must have magnitude below 1")
        _cholesky_or_raise(a, "correlation matrix")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


class GaussianLocal(LocalDistribution):
    """Multivariate normal local law with cached Cholesky factor and log determinant."""

    def __init__(self, mean: np.ndarray | float, cov: np.ndarray | CorrelationMatrix):
        if isinstance(cov, CorrelationMatrix):
            cov = cov.values
        cov = np.array(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        mean = np.broadcast_to(np.asarray(mean, dtype=float), (cov.shape[0],)).copy()
        self.dim = cov.shape[0]
        self.mean = mean
        self.cov = cov
        self.chol = _cholesky_or_raise(cov, "covariance matrix")
        self.log_det = 2.0 * float(np.log(self.chol.diagonal()).sum())
        self.mean.setflags(write=False)
        self.cov.setflags(write=False)
        self.chol.setflags(write=False)

    @classmethod
    def standard(cls, dim: int) -> "GaussianLocal":
        return cls(np.zeros(dim), np.eye(dim))

    def logpdf(self, x: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {self.dim}")
        z = solve_triangular(self.chol, (pts - self.mean).T, lower=True, check_finite=False)
        q = np.einsum("ij,ij->j", z, z)
        out = -0.5 * (self.dim * _LOG_2PI + self.log_det + q)
        return float(out[0]) if scalar else out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.dim)) @ self.chol.T + self.mean

    def __repr__(self) -> str:
        return f"GaussianLocal(dim={self.dim})"


def equicorrelation_det(k: int, rho: float) -> float:
    """Determinant of the k x k matrix with unit diagonal and constant correlation rho.

    The matrix has one eigenvalue 1 + (k-1) rho and k-1 eigenvalues 1 - rho.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return (1.0 - rho) ** (k - 1) * (1.0 + (k - 1) * rho)


def gaussian_info_number(post_cov: np.ndarray | CorrelationMatrix) -> float:
    """Information number of a zero-mean correlation change, -0.5 log det of the post covariance.

    Requires a unit-diagonal positive definite matrix; the pre-change law is the
    standard normal of matching dimension.
    """
    if not isinstance(post_cov, CorrelationMatrix):
        post_cov = CorrelationMatrix(np.asarray(post_cov, dtype=float))
    chol = np.linalg.cholesky(post_cov.values)
    # -0.5 log det, with log det = 2 sum(log diag(chol))
    return -float(np.log(chol.diagonal()).sum())


def mean_change_info_number(mu: float) -> float:
    """Information number of a unit-variance mean shift of size mu."""
    return 0.5 * float(mu) ** 2


def gaussian_llr(pre: GaussianLocal, post: GaussianLocal, x: np.ndarray) -> np.ndarray | float:
    """Log likelihood ratio of post against pre at x, vectorised over rows of x."""
    if pre.dim != post.dim:
        raise ValueError(f"dimension mismatch: pre has {pre.dim}, post has {post.dim}")
    return post.logpdf(x) - pre.logpdf(x)


def gaussian_kl(p: GaussianLocal, q: GaussianLocal) -> float:
    """Kullback-Leibler divergence KL(p || q) between two Gaussians."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    zc = solve_triangular(q.chol, p.chol, lower=True, check_finite=False)
    zm = solve_triangular(q.chol, q.mean - p.mean, lower=True, check_finite=False)
    trace = float(np.einsum("ij,ij->", zc, zc))
    quad = float(zm @ zm)
    return 0.5 * (trace + quad - p.dim + q.log_det - p.log_det)


def build_correlation_matrix(
    K: int,
    correlated_pairs: Iterable[tuple[int, int]],
    rho: float | Mapping[tuple[int, int], float],
) -> CorrelationMatrix:
    """Assemble a K x K correlation matrix with the given nonzero entries.

    Pairs use 1-based source indices. ``rho`` is either one value shared by
    every pair or a map from pair to value. Raises ModelInfeasibleError, naming
    the smallest failing leading principal minor, when the result is not
    positive definite.
    """
    if K < 1:
        raise ValueError(f"K must be positive, got {K}")
    a = np.eye(K)
    for pair in correlated_pairs:
        i, j = pair
        if i == j:
            raise ValueError(f"pair {pair} repeats a source")
        if not (1 <= i <= K and 1 <= j <= K):
            raise ValueError(f"pair {pair} references a source outside 1..{K}")
        if isinstance(rho, Mapping):
            key = (min(i, j), max(i, j))
            r = rho.get(key, rho.get((key[1], key[0])))
            if r is None:
                raise ValueError(f"no correlation value given for pair {key}")
        else:
            r = rho
        r = float(r)
        if not -1.0 < r < 1.0 or r == 0.0:
            raise ValueError(f"correlation for pair {(i, j)} must be nonzero in (-1, 1), got {r}")
        a[i - 1, j - 1] = a[j - 1, i - 1] = r
    return CorrelationMatrix(a)


def sample_local(dist: GaussianLocal, rng: np.random.Generator) -> np.ndarray:
    """One draw from the local law, lower-triangular factor times a standard normal vector."""
    return dist.sample(rng, 1)[0]
