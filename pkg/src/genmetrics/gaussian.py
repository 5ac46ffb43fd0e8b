"""Gaussian fits, the Frechet distance between them, and likelihood ranking.

The Frechet (Wasserstein-2) distance between N(mu_a, S_a) and N(mu_b, S_b) is

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})

The cross term is the trace of the PSD square root of
S_a^{1/2} S_b S_a^{1/2}, evaluated as the nuclear norm of
S_b^{1/2} S_a^{1/2}: identical value, but only square roots of symmetric
PSD matrices are ever taken, and the conditioning stays linear in the
spectrum.  Non-symmetric square roots are the classic source of
disagreement between implementations of this metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError, UsageError
from .store import FeatureMatrix

# Symmetry tolerances: fitted covariances are symmetrized exactly, so these
# only guard hand-built inputs.
_COV_ASYM_RTOL = 1e-10
_SQRT_ASYM_RTOL = 1e-8
# Eigenvalues down to -rtol * lambda_max still count as PSD (rounding noise).
_PSD_RTOL = 1e-8


def _asymmetry(m: np.ndarray) -> float:
    scale = float(np.abs(m).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(m - m.T).max()) / scale


@dataclass(frozen=True)
class GaussianModel:
    """Mean and covariance fitted to a feature set."""

    mean: np.ndarray
    cov: np.ndarray
    n_fit: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise DataError(f"covariance shape {cov.shape} does not match mean dimension {mean.size}")
        if self.n_fit < 2:
            raise DataError(f"a Gaussian model needs n_fit >= 2, got {self.n_fit}")
        if _asymmetry(cov) > _COV_ASYM_RTOL:
            raise DataError("covariance is not symmetric within 1e-10 relative")
        cov = (cov + cov.T) / 2.0
        eigvals = np.linalg.eigvalsh(cov)
        floor = -_PSD_RTOL * max(float(eigvals[-1]), 0.0)
        if eigvals[0] < floor:
            raise DataError(
                f"covariance is not PSD: min eigenvalue {eigvals[0]:.3g} below tolerance {floor:.3g}"
            )
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_gaussian(features: FeatureMatrix) -> GaussianModel:
    """Fit mean and unbiased (N-1) sample covariance to the rows of `features`."""
    x = features.data.astype(np.float64)
    n = x.shape[0]
    if n < 2:
        raise UsageError(f"need at least 2 samples to fit a Gaussian, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianModel(mean=mean, cov=cov, n_fit=n)


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Negative eigenvalues (rounding noise on PSD inputs) are clamped to zero.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError(f"matrix square root needs a square matrix, got shape {m.shape}")
    if _asymmetry(m) > _SQRT_ASYM_RTOL:
        raise UsageError("matrix is not symmetric within tolerance")
    sym = (m + m.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(sym)
    # Eigenvalues within machine noise of zero are zeroed outright, not just
    # the negative ones: sqrt has infinite slope at 0, so rank-deficiency
    # dust of size eps*lambda_max would otherwise inflate the root by
    # sqrt(eps)*sqrt(lambda_max) per null direction.
    cutoff = max(float(eigvals[-1]), 0.0) * m.shape[0] * np.finfo(np.float64).eps
    eigvals = np.where(eigvals < cutoff, 0.0, eigvals)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def frechet_distance(a: GaussianModel, b: GaussianModel) -> float:
    """Squared Frechet distance between two Gaussians."""
    if a.dim != b.dim:
        raise UsageError(f"dimension mismatch: {a.dim} vs {b.dim}")
    delta = a.mean - b.mean
    root_a = matrix_sqrt_psd(a.cov)
    root_b = matrix_sqrt_psd(b.cov)
    # tr sqrt(S_a^1/2 S_b S_a^1/2) equals the nuclear norm of
    # S_b^1/2 S_a^1/2; evaluating it via singular values keeps the
    # conditioning linear in the spectrum instead of squared, which matters
    # for the rank-deficient covariances of small feature sets.
    cross = float(np.linalg.svd(root_b @ root_a, compute_uv=False).sum())
    value = float(delta @ delta) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * cross
    if value < -1e-6:
        raise NumericalError(f"Frechet distance evaluated to {value:.3g}, beyond rounding tolerance")
    return max(value, 0.0)


def fid(real: FeatureMatrix, gen: FeatureMatrix) -> float:
    """Frechet distance between Gaussians fitted to two feature sets."""
    if real.cols != gen.cols:
        raise UsageError(f"feature dimension mismatch: {real.cols} vs {gen.cols}")
    return frechet_distance(fit_gaussian(real), fit_gaussian(gen))


def _regularization(cov: np.ndarray) -> float:
    # eps = 1e-6 * mean diagonal mass; keeps the density finite when the
    # covariance is rank-deficient without visibly distorting scores.
    return 1e-6 * float(np.trace(cov)) / cov.shape[0]


def gaussian_log_density(g: GaussianModel, x: np.ndarray) -> float:
    """Natural-log density of x under N(mean, cov + eps*I)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != g.dim:
        raise UsageError(f"point dimension {x.size} does not match model dimension {g.dim}")
    return float(_log_densities(g, x[None, :])[0])


def _log_densities(g: GaussianModel, points: np.ndarray) -> np.ndarray:
    cov = g.cov + _regularization(g.cov) * np.eye(g.dim)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "covariance is singular even after regularization (zero total variance?)"
        ) from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    centered = points - g.mean
    y = np.linalg.solve(chol, centered.T)
    mahal = np.sum(y * y, axis=0)
    return -0.5 * (g.dim * np.log(2.0 * np.pi) + logdet + mahal)


def rank_by_likelihood(
    reference: FeatureMatrix, candidates: FeatureMatrix, k: int
) -> tuple[list[tuple[int, float]], list[tuple[int, float]]]:
    """Score candidate rows under a Gaussian fitted to `reference`.

    Returns (lowest, highest): the k worst- and k best-scoring candidate
    indices with their log-densities, each list ascending by score with
    ties broken by ascending index.
    """
    if reference.cols != candidates.cols:
        raise UsageError(f"feature dimension mismatch: {reference.cols} vs {candidates.cols}")
    n = candidates.rows
    if k < 0 or k > n:
        raise UsageError(f"k must lie in [0, {n}], got {k}")
    if k == 0:
        return [], []
    model = fit_gaussian(reference)
    scores = _log_densities(model, candidates.data.astype(np.float64))
    order = sorted(range(n), key=lambda i: (scores[i], i))
    lowest = [(i, float(scores[i])) for i in order[:k]]
    # Select the k best preferring small indices on ties, then present ascending.
    best = sorted(range(n), key=lambda i: (-scores[i], i))[:k]
    highest = [(i, float(scores[i])) for i in sorted(best, key=lambda i: (scores[i], i))]
    return lowest, highest
