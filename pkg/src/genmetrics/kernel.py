"""Unbiased squared MMD under a polynomial kernel, and its subset-averaged form.

The default kernel is (<x,y>/d + 1)^3.  The U-statistic estimator is
unbiased, so negative values are legitimate and are never clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .store import FeatureMatrix


@dataclass(frozen=True)
class KernelSpec:
    """Polynomial kernel (gamma * <x,y> + coef)^degree; gamma="auto" means 1/d."""

    degree: int = 3
    gamma: float | str = "auto"
    coef: float = 1.0

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise UsageError(f"kernel degree must be >= 1, got {self.degree}")
        if self.gamma != "auto" and not float(self.gamma) > 0.0:
            raise UsageError(f"kernel gamma must be positive, got {self.gamma}")

    def resolve_gamma(self, d: int) -> float:
        return 1.0 / d if self.gamma == "auto" else float(self.gamma)


@dataclass(frozen=True)
class KidResult:
    mean: float
    std: float
    subset_size: int
    n_subsets: int

    def __post_init__(self) -> None:
        if self.std < 0.0:
            raise UsageError("std must be non-negative")
        if self.n_subsets < 1:
            raise UsageError("n_subsets must be >= 1")


def kernel_eval(x: np.ndarray, y: np.ndarray, k: KernelSpec = KernelSpec()) -> float:
    """Evaluate the kernel on a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise UsageError(f"dimension mismatch: {x.size} vs {y.size}")
    gamma = k.resolve_gamma(x.size)
    return float((gamma * (x @ y) + k.coef) ** k.degree)


def _gram(a: np.ndarray, b: np.ndarray, k: KernelSpec) -> np.ndarray:
    gamma = k.resolve_gamma(a.shape[1])
    return (gamma * (a @ b.T) + k.coef) ** k.degree


def _mmd2_arrays(x: np.ndarray, y: np.ndarray, k: KernelSpec) -> float:
    nx, ny = x.shape[0], y.shape[0]
    kxx = _gram(x, x, k)
    kyy = _gram(y, y, k)
    within_x = (kxx.sum() - np.trace(kxx)) / (nx * (nx - 1))
    within_y = (kyy.sum() - np.trace(kyy)) / (ny * (ny - 1))
    # Cross Gram in a canonical argument order so mmd2(x, y) == mmd2(y, x)
    # bit for bit (BLAS does not promise elementwise-transposed products).
    if (x.shape, x.tobytes()) <= (y.shape, y.tobytes()):
        cross = _gram(x, y, k).sum() / (nx * ny)
    else:
        cross = _gram(y, x, k).sum() / (nx * ny)
    return float(within_x + within_y - 2.0 * cross)


def mmd2_unbiased(x: FeatureMatrix, y: FeatureMatrix, k: KernelSpec = KernelSpec()) -> float:
    """U-statistic estimator of squared MMD; may be negative."""
    if x.cols != y.cols:
        raise UsageError(f"feature dimension mismatch: {x.cols} vs {y.cols}")
    if x.rows < 2 or y.rows < 2:
        raise UsageError("MMD^2 needs at least 2 samples on each side")
    return _mmd2_arrays(x.data.astype(np.float64), y.data.astype(np.float64), k)


def kid(
    real: FeatureMatrix,
    gen: FeatureMatrix,
    subset_size: int | None = None,
    n_subsets: int = 100,
    seed: int = 0,
    kernel: KernelSpec = KernelSpec(),
) -> KidResult:
    """Mean and std of unbiased MMD^2 over seeded subset pairs.

    Each subset is drawn uniformly without replacement from its side; the
    RNG stream for subset i is derived from (seed, i), so results do not
    depend on evaluation order.
    """
    if real.cols != gen.cols:
        raise UsageError(f"feature dimension mismatch: {real.cols} vs {gen.cols}")
    limit = min(real.rows, gen.rows)
    if subset_size is None:
        subset_size = min(1000, limit)
    if subset_size < 2 or subset_size > limit:
        raise UsageError(f"subset_size must lie in [2, {limit}], got {subset_size}")
    if n_subsets < 1:
        raise UsageError(f"n_subsets must be >= 1, got {n_subsets}")
    x = real.data.astype(np.float64)
    y = gen.data.astype(np.float64)
    streams = np.random.SeedSequence(seed).spawn(n_subsets)
    values = np.empty(n_subsets)
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        ix = rng.choice(real.rows, size=subset_size, replace=False)
        iy = rng.choice(gen.rows, size=subset_size, replace=False)
        values[i] = _mmd2_arrays(x[ix], y[iy], kernel)
    return KidResult(
        mean=float(values.mean()),
        std=float(values.std()),
        subset_size=subset_size,
        n_subsets=n_subsets,
    )
