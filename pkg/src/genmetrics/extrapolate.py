"""Sample-size bias correction by extrapolating a metric to infinite N.

Scores measured at several sample sizes are regressed against 1/n by
ordinary least squares; the intercept is the infinite-sample estimate.
Only the generated side is ever subsampled, so the fitted slope isolates
generator-side bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, UsageError
from .gaussian import fit_gaussian, frechet_distance
from .score import inception_score
from .store import FeatureMatrix, ProbMatrix


@dataclass(frozen=True)
class ExtrapolationCurve:
    points: tuple[tuple[int, float], ...]
    intercept: float
    slope: float
    r2: float

    def __post_init__(self) -> None:
        sizes = {n for n, _ in self.points}
        if len(sizes) < 2:
            raise DegenerateError("an extrapolation curve needs at least 2 distinct sample sizes")
        if min(sizes) < 1:
            raise UsageError("sample sizes must be positive")


def extrapolate_to_infinity(points) -> ExtrapolationCurve:
    """OLS fit of score against 1/n; the intercept estimates the n->inf score."""
    pts = [(int(n), float(score)) for n, score in points]
    if len(pts) < 2:
        raise UsageError(f"need at least 2 points, got {len(pts)}")
    sizes = np.array([n for n, _ in pts], dtype=np.float64)
    if np.any(sizes < 1):
        raise UsageError("sample sizes must be positive")
    if np.unique(sizes).size < 2:
        raise DegenerateError("all sample sizes are equal; the regression design is degenerate")
    x = 1.0 / sizes
    y = np.array([s for _, s in pts], dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    residuals = y - (intercept + slope * x)
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((residuals**2).sum()) / ss_tot
    return ExtrapolationCurve(points=tuple(pts), intercept=intercept, slope=slope, r2=r2)


def _subsample_sizes(n_max: int, n_min: int, n_points: int) -> np.ndarray:
    if n_points < 2:
        raise UsageError(f"need at least 2 extrapolation points, got {n_points}")
    if n_min < 2:
        raise UsageError(f"n_min must be >= 2, got {n_min}")
    if n_max < n_min:
        raise UsageError(f"have {n_max} samples but n_min = {n_min}")
    if n_max == n_min:
        raise DegenerateError("n_min equals the sample count; no size range to extrapolate over")
    # Uniform spacing in 1/n between the full set and n_min.
    inv = np.linspace(1.0 / n_max, 1.0 / n_min, n_points)
    return np.clip(np.rint(1.0 / inv).astype(int), n_min, n_max)


def fid_infinity(
    real: FeatureMatrix,
    gen: FeatureMatrix,
    n_points: int = 15,
    n_min: int | None = None,
    seed: int = 0,
) -> ExtrapolationCurve:
    """FID extrapolated to infinite generated-sample count.

    Real statistics are fitted once on the full real set; generated-side
    subsets of the scheduled sizes are drawn without replacement from
    per-size RNG streams derived from `seed`.
    """
    if real.cols != gen.cols:
        raise UsageError(f"feature dimension mismatch: {real.cols} vs {gen.cols}")
    d = gen.cols
    if n_min is None:
        n_min = max(d + 2, gen.rows // 10)
    if n_min < d:
        warnings.warn(
            f"n_min = {n_min} is below the feature dimension {d}; covariances will be singular",
            stacklevel=2,
        )
    sizes = _subsample_sizes(gen.rows, n_min, n_points)
    real_model = fit_gaussian(real)
    gen_data = gen.data
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    points = []
    for size, stream in zip(sizes, streams):
        rng = np.random.default_rng(stream)
        idx = rng.choice(gen.rows, size=int(size), replace=False)
        subset = FeatureMatrix(gen_data[idx], gen.meta)
        points.append((int(size), frechet_distance(real_model, fit_gaussian(subset))))
    return extrapolate_to_infinity(points)


def is_infinity(
    p: ProbMatrix,
    n_points: int = 15,
    n_min: int | None = None,
    seed: int = 0,
) -> ExtrapolationCurve:
    """Inception score extrapolated to infinite sample count (single-split scores)."""
    if n_min is None:
        n_min = max(p.classes + 2, p.rows // 10)
    sizes = _subsample_sizes(p.rows, n_min, n_points)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    points = []
    for size, stream in zip(sizes, streams):
        rng = np.random.default_rng(stream)
        idx = rng.choice(p.rows, size=int(size), replace=False)
        subset = ProbMatrix(p.data[idx], p.meta)
        points.append((int(size), inception_score(subset, n_splits=1).mean))
    return extrapolate_to_infinity(points)
