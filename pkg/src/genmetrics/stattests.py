"""Random-projection normality testing and ranking-correlation analysis.

The normality side projects a feature matrix onto many random unit
directions and runs D'Agostino's K-squared omnibus test on each 1-D
projection; any linear image of a multivariate Gaussian is Gaussian, so
low p-values indict the Gaussian assumption itself.

The correlation side compares how different metrics rank a set of model
checkpoints: Kendall tau-b (tie corrected, merge-sort counting),
Spearman rho (Pearson on average ranks) and plain Pearson r.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateError, UsageError
from .store import FeatureMatrix

METHODS = ("kendall", "spearman", "pearson")
ORIENTATIONS = ("higher", "lower")


# ---------------------------------------------------------------------------
# normality pipeline


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random direction: normalized standard-normal draw."""
    if d < 1:
        raise UsageError(f"dimension must be >= 1, got {d}")
    while True:
        v = rng.standard_normal(d)
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            return v / norm


def _fsum(values: np.ndarray) -> float:
    # Correctly rounded sum: sample order cannot perturb the statistic.
    return math.fsum(values.tolist())


def dagostino_k2(sample) -> tuple[float, float]:
    """D'Agostino's K-squared omnibus normality statistic and its p-value.

    Combines the D'Agostino skewness transform with the Anscombe-Glynn
    kurtosis transform, both with the standard finite-n constants;
    K2 = Z_skew^2 + Z_kurt^2 is chi-squared with 2 dof under the null,
    whose survival function has the closed form exp(-K2/2).
    """
    x = np.asarray(sample, dtype=np.float64).reshape(-1)
    n = x.size
    if n < 20:
        raise UsageError(f"the K-squared transforms need n >= 20, got {n}")
    mean = _fsum(x) / n
    dev = x - mean
    m2 = _fsum(dev * dev) / n
    if m2 == 0.0:
        raise DegenerateError("sample has zero variance")
    m3 = _fsum(dev**3) / n
    m4 = _fsum(dev**4) / n
    g1 = m3 / m2**1.5
    b2 = m4 / m2**2

    # Skewness: D'Agostino's normalizing transform.
    y = g1 * math.sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)))
    beta2 = 3.0 * (n**2 + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) / (
        (n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0)
    )
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    z_skew = delta * math.asinh(y / alpha)

    # Kurtosis: Anscombe-Glynn transform.
    e_b2 = 3.0 * (n - 1.0) / (n + 1.0)
    var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) ** 2 * (n + 3.0) * (n + 5.0))
    std_b2 = (b2 - e_b2) / math.sqrt(var_b2)
    skew_of_b2 = (
        6.0
        * (n**2 - 5.0 * n + 2.0)
        / ((n + 7.0) * (n + 9.0))
        * math.sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)))
    )
    a = 6.0 + 8.0 / skew_of_b2 * (2.0 / skew_of_b2 + math.sqrt(1.0 + 4.0 / skew_of_b2**2))
    denom = 1.0 + std_b2 * math.sqrt(2.0 / (a - 4.0))
    if denom == 0.0:
        # The transform diverges here; the sample is as non-normal as it gets.
        return float("inf"), 0.0
    z_kurt = ((1.0 - 2.0 / (9.0 * a)) - math.copysign(abs((1.0 - 2.0 / a) / denom) ** (1.0 / 3.0), denom)) / math.sqrt(
        2.0 / (9.0 * a)
    )

    k2 = z_skew**2 + z_kurt**2
    return k2, math.exp(-k2 / 2.0)


@dataclass(frozen=True)
class NormalityReport:
    """Mean p-value over random 1-D projections, plus labeled extras.

    mean_p follows the pipeline definition verbatim; median_p and
    frac_below_05 are supplementary diagnostics, not part of it.
    """

    mean_p: float
    per_projection_p: tuple[float, ...]
    n_projections: int
    seed: int
    d: int
    median_p: float
    frac_below_05: float

    def __post_init__(self) -> None:
        if len(self.per_projection_p) != self.n_projections:
            raise DataError("per-projection list length must equal the projection count")
        if any(p < 0.0 or p > 1.0 for p in self.per_projection_p):
            raise DataError("p-values must lie in [0, 1]")


def projection_normality(features: FeatureMatrix, n_projections: int = 1000, seed: int = 0) -> NormalityReport:
    """Project onto seeded random directions and test each projection.

    Projection t uses an RNG stream derived from (seed, t), so the report
    is deterministic and independent of evaluation order.
    """
    if n_projections < 1:
        raise UsageError(f"need at least one projection, got {n_projections}")
    if features.rows < 20:
        raise UsageError(f"need at least 20 samples, got {features.rows}")
    a = features.data.astype(np.float64)
    ps = []
    for stream in np.random.SeedSequence(seed).spawn(n_projections):
        direction = random_unit_vector(features.cols, np.random.default_rng(stream))
        _, p = dagostino_k2(a @ direction)
        ps.append(p)
    return NormalityReport(
        mean_p=math.fsum(ps) / n_projections,
        per_projection_p=tuple(ps),
        n_projections=n_projections,
        seed=seed,
        d=features.cols,
        median_p=float(statistics.median(ps)),
        frac_below_05=sum(1 for p in ps if p < 0.05) / n_projections,
    )


# ---------------------------------------------------------------------------
# rank correlations


def _count_inversions(values: list) -> int:
    """Pairs i < j with values[i] > values[j], by bottom-up merge sort."""
    n = len(values)
    buf = list(values)
    tmp = [None] * n
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[j] < buf[i]:
                    count += mid - i
                    tmp[k] = buf[j]
                    j += 1
                else:
                    tmp[k] = buf[i]
                    i += 1
                k += 1
            tmp[k:hi] = buf[i:mid] if i < mid else buf[j:hi]
        buf, tmp = tmp, buf
        width *= 2
    return count


def _tie_term(sorted_values) -> int:
    total = 0
    run = 1
    for prev, cur in zip(sorted_values, sorted_values[1:]):
        if cur == prev:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def _as_pair(x, y) -> tuple[list, list]:
    xs = np.asarray(x, dtype=np.float64).reshape(-1).tolist()
    ys = np.asarray(y, dtype=np.float64).reshape(-1).tolist()
    if len(xs) != len(ys):
        raise UsageError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise UsageError("correlation needs at least 2 observations")
    return xs, ys


def kendall_tau(x, y) -> float:
    """Tie-corrected Kendall tau-b in O(n log n) (Knight's algorithm)."""
    xs, ys = _as_pair(x, y)
    n = len(xs)
    pairs = sorted(zip(xs, ys))
    sx = [p[0] for p in pairs]
    sy = [p[1] for p in pairs]
    n0 = n * (n - 1) // 2
    ties_x = _tie_term(sx)
    ties_xy = _tie_term(pairs)
    swaps = _count_inversions(sy)
    ties_y = _tie_term(sorted(sy))
    if n0 == ties_x or n0 == ties_y:
        raise DegenerateError("tau is undefined when one side is entirely tied")
    nc_minus_nd = n0 - ties_x - ties_y + ties_xy - 2 * swaps
    return nc_minus_nd / math.sqrt((n0 - ties_x) * (n0 - ties_y))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    n = values.size
    order = np.argsort(values, kind="stable")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j < n and values[order[j]] == values[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j - 1) / 2.0 + 1.0
        i = j
    return ranks


def pearson_r(x, y) -> float:
    """Product-moment correlation."""
    xs, ys = _as_pair(x, y)
    xv = np.asarray(xs) - np.mean(xs)
    yv = np.asarray(ys) - np.mean(ys)
    sx = float(xv @ xv)
    sy = float(yv @ yv)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("correlation is undefined for a constant input")
    r = float(xv @ yv) / math.sqrt(sx * sy)
    return min(1.0, max(-1.0, r))


def spearman_rho(x, y) -> float:
    """Pearson correlation of average-rank-transformed inputs."""
    xs, ys = _as_pair(x, y)
    return pearson_r(_average_ranks(np.asarray(xs)), _average_ranks(np.asarray(ys)))


_COEFFICIENTS = {"kendall": kendall_tau, "spearman": spearman_rho, "pearson": pearson_r}


# ---------------------------------------------------------------------------
# score tables and correlation matrices


@dataclass(frozen=True)
class ScoreTable:
    """Checkpoints x metrics score matrix with per-metric orientation flags."""

    row_labels: tuple[str, ...]
    metrics: tuple[str, ...]
    values: np.ndarray
    orientations: dict[str, str]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.row_labels), len(self.metrics)):
            raise DataError(
                f"value shape {values.shape} does not match {len(self.row_labels)} rows"
                f" x {len(self.metrics)} metrics"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("score table has missing or non-finite cells")
        if len(set(self.row_labels)) != len(self.row_labels):
            raise DataError("duplicate row labels")
        if len(set(self.metrics)) != len(self.metrics):
            raise DataError("duplicate metric names")
        for metric in self.metrics:
            if self.orientations.get(metric) not in ORIENTATIONS:
                raise DataError(f"metric {metric!r} needs an orientation in {ORIENTATIONS}")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def column(self, metric: str) -> np.ndarray:
        return self.values[:, self.metrics.index(metric)]

    def to_csv(self) -> str:
        out = io.StringIO()
        flags = ", ".join(f"{m}={self.orientations[m]}" for m in self.metrics)
        out.write(f"# orientation: {flags}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["model", *self.metrics])
        for label, row in zip(self.row_labels, self.values):
            writer.writerow([label, *(repr(float(v)) for v in row)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# orientation:"):
            raise DataError("score table CSV must start with an '# orientation:' header line")
        orientations = {}
        header = lines[0].split(":", 1)[1].strip()
        if header:
            for item in header.split(","):
                name, _, flag = item.strip().partition("=")
                orientations[name.strip()] = flag.strip()
        rows = list(csv.reader(lines[1:]))
        if not rows:
            raise DataError("score table CSV has no header row")
        metrics = tuple(rows[0][1:])
        labels = tuple(r[0] for r in rows[1:] if r)
        try:
            values = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r])
        except ValueError as exc:
            raise DataError(f"non-numeric score cell: {exc}") from exc
        return cls(row_labels=labels, metrics=metrics, values=values, orientations=orientations)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric metric x metric coefficient matrix; NaN marks undefined cells."""

    labels: tuple[str, ...]
    method: str
    values: np.ndarray
    undefined_pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        k = len(self.labels)
        if self.method not in METHODS:
            raise UsageError(f"method must be one of {METHODS}, got {self.method!r}")
        if values.shape != (k, k):
            raise DataError(f"matrix shape {values.shape} does not match {k} labels")
        if not np.array_equal(values, values.T, equal_nan=True):
            raise DataError("correlation matrix must be exactly symmetric")
        if not np.all(np.diag(values) == 1.0):
            raise DataError("correlation matrix must have a unit diagonal")
        finite = values[np.isfinite(values)]
        if finite.size and (finite.min() < -1.0 or finite.max() > 1.0):
            raise DataError("coefficients must lie in [-1, 1]")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["metric", *self.labels])
        for label, row in zip(self.labels, self.values):
            writer.writerow([label, *("" if math.isnan(v) else repr(float(v)) for v in row)])
        return out.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "labels": list(self.labels),
            "matrix": [[None if math.isnan(v) else float(v) for v in row] for row in self.values],
            "undefined_pairs": [list(p) for p in self.undefined_pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def correlation_matrix(scores: ScoreTable, method: str, rows: list[str] | None = None) -> CorrelationMatrix:
    """Pairwise metric correlations over (a row subset of) a score table.

    Lower-is-better columns are negated first so every metric ranks in the
    same direction; undefined pairs are flagged and left as NaN rather than
    failing the whole matrix.
    """
    if method not in _COEFFICIENTS:
        raise UsageError(f"method must be one of {METHODS}, got {method!r}")
    if rows is None:
        values = np.array(scores.values, dtype=np.float64)
    else:
        missing = [r for r in rows if r not in scores.row_labels]
        if missing:
            raise UsageError(f"unknown row labels: {missing}")
        keep = [i for i, label in enumerate(scores.row_labels) if label in set(rows)]
        values = np.array(scores.values[keep], dtype=np.float64)
    if values.shape[0] < 2:
        raise UsageError("correlation needs at least 2 rows")
    for j, metric in enumerate(scores.metrics):
        if scores.orientations[metric] == "lower":
            values[:, j] = -values[:, j]
    coeff = _COEFFICIENTS[method]
    k = len(scores.metrics)
    matrix = np.eye(k)
    undefined = []
    for i in range(k):
        for j in range(i + 1, k):
            try:
                c = coeff(values[:, i], values[:, j])
            except DegenerateError:
                c = float("nan")
                undefined.append((scores.metrics[i], scores.metrics[j]))
            matrix[i, j] = matrix[j, i] = c
    return CorrelationMatrix(
        labels=scores.metrics,
        method=method,
        values=matrix,
        undefined_pairs=tuple(undefined),
    )
