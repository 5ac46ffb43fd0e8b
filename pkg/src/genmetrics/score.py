"""Inception-style score from a conditional class-probability matrix.

Per block of rows: marginal = column mean, score = exp of the average KL
divergence from each row to that marginal.  The reported value is the
mean over blocks, with its std as spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .store import ProbMatrix


@dataclass(frozen=True)
class IsResult:
    mean: float
    std: float
    n_splits: int

    def __post_init__(self) -> None:
        if self.mean < 1.0 - 1e-9:
            raise UsageError(f"score mean {self.mean} violates the >= 1 lower bound")
        if self.std < 0.0:
            raise UsageError("std must be non-negative")


def _block_score(block: np.ndarray) -> float:
    # fsum gives the correctly rounded sum, so row order and row
    # duplication (by powers of two) cannot change the result.
    n, c = block.shape
    marginal = np.array([math.fsum(block[:, j].tolist()) / n for j in range(c)])
    log_marginal = np.where(marginal > 0.0, np.log(np.where(marginal > 0.0, marginal, 1.0)), 0.0)
    log_block = np.where(block > 0.0, np.log(np.where(block > 0.0, block, 1.0)), 0.0)
    # 0 * log 0 = 0; p > 0 implies marginal > 0, so the log difference is finite.
    kl_rows = np.sum(block * (log_block - log_marginal), axis=1)
    return math.exp(math.fsum(kl_rows.tolist()) / n)


def inception_score(p: ProbMatrix, n_splits: int = 10) -> IsResult:
    """Exponentiated mean row-to-marginal KL, averaged over contiguous splits.

    Rows are partitioned into `n_splits` contiguous equal-size blocks, any
    remainder going to the last block.
    """
    n = p.rows
    if n_splits < 1 or n_splits > n:
        raise UsageError(f"n_splits must lie in [1, {n}], got {n_splits}")
    data = p.data.astype(np.float64)
    base = n // n_splits
    scores = []
    for i in range(n_splits):
        start = i * base
        stop = (i + 1) * base if i < n_splits - 1 else n
        scores.append(_block_score(data[start:stop]))
    scores = np.asarray(scores)
    return IsResult(mean=float(scores.mean()), std=float(scores.std()), n_splits=n_splits)
