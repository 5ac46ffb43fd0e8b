"""Monte-Carlo KL/RKL estimators and a tractable categorical test bed.

The estimators only need per-sample log-likelihood columns, so they work
for any model that can score its own samples.  The categorical
autoregressive models here provide exact likelihoods and, for small
state spaces, exact divergences by full enumeration, which is what makes
them useful as ground truth for the estimators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError
from .store import GROUND_TRUTH_COLUMN, LogLikelihoodTable

ENUMERATION_BOUND = 2**20
# ln of the smallest positive double is about -744.4; zero-probability
# transitions are floored here instead of propagating -inf into means.
LOG_FLOOR = -745.0


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    std_error: float
    n: int
    direction: str  # "KL" or "RKL"

    def __post_init__(self) -> None:
        if self.std_error < 0.0:
            raise UsageError("std_error must be non-negative")
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.direction not in ("KL", "RKL"):
            raise UsageError(f"unknown direction {self.direction!r}")


def _column_pair(table: LogLikelihoodTable, model_col: str) -> tuple[np.ndarray, np.ndarray]:
    if model_col not in table.columns:
        raise UsageError(f"table has no column {model_col!r}; available: {table.column_names}")
    gt = table.column(GROUND_TRUTH_COLUMN).astype(np.float64)
    model = table.column(model_col).astype(np.float64)
    return gt, model


def _mean_and_se(diff: np.ndarray) -> tuple[float, float]:
    n = diff.size
    se = 0.0 if n < 2 else float(diff.std(ddof=1)) / float(np.sqrt(n))
    return float(diff.mean()), se


def kl_estimate(table: LogLikelihoodTable, model_col: str) -> DivergenceEstimate:
    """KL(data || model) from samples drawn from the data distribution."""
    if table.source.kind != "data":
        raise UsageError("KL estimation needs a table of data samples")
    gt, model = _column_pair(table, model_col)
    value, se = _mean_and_se(gt - model)
    return DivergenceEstimate(value=value, std_error=se, n=gt.size, direction="KL")


def rkl_estimate(table: LogLikelihoodTable, model_col: str) -> DivergenceEstimate:
    """KL(model || data) from samples drawn from the model itself."""
    if table.source.kind != "model" or table.source.model_id != model_col:
        raise UsageError(
            f"RKL estimation needs a table sampled from model {model_col!r}, "
            f"got source {table.source}"
        )
    gt, model = _column_pair(table, model_col)
    value, se = _mean_and_se(model - gt)
    return DivergenceEstimate(value=value, std_error=se, n=gt.size, direction="RKL")


@dataclass(frozen=True)
class CategoricalARModel:
    """Autoregressive categorical model with full-context conditional tables.

    ``tables[t]`` has shape (V**t, V): one row-stochastic conditional per
    context, contexts indexed as base-V integers.
    """

    seq_len: int
    alphabet: int
    tables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.seq_len < 1 or self.alphabet < 1:
            raise DataError("seq_len and alphabet must be >= 1")
        if len(self.tables) != self.seq_len:
            raise DataError(f"expected {self.seq_len} conditional tables, got {len(self.tables)}")
        frozen = []
        for t, table in enumerate(self.tables):
            arr = np.asarray(table, dtype=np.float64)
            want = (self.alphabet**t, self.alphabet)
            if arr.shape != want:
                raise DataError(f"table {t} must have shape {want}, got {arr.shape}")
            if arr.min() < 0.0:
                raise DataError(f"table {t} has negative probabilities")
            if np.abs(arr.sum(axis=1) - 1.0).max() > 1e-9:
                raise DataError(f"table {t} rows must sum to 1 within 1e-9")
            if arr.flags.writeable:
                arr = arr.copy()
                arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "tables", tuple(frozen))

    @property
    def n_states(self) -> int:
        return self.alphabet**self.seq_len


def random_model(
    seq_len: int, alphabet: int, seed: int, concentration: float = 0.5
) -> CategoricalARModel:
    """Random model with Dirichlet-distributed conditional rows."""
    rng = np.random.default_rng(seed)
    tables = []
    for t in range(seq_len):
        rows = rng.dirichlet([concentration] * alphabet, size=alphabet**t)
        tables.append(rows / rows.sum(axis=1, keepdims=True))
    return CategoricalARModel(seq_len=seq_len, alphabet=alphabet, tables=tuple(tables))


def uniform_model(seq_len: int, alphabet: int) -> CategoricalARModel:
    tables = tuple(
        np.full((alphabet**t, alphabet), 1.0 / alphabet) for t in range(seq_len)
    )
    return CategoricalARModel(seq_len=seq_len, alphabet=alphabet, tables=tables)


def ar_sample(
    m: CategoricalARModel, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n ancestral samples; returns (sequences, exact log-likelihoods)."""
    if n < 1:
        raise UsageError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    seqs = np.empty((n, m.seq_len), dtype=np.int64)
    loglik = np.zeros(n)
    ctx = np.zeros(n, dtype=np.int64)
    for t in range(m.seq_len):
        probs = m.tables[t][ctx]
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)
        sym = np.minimum((u[:, None] > cum).sum(axis=1), m.alphabet - 1)
        loglik += np.log(probs[np.arange(n), sym])
        seqs[:, t] = sym
        ctx = ctx * m.alphabet + sym
    return seqs, loglik


def ar_loglik(m: CategoricalARModel, sequences) -> tuple[np.ndarray, np.ndarray]:
    """Exact log-likelihood per sequence.

    Zero-probability transitions would give -inf; those totals are floored
    at -745 and flagged in the returned boolean mask.
    """
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim == 1:
        seqs = seqs[None, :]
    if seqs.ndim != 2 or seqs.shape[1] != m.seq_len:
        raise UsageError(f"sequences must be (n, {m.seq_len}), got shape {seqs.shape}")
    if seqs.min() < 0 or seqs.max() >= m.alphabet:
        raise UsageError(f"sequence symbols must lie in [0, {m.alphabet})")
    n = seqs.shape[0]
    total = np.zeros(n)
    ctx = np.zeros(n, dtype=np.int64)
    with np.errstate(divide="ignore"):
        for t in range(m.seq_len):
            sym = seqs[:, t]
            total += np.log(m.tables[t][ctx, sym])
            ctx = ctx * m.alphabet + sym
    floored = total < LOG_FLOOR
    return np.maximum(total, LOG_FLOOR), floored


def enumerate_log_probs(m: CategoricalARModel) -> np.ndarray:
    """Log-probability of every sequence, indexed as base-V integers."""
    if m.n_states > ENUMERATION_BOUND:
        raise UsageError(f"state space {m.n_states} exceeds enumeration bound {ENUMERATION_BOUND}")
    lp = np.zeros(1)
    with np.errstate(divide="ignore"):
        for t in range(m.seq_len):
            lp = (lp[:, None] + np.log(m.tables[t])).reshape(-1)
    return lp


def exact_kl_enumerate(p: CategoricalARModel, q: CategoricalARModel) -> float:
    """KL(p || q) by full enumeration of the sequence space."""
    if (p.seq_len, p.alphabet) != (q.seq_len, q.alphabet):
        raise UsageError("models must share sequence length and alphabet")
    lp = enumerate_log_probs(p)
    lq = enumerate_log_probs(q)
    mask = lp > -np.inf
    if np.any(lq[mask] == -np.inf):
        return float("inf")
    probs = np.exp(lp[mask])
    return float(np.sum(probs * (lp[mask] - lq[mask])))


def testbed_trajectory(
    target: CategoricalARModel, n_checkpoints: int, noise_schedule
) -> list[CategoricalARModel]:
    """Checkpoints interpolating between uniform noise and the target.

    Checkpoint i has every conditional row (1 - w_i) * target + w_i * uniform,
    so a non-increasing schedule plays the role of a training trajectory.
    """
    weights = [float(w) for w in noise_schedule]
    if len(weights) != n_checkpoints:
        raise UsageError(f"expected {n_checkpoints} weights, got {len(weights)}")
    if any(w < 0.0 or w > 1.0 for w in weights):
        raise UsageError("mixing weights must lie in [0, 1]")
    if any(b > a for a, b in zip(weights, weights[1:])):
        raise UsageError("mixing weights must be non-increasing")
    v = target.alphabet
    checkpoints = []
    for w in weights:
        tables = tuple((1.0 - w) * tab + w / v for tab in target.tables)
        checkpoints.append(
            CategoricalARModel(seq_len=target.seq_len, alphabet=target.alphabet, tables=tables)
        )
    return checkpoints


def model_to_dict(m: CategoricalARModel) -> dict:
    return {
        "alphabet": m.alphabet,
        "seq_len": m.seq_len,
        "tables": [t.tolist() for t in m.tables],
    }


def model_from_dict(doc: dict) -> CategoricalARModel:
    try:
        return CategoricalARModel(
            seq_len=int(doc["seq_len"]),
            alphabet=int(doc["alphabet"]),
            tables=tuple(np.asarray(t) for t in doc["tables"]),
        )
    except KeyError as exc:
        raise DataError(f"model document missing field {exc}") from exc


def save_model(m: CategoricalARModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), sort_keys=True) + "\n")


def load_model(path) -> CategoricalARModel:
    return model_from_dict(json.loads(Path(path).read_text()))


__all__ = [
    "CategoricalARModel",
    "DivergenceEstimate",
    "ar_loglik",
    "ar_sample",
    "enumerate_log_probs",
    "exact_kl_enumerate",
    "kl_estimate",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "random_model",
    "rkl_estimate",
    "save_model",
    "testbed_trajectory",
    "uniform_model",
]
