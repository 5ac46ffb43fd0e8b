"""Typed containers and the GMF1 on-disk format for numeric artifacts.

Layout of a ``.gmf`` file, all little-endian:

    bytes 0..3    magic ``GMF1``
    u32           format version (currently 1)
    u8            kind: 0 = feature matrix, 1 = probability matrix,
                  2 = log-likelihood table
    u64           rows
    u64           cols
    rows*cols f32 payload, row-major

Provenance lives in a JSON sidecar at ``<path>.meta.json``.  Containers
hold float32 (the disk precision) so write/read round-trips are
bit-exact; every numeric routine in this package upcasts to float64
before doing arithmetic.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

MAGIC = b"GMF1"
FORMAT_VERSION = 1

KIND_FEATURE = 0
KIND_PROB = 1
KIND_LOGLIK = 2

_HEADER = struct.Struct("<4sIBQQ")
_KIND_NAMES = {KIND_FEATURE: "feature", KIND_PROB: "prob", KIND_LOGLIK: "loglik"}

GROUND_TRUTH_COLUMN = "ground-truth"

# Backbones with a fixed embedding width; anything else is free-form.
BACKBONE_DIMS = {"inception-pool3": 2048, "clip-image": 512}


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ProvenanceMeta:
    """Where a matrix came from and how its inputs were preprocessed."""

    backbone: str
    preprocessing: str
    source_id: str = ""
    creation_time: str = field(default_factory=_utc_now)

    def __post_init__(self) -> None:
        if not self.backbone:
            raise DataError("provenance backbone must be non-empty")
        if not self.preprocessing:
            raise DataError("provenance preprocessing must be non-empty")

    def to_dict(self) -> dict:
        return {
            "backbone": self.backbone,
            "preprocessing": self.preprocessing,
            "source_id": self.source_id,
            "creation_time": self.creation_time,
        }


def _frozen_f32(values, *, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr.astype(np.float64, copy=False))):
        raise DataError(f"{what} contains NaN or Inf")
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what} overflows float32 storage")
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureMatrix:
    """N x d embedding vectors for one image or sample set (rows = samples)."""

    data: np.ndarray
    meta: ProvenanceMeta

    def __post_init__(self) -> None:
        arr = _frozen_f32(self.data, what="feature matrix")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"feature matrix must be 2-D with N >= 1, d >= 1, got shape {arr.shape}")
        expected = BACKBONE_DIMS.get(self.meta.backbone)
        if expected is not None and arr.shape[1] != expected:
            raise DataError(
                f"backbone {self.meta.backbone!r} requires d = {expected}, got {arr.shape[1]}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ProbMatrix:
    """N x C row-stochastic matrix of conditional class probabilities."""

    data: np.ndarray
    meta: ProvenanceMeta

    def __post_init__(self) -> None:
        arr = _frozen_f32(self.data, what="probability matrix")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"probability matrix must be 2-D and non-empty, got shape {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise DataError("probability entries must lie in [0, 1]")
        sums = arr.astype(np.float64).sum(axis=1)
        worst = float(np.abs(sums - 1.0).max())
        if worst > 1e-6:
            raise DataError(f"probability rows must sum to 1 within 1e-6 (worst deviation {worst:.3g})")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def classes(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SampleSource:
    """Tag recording which distribution a table's rows were drawn from."""

    kind: str  # "data" or "model"
    model_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("data", "model"):
            raise DataError(f"unknown sample source kind {self.kind!r}")
        if self.kind == "model" and not self.model_id:
            raise DataError("model sample source requires a model id")
        if self.kind == "data" and self.model_id is not None:
            raise DataError("data sample source carries no model id")


DATA_SAMPLES = SampleSource("data")


def model_samples(model_id: str) -> SampleSource:
    return SampleSource("model", model_id)


@dataclass(frozen=True)
class LogLikelihoodTable:
    """Per-sample log-likelihood columns (natural log) under several models.

    A column named ``ground-truth`` is mandatory: divergence estimation is
    defined relative to it.
    """

    source: SampleSource
    columns: dict[str, np.ndarray]
    meta: ProvenanceMeta

    def __post_init__(self) -> None:
        if not self.columns:
            raise DataError("log-likelihood table needs at least one column")
        if GROUND_TRUTH_COLUMN not in self.columns:
            raise DataError(f"log-likelihood table requires a {GROUND_TRUTH_COLUMN!r} column")
        frozen: dict[str, np.ndarray] = {}
        length = None
        for name, col in self.columns.items():
            arr = _frozen_f32(col, what=f"log-likelihood column {name!r}")
            if arr.ndim != 1 or arr.shape[0] < 1:
                raise DataError(f"column {name!r} must be a non-empty vector")
            if length is None:
                length = arr.shape[0]
            elif arr.shape[0] != length:
                raise DataError("all log-likelihood columns must have the same length")
            frozen[name] = arr
        object.__setattr__(self, "columns", frozen)

    @property
    def rows(self) -> int:
        return next(iter(self.columns.values())).shape[0]

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]


Matrix = FeatureMatrix | ProbMatrix | LogLikelihoodTable


def _kind_of(m: Matrix) -> int:
    if isinstance(m, FeatureMatrix):
        return KIND_FEATURE
    if isinstance(m, ProbMatrix):
        return KIND_PROB
    if isinstance(m, LogLikelihoodTable):
        return KIND_LOGLIK
    raise DataError(f"cannot serialize object of type {type(m).__name__}")


def _payload_of(m: Matrix) -> np.ndarray:
    if isinstance(m, LogLikelihoodTable):
        return np.column_stack([m.columns[name] for name in m.column_names]).astype("<f4")
    return m.data


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_matrix(m: Matrix, path) -> None:
    """Serialize a container to ``path`` plus its ``.meta.json`` sidecar."""
    path = Path(path)
    kind = _kind_of(m)
    payload = np.ascontiguousarray(_payload_of(m), dtype="<f4")
    rows, cols = payload.shape
    doc = m.meta.to_dict()
    doc["kind"] = _KIND_NAMES[kind]
    if isinstance(m, LogLikelihoodTable):
        loglik = {"columns": m.column_names, "sampled_from": m.source.kind}
        if m.source.kind == "model":
            loglik["model_id"] = m.source.model_id
        doc["loglik"] = loglik
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, kind, rows, cols))
        fh.write(payload.tobytes())
    sidecar_path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_sidecar(path: Path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        raise FormatError(f"missing sidecar {side}")
    try:
        doc = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"sidecar {side} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"sidecar {side} must hold a JSON object")
    return doc


def read_matrix(path) -> Matrix:
    """Inverse of :func:`write_matrix`; validates format and data invariants."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a GMF1 header")
    magic, version, kind, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if kind not in _KIND_NAMES:
        raise FormatError(f"{path}: unknown matrix kind {kind}")
    if rows < 1 or cols < 1:
        raise DataError(f"{path}: header declares empty matrix {rows}x{cols}")
    expected = _HEADER.size + rows * cols * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: payload size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)

    doc = _read_sidecar(path)
    if doc.get("kind") != _KIND_NAMES[kind]:
        raise FormatError(f"{path}: sidecar kind {doc.get('kind')!r} disagrees with header")
    try:
        meta = ProvenanceMeta(
            backbone=doc["backbone"],
            preprocessing=doc["preprocessing"],
            source_id=doc.get("source_id", ""),
            creation_time=doc.get("creation_time", ""),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: sidecar missing field {exc}") from exc

    if kind == KIND_FEATURE:
        return FeatureMatrix(data, meta)
    if kind == KIND_PROB:
        return ProbMatrix(data, meta)

    loglik = doc.get("loglik")
    if not isinstance(loglik, dict):
        raise FormatError(f"{path}: loglik sidecar section missing")
    names = loglik.get("columns")
    if not isinstance(names, list) or len(names) != cols:
        raise FormatError(f"{path}: sidecar declares {names!r} column names for {cols} columns")
    sampled_from = loglik.get("sampled_from")
    if sampled_from == "data":
        source = DATA_SAMPLES
    elif sampled_from == "model":
        source = model_samples(loglik.get("model_id", ""))
    else:
        raise FormatError(f"{path}: unknown sampled_from {sampled_from!r}")
    columns = {str(name): data[:, j] for j, name in enumerate(names)}
    return LogLikelihoodTable(source=source, columns=columns, meta=meta)
