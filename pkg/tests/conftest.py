import numpy as np
import pytest

from genmetrics.store import FeatureMatrix, ProbMatrix, ProvenanceMeta


def meta(backbone="synthetic", preprocessing="none", source_id="test"):
    return ProvenanceMeta(
        backbone=backbone,
        preprocessing=preprocessing,
        source_id=source_id,
        creation_time="2000-01-01T00:00:00+00:00",
    )


def features(data, **meta_kwargs) -> FeatureMatrix:
    return FeatureMatrix(np.asarray(data), meta(**meta_kwargs))


def probs(data) -> ProbMatrix:
    return ProbMatrix(np.asarray(data), meta())


def gaussian_features(rng, n, d, mean=0.0, scale=1.0) -> FeatureMatrix:
    return features(rng.standard_normal((n, d)) * scale + mean)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
