import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from genmetrics.errors import DataError, DegenerateError, UsageError
from genmetrics.stattests import (
    CorrelationMatrix,
    ScoreTable,
    correlation_matrix,
    dagostino_k2,
    kendall_tau,
    pearson_r,
    projection_normality,
    random_unit_vector,
    spearman_rho,
)

from conftest import features


def brute_force_tau_b(x, y):
    n = len(x)
    nc = nd = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy = x[i] - x[j], y[i] - y[j]
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            if dx != 0 and dy != 0:
                if (dx > 0) == (dy > 0):
                    nc += 1
                else:
                    nd += 1
    n0 = n * (n - 1) // 2
    return (nc - nd) / math.sqrt((n0 - ties_x) * (n0 - ties_y))


class TestRandomUnitVector:
    def test_one_dimensional_is_sign(self, rng):
        values = {float(random_unit_vector(1, rng)[0]) for _ in range(50)}
        assert values <= {1.0, -1.0}
        assert len(values) == 2

    def test_unit_norm(self, rng):
        for d in (2, 5, 33):
            v = random_unit_vector(d, rng)
            assert abs(np.linalg.norm(v) - 1.0) <= 1e-12

    def test_sphere_symmetry(self, rng):
        draws = np.array([random_unit_vector(8, rng) for _ in range(100_000)])
        # Coordinates of a uniform direction have mean 0, variance 1/d.
        sigma = math.sqrt(1.0 / 8 / len(draws))
        assert np.abs(draws.mean(axis=0)).max() <= 3 * sigma

    def test_zero_dimension_rejected(self, rng):
        with pytest.raises(UsageError):
            random_unit_vector(0, rng)


class TestDagostinoK2:
    def test_matches_reference_statistics(self, rng):
        # scipy implements the same two transforms; use it as the oracle.
        for n in (20, 57, 200, 5000):
            x = rng.standard_normal(n) * 3 + 1
            k2, p = dagostino_k2(x)
            ref = scipy.stats.normaltest(x)
            assert k2 == pytest.approx(float(ref.statistic), rel=1e-10)
            assert p == pytest.approx(float(ref.pvalue), rel=1e-10)

    def test_survival_function_at_zero(self, rng):
        k2, p = dagostino_k2(rng.standard_normal(500))
        assert p == pytest.approx(math.exp(-k2 / 2.0), rel=1e-15)
        assert math.exp(-0.0 / 2.0) == 1.0  # k2 = 0 maps to p = 1

    def test_null_p_values_center_near_half(self):
        ps = []
        for seed in range(200):
            x = np.random.default_rng(seed).standard_normal(5000)
            ps.append(dagostino_k2(x)[1])
        assert 0.40 <= np.mean(ps) <= 0.60

    def test_exponential_sample_rejected(self, rng):
        x = rng.exponential(size=1000)
        k2, p = dagostino_k2(x)
        assert p < 1e-6
        assert p == pytest.approx(float(scipy.stats.normaltest(x).pvalue), rel=1e-8)

    def test_small_sample_rejected(self, rng):
        with pytest.raises(UsageError):
            dagostino_k2(rng.standard_normal(19))

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateError):
            dagostino_k2(np.full(50, 3.3))

    def test_permutation_invariant(self, rng):
        x = rng.standard_normal(400)
        shuffled = x[rng.permutation(400)]
        assert dagostino_k2(x) == dagostino_k2(shuffled)


class TestProjectionNormality:
    def test_gaussian_features_score_near_half(self, rng):
        feats = features(rng.standard_normal((5000, 16)))
        report = projection_normality(feats, n_projections=100, seed=3)
        assert 0.3 <= report.mean_p <= 0.7

    def test_separated_mixture_rejected(self, rng):
        half = rng.standard_normal((2500, 16))
        feats = features(np.vstack([half - 25.0, half + 25.0]))
        report = projection_normality(feats, n_projections=100, seed=3)
        assert report.mean_p < 0.02

    def test_deterministic_given_seed(self, rng):
        feats = features(rng.standard_normal((200, 4)))
        a = projection_normality(feats, n_projections=25, seed=9)
        b = projection_normality(feats, n_projections=25, seed=9)
        assert a == b
        c = projection_normality(feats, n_projections=25, seed=10)
        assert c.per_projection_p != a.per_projection_p

    def test_single_projection(self, rng):
        feats = features(rng.standard_normal((50, 3)))
        report = projection_normality(feats, n_projections=1, seed=0)
        assert len(report.per_projection_p) == 1

    def test_row_permutation_keeps_p_multiset(self, rng):
        feats = features(rng.standard_normal((300, 5)))
        permuted = features(feats.data[rng.permutation(300)])
        a = projection_normality(feats, n_projections=40, seed=1)
        b = projection_normality(permuted, n_projections=40, seed=1)
        assert sorted(a.per_projection_p) == sorted(b.per_projection_p)

    def test_needs_twenty_rows(self, rng):
        with pytest.raises(UsageError):
            projection_normality(features(rng.standard_normal((19, 3))), n_projections=1, seed=0)


class TestKendallTau:
    def test_perfect_agreement(self):
        assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0

    def test_perfect_reversal(self):
        assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_hand_counted_pair(self):
        assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_matches_brute_force_exactly(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 120))
            x = rng.integers(0, 10, size=n).astype(float)
            y = rng.integers(0, 10, size=n).astype(float)
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            assert kendall_tau(x, y) == brute_force_tau_b(list(x), list(y))

    def test_matches_scipy(self, rng):
        x = rng.integers(0, 50, size=200).astype(float)
        y = rng.integers(0, 50, size=200).astype(float)
        ours = kendall_tau(x, y)
        reference = scipy.stats.kendalltau(x, y).statistic
        assert ours == pytest.approx(float(reference), rel=1e-12)

    def test_all_tied_side_rejected(self):
        with pytest.raises(DegenerateError):
            kendall_tau([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            kendall_tau([1, 2], [1, 2, 3])


class TestSpearmanPearson:
    def test_spearman_trivial_directions(self):
        assert spearman_rho([1, 2, 3], [5, 9, 14]) == 1.0
        assert spearman_rho([1, 2, 3], [3, 1, 0]) == -1.0

    def test_spearman_matches_rank_then_pearson(self, rng):
        x = rng.standard_normal(50)
        y = rng.standard_normal(50)
        ranked = np.corrcoef(scipy.stats.rankdata(x), scipy.stats.rankdata(y))[0, 1]
        assert spearman_rho(x, y) == pytest.approx(float(ranked), abs=1e-12)
        assert spearman_rho(x, y) == pytest.approx(float(scipy.stats.spearmanr(x, y).statistic), abs=1e-12)

    def test_spearman_with_ties(self, rng):
        x = rng.integers(0, 5, size=80).astype(float)
        y = rng.integers(0, 5, size=80).astype(float)
        assert spearman_rho(x, y) == pytest.approx(float(scipy.stats.spearmanr(x, y).statistic), abs=1e-12)

    def test_pearson_affine(self):
        x = np.array([0.5, 1.5, 2.0, 9.0])
        assert pearson_r(x, 2 * x + 3) == pytest.approx(1.0, abs=1e-12)
        assert pearson_r(x, -x) == pytest.approx(-1.0, abs=1e-12)

    def test_pearson_matches_covariance_formula(self, rng):
        x = rng.standard_normal(64)
        y = rng.standard_normal(64)
        expected = float(np.cov(x, y, ddof=0)[0, 1] / (x.std() * y.std()))
        assert pearson_r(x, y) == pytest.approx(expected, abs=1e-12)

    def test_constant_input_rejected(self):
        with pytest.raises(DegenerateError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateError):
            spearman_rho([1.0, 2.0], [5.0, 5.0])


MONOTONE_MAPS = (lambda v: 3 * v + 7, lambda v: v**3, lambda v: v * 5 - 2)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(3, 40),
    map_id=st.integers(0, len(MONOTONE_MAPS) - 1),
)
def test_monotone_transform_invariance(seed, n, map_id):
    rng = np.random.default_rng(seed)
    x = rng.integers(-8, 8, size=n).astype(float)
    y = rng.integers(-8, 8, size=n).astype(float)
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    g = MONOTONE_MAPS[map_id]
    assert kendall_tau(g(x), y) == kendall_tau(x, y)
    assert spearman_rho(g(x), y) == spearman_rho(x, y)
    tau = kendall_tau(x, y)
    assert -1.0 <= tau <= 1.0
    assert kendall_tau(y, x) == tau


def toy_table():
    return ScoreTable(
        row_labels=("ck-0", "ck-1", "ck-2", "ck-3"),
        metrics=("kl", "fid", "neg_score"),
        values=np.array(
            [
                [0.9, 30.0, -1.2],
                [0.5, 21.0, -2.0],
                [0.3, 14.0, -2.5],
                [0.1, 9.0, -3.0],
            ]
        ),
        orientations={"kl": "lower", "fid": "lower", "neg_score": "lower"},
    )


class TestScoreTable:
    def test_csv_round_trip(self):
        table = toy_table()
        back = ScoreTable.from_csv(table.to_csv())
        assert back.row_labels == table.row_labels
        assert back.metrics == table.metrics
        assert back.orientations == table.orientations
        assert np.array_equal(back.values, table.values)

    def test_missing_orientation_rejected(self):
        with pytest.raises(DataError):
            ScoreTable(
                row_labels=("a",),
                metrics=("m",),
                values=np.array([[1.0]]),
                orientations={},
            )

    def test_header_required(self):
        with pytest.raises(DataError):
            ScoreTable.from_csv("model,kl\na,1.0\n")


class TestCorrelationMatrix:
    def test_identical_columns_correlate_fully(self):
        table = ScoreTable(
            row_labels=("a", "b", "c"),
            metrics=("m1", "m2"),
            values=np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]),
            orientations={"m1": "higher", "m2": "higher"},
        )
        for method in ("kendall", "spearman", "pearson"):
            matrix = correlation_matrix(table, method)
            assert matrix.values[0, 1] == 1.0

    def test_orientation_normalization(self):
        table = ScoreTable(
            row_labels=("a", "b", "c"),
            metrics=("up", "down"),
            values=np.array([[1.0, -1.0], [2.0, -2.0], [3.0, -3.0]]),
            orientations={"up": "higher", "down": "lower"},
        )
        matrix = correlation_matrix(table, "kendall")
        assert matrix.values[0, 1] == 1.0

    def test_three_by_three_matches_pairwise_brute_force(self, rng):
        values = rng.standard_normal((6, 3))
        table = ScoreTable(
            row_labels=tuple(f"r{i}" for i in range(6)),
            metrics=("a", "b", "c"),
            values=values,
            orientations={"a": "higher", "b": "higher", "c": "higher"},
        )
        matrix = correlation_matrix(table, "kendall")
        for i in range(3):
            for j in range(3):
                if i == j:
                    assert matrix.values[i, j] == 1.0
                else:
                    expected = brute_force_tau_b(list(values[:, i]), list(values[:, j]))
                    assert matrix.values[i, j] == expected

    def test_undefined_pairs_flagged_not_fatal(self):
        table = ScoreTable(
            row_labels=("a", "b", "c"),
            metrics=("var", "const"),
            values=np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]),
            orientations={"var": "higher", "const": "higher"},
        )
        matrix = correlation_matrix(table, "pearson")
        assert math.isnan(matrix.values[0, 1])
        assert matrix.undefined_pairs == (("var", "const"),)
        assert matrix.values[0, 0] == matrix.values[1, 1] == 1.0

    def test_row_filter(self):
        table = toy_table()
        full = correlation_matrix(table, "kendall")
        window = correlation_matrix(table, "kendall", rows=["ck-1", "ck-2", "ck-3"])
        assert window.values.shape == full.values.shape
        with pytest.raises(UsageError):
            correlation_matrix(table, "kendall", rows=["nope"])

    def test_symmetry_and_bounds_are_enforced(self):
        with pytest.raises(DataError):
            CorrelationMatrix(
                labels=("a", "b"),
                method="kendall",
                values=np.array([[1.0, 0.5], [0.4, 1.0]]),
            )
        with pytest.raises(DataError):
            CorrelationMatrix(
                labels=("a", "b"),
                method="kendall",
                values=np.array([[1.0, 2.0], [2.0, 1.0]]),
            )

    def test_csv_and_json_emission(self):
        matrix = correlation_matrix(toy_table(), "spearman")
        csv_text = matrix.to_csv()
        assert csv_text.splitlines()[0] == "metric,kl,fid,neg_score"
        doc = matrix.to_json_dict()
        assert doc["method"] == "spearman"
        assert doc["labels"] == ["kl", "fid", "neg_score"]
        assert doc["matrix"][0][0] == 1.0
