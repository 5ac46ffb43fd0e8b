import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from genmetrics.errors import DataError, UsageError
from genmetrics.gaussian import (
    GaussianModel,
    fid,
    fit_gaussian,
    frechet_distance,
    gaussian_log_density,
    matrix_sqrt_psd,
    rank_by_likelihood,
)

from conftest import features, gaussian_features


def random_psd(rng, d, rank=None):
    b = rng.standard_normal((d, rank or d))
    return b @ b.T


def diag_gaussian(mean, diag_cov):
    d = len(mean)
    return GaussianModel(mean=np.asarray(mean, float), cov=np.diag(np.asarray(diag_cov, float)), n_fit=2)


class TestFitGaussian:
    def test_two_point_fit_uses_n_minus_one(self):
        model = fit_gaussian(features([[0.0, 0.0], [2.0, 2.0]]))
        assert np.allclose(model.mean, [1.0, 1.0])
        assert np.allclose(model.cov, [[2.0, 2.0], [2.0, 2.0]])
        assert model.n_fit == 2

    def test_identical_rows_give_zero_covariance(self):
        model = fit_gaussian(features(np.tile([3.0, -1.0, 2.0], (8, 1))))
        assert np.allclose(model.cov, 0.0)

    def test_single_row_rejected(self):
        with pytest.raises(UsageError):
            fit_gaussian(features([[1.0, 2.0]]))

    def test_recovers_known_gaussian(self, rng):
        # Sampling oracle: moments of a 10k draw land within 5% of the truth.
        d = 4
        true_mean = np.array([1.0, -2.0, 0.5, 3.0])
        a = rng.standard_normal((d, d))
        true_cov = a @ a.T + 0.5 * np.eye(d)
        chol = np.linalg.cholesky(true_cov)
        draws = rng.standard_normal((10_000, d)) @ chol.T + true_mean
        model = fit_gaussian(features(draws))
        assert np.abs(model.mean - true_mean).max() < 0.05 * np.abs(true_mean).max()
        assert np.abs(model.cov - true_cov).max() < 0.05 * np.abs(true_cov).max()


class TestMatrixSqrt:
    def test_identity(self):
        assert np.allclose(matrix_sqrt_psd(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_reconstruction_residual(self, rng):
        m = random_psd(rng, 32)
        s = matrix_sqrt_psd(m)
        assert np.linalg.norm(s @ s - m) / np.linalg.norm(m) <= 1e-8

    def test_matches_scipy_sqrtm(self, rng):
        m = random_psd(rng, 12)
        ours = matrix_sqrt_psd(m)
        reference = np.real(scipy.linalg.sqrtm(m))
        assert np.allclose(ours, reference, atol=1e-8)

    def test_rank_deficient_input(self, rng):
        m = random_psd(rng, 16, rank=5)
        s = matrix_sqrt_psd(m)
        assert np.linalg.norm(s @ s - m) / np.linalg.norm(m) <= 1e-8

    def test_asymmetric_input_rejected(self, rng):
        with pytest.raises(UsageError):
            matrix_sqrt_psd(rng.standard_normal((4, 4)))


class TestFrechetDistance:
    def test_identical_models_give_zero(self, rng):
        cov = random_psd(rng, 6)
        g = GaussianModel(mean=rng.standard_normal(6), cov=cov, n_fit=10)
        assert frechet_distance(g, g) <= 1e-9

    def test_mean_shift_only(self):
        a = diag_gaussian([0.0, 0.0], [1.0, 1.0])
        b = diag_gaussian([1.0, 1.0], [1.0, 1.0])
        assert frechet_distance(a, b) == pytest.approx(2.0, abs=1e-12)

    def test_commuting_covariance_closed_form(self):
        # Diagonal covariances commute: value is ||dmu||^2 + sum (sqrt a - sqrt b)^2.
        a = diag_gaussian([0.0, 0.0], [1.0, 4.0])
        b = diag_gaussian([1.0, 1.0], [1.0, 1.0])
        assert frechet_distance(a, b) == pytest.approx(3.0, abs=1e-10)

    def test_symmetry(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 10))
            a = GaussianModel(rng.standard_normal(d), random_psd(rng, d), n_fit=5)
            b = GaussianModel(rng.standard_normal(d), random_psd(rng, d), n_fit=5)
            assert frechet_distance(a, b) == pytest.approx(frechet_distance(b, a), rel=1e-9)

    def test_dimension_mismatch(self, rng):
        a = GaussianModel(np.zeros(2), np.eye(2), n_fit=5)
        b = GaussianModel(np.zeros(3), np.eye(3), n_fit=5)
        with pytest.raises(UsageError):
            frechet_distance(a, b)

    def test_non_psd_rejected(self):
        with pytest.raises(DataError):
            GaussianModel(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), n_fit=5)


class TestFid:
    def test_identical_inputs(self, rng):
        x = gaussian_features(rng, 200, 8)
        assert fid(x, x) <= 1e-9

    def test_identical_inputs_rank_deficient(self, rng):
        # Far fewer samples than dimensions: the covariance is almost all
        # null space, which is exactly where naive cross-term evaluations
        # lose precision.
        x = gaussian_features(rng, 20, 512, scale=4.0)
        assert fid(x, x) <= 1e-9

    def test_same_distribution_bias_shrinks_with_n(self, rng):
        # Finite-sample FID of equal distributions is positive and decays with N.
        d = 8
        small = [fid(gaussian_features(rng, 500, d), gaussian_features(rng, 500, d)) for _ in range(3)]
        large = [fid(gaussian_features(rng, 10_000, d), gaussian_features(rng, 10_000, d)) for _ in range(3)]
        assert min(small) > 0.0
        assert np.mean(large) < np.mean(small) / 5

    def test_population_mean_separation(self, rng):
        d, n = 8, 50_000
        real = gaussian_features(rng, n, d, mean=0.0)
        gen = gaussian_features(rng, n, d, mean=2.0)
        assert fid(real, gen) == pytest.approx(32.0, rel=0.02)

    def test_rotation_invariance(self, rng):
        x = gaussian_features(rng, 400, 6)
        y = gaussian_features(rng, 300, 6, mean=0.3)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        xr = features(x.data.astype(np.float64) @ q)
        yr = features(y.data.astype(np.float64) @ q)
        assert fid(xr, yr) == pytest.approx(fid(x, y), abs=1e-6)


class TestLogDensity:
    def test_standard_normal_at_origin_1d(self):
        g = GaussianModel(np.zeros(1), np.eye(1), n_fit=10)
        assert gaussian_log_density(g, [0.0]) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-5)

    def test_at_mean_2d(self):
        g = GaussianModel(np.array([1.0, -1.0]), np.eye(2), n_fit=10)
        assert gaussian_log_density(g, [1.0, -1.0]) == pytest.approx(-np.log(2 * np.pi), abs=1e-5)

    def test_matches_direct_formula(self, rng):
        # Independent route: explicit inverse and slogdet of the regularized covariance.
        d = 5
        cov = random_psd(rng, d)
        g = GaussianModel(rng.standard_normal(d), cov, n_fit=10)
        x = rng.standard_normal(d)
        reg = cov + (1e-6 * np.trace(cov) / d) * np.eye(d)
        diff = x - g.mean
        expected = -0.5 * (
            d * np.log(2 * np.pi) + np.linalg.slogdet(reg)[1] + diff @ np.linalg.inv(reg) @ diff
        )
        assert gaussian_log_density(g, x) == pytest.approx(expected, abs=1e-10)

    def test_dimension_mismatch(self):
        g = GaussianModel(np.zeros(2), np.eye(2), n_fit=10)
        with pytest.raises(UsageError):
            gaussian_log_density(g, [0.0, 0.0, 0.0])


class TestRankByLikelihood:
    def test_matches_brute_force_mahalanobis(self, rng):
        cloud = gaussian_features(rng, 120, 4)
        lowest, highest = rank_by_likelihood(cloud, cloud, k=1)
        model = fit_gaussian(cloud)
        reg = model.cov + (1e-6 * np.trace(model.cov) / model.dim) * np.eye(model.dim)
        inv = np.linalg.inv(reg)
        x = cloud.data.astype(np.float64)
        mahal = np.einsum("ij,jk,ik->i", x - model.mean, inv, x - model.mean)
        assert lowest[0][0] == int(np.argmax(mahal))
        assert highest[0][0] == int(np.argmin(mahal))

    def test_matches_brute_force_sort(self, rng):
        reference = gaussian_features(rng, 80, 3)
        candidates = gaussian_features(rng, 40, 3)
        lowest, highest = rank_by_likelihood(reference, candidates, k=5)
        model = fit_gaussian(reference)
        scores = np.array(
            [gaussian_log_density(model, row) for row in candidates.data.astype(np.float64)]
        )
        order = np.argsort(scores, kind="stable")
        assert [i for i, _ in lowest] == list(order[:5])
        assert [i for i, _ in highest] == sorted(order[-5:], key=lambda i: (scores[i], i))

    def test_far_tail_ordering(self, rng):
        reference = gaussian_features(rng, 100, 2)
        mean = reference.data.astype(np.float64).mean(axis=0)
        candidates = features(np.vstack([mean, mean + 50.0]))
        lowest, highest = rank_by_likelihood(reference, candidates, k=1)
        assert lowest[0][0] == 1
        assert highest[0][0] == 0

    def test_tie_break_on_identical_candidates(self, rng):
        reference = gaussian_features(rng, 50, 2)
        candidates = features(np.tile([0.3, -0.2], (6, 1)))
        lowest, highest = rank_by_likelihood(reference, candidates, k=2)
        assert [i for i, _ in lowest] == [0, 1]
        assert [i for i, _ in highest] == [0, 1]

    def test_k_bounds(self, rng):
        cloud = gaussian_features(rng, 10, 2)
        assert rank_by_likelihood(cloud, cloud, k=0) == ([], [])
        with pytest.raises(UsageError):
            rank_by_likelihood(cloud, cloud, k=11)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 8))
def test_frechet_symmetry_property(seed, d):
    rng = np.random.default_rng(seed)
    a = GaussianModel(rng.standard_normal(d), random_psd(rng, d), n_fit=4)
    b = GaussianModel(rng.standard_normal(d), random_psd(rng, d), n_fit=4)
    ab, ba = frechet_distance(a, b), frechet_distance(b, a)
    assert ab == pytest.approx(ba, rel=1e-8, abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sqrt_reconstruction_property(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 64))
    m = random_psd(rng, d)
    s = matrix_sqrt_psd(m)
    assert np.linalg.norm(s @ s - m) / np.linalg.norm(m) <= 1e-8
