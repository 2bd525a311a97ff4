import numpy as np
import pytest
from numpy.testing import assert_allclose

from tangentkit.errors import ContractError
from tangentkit.numerics import (
    DENSE_EIGEN_LIMIT,
    dense_extremes,
    lambda_min_shifted,
    lanczos_extremes,
    power_iteration,
    sample_in_ball,
    sample_unit_directions,
    spectral_norm_squared_action,
    symmetric_extremes,
)


def random_symmetric(n, seed, spectrum=None):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if spectrum is None:
        spectrum = rng.uniform(-2.0, 5.0, size=n)
    return Q @ np.diag(spectrum) @ Q.T, np.sort(spectrum)


class TestDenseAndLanczos:
    def test_dense_extremes_sorted(self):
        A, spec = random_symmetric(40, 0)
        lo, hi = dense_extremes(A)
        assert_allclose([lo, hi], [spec[0], spec[-1]], rtol=1e-12)

    def test_lanczos_matches_dense(self):
        A, spec = random_symmetric(300, 1)
        res = lanczos_extremes(lambda v: A @ v, 300, seed=2)
        assert res.converged
        assert_allclose([res.lambda_min, res.lambda_max], [spec[0], spec[-1]],
                        rtol=1e-6)

    def test_lanczos_exact_on_small_operator(self):
        # dim-cap iteration makes the tridiagonalization exact
        d = np.array([3.0, -1.0, 0.5, 2.0])
        res = lanczos_extremes(lambda v: d * v, 4, seed=0)
        assert res.converged
        assert_allclose([res.lambda_min, res.lambda_max], [-1.0, 3.0], rtol=1e-10)

    def test_symmetric_extremes_dispatches_above_dense_limit(self):
        n = DENSE_EIGEN_LIMIT + 88
        spectrum = np.linspace(0.5, 4.0, n)
        A, spec = random_symmetric(n, 3, spectrum=spectrum)
        lo, hi = symmetric_extremes(A)
        assert_allclose([lo, hi], [spec[0], spec[-1]], rtol=1e-5)

    def test_symmetric_extremes_small_equals_dense(self):
        A, spec = random_symmetric(64, 4)
        assert_allclose(symmetric_extremes(A), dense_extremes(A), rtol=1e-12)


class TestPowerIteration:
    def test_dominant_eigenvalue(self):
        A, spec = random_symmetric(60, 5, spectrum=np.linspace(0.1, 7.0, 60))
        res = power_iteration(lambda v: A @ v, 60, seed=6)
        assert res.converged
        assert_allclose(res.value, 7.0, rtol=1e-6)
        # the returned vector is a genuine Rayleigh witness
        v = res.vector / np.linalg.norm(res.vector)
        assert_allclose(v @ (A @ v), res.value, rtol=1e-6)

    def test_squared_action_recovers_magnitude(self):
        # indefinite spectrum: plain power iteration may oscillate, the
        # squared action targets |lambda|_max directly
        A, _ = random_symmetric(50, 7, spectrum=np.concatenate(
            [np.linspace(-6.0, -0.5, 25), np.linspace(0.5, 5.0, 25)]))
        res = spectral_norm_squared_action(lambda v: A @ v, 50, seed=8)
        assert res.converged
        assert_allclose(res.value, 6.0, rtol=1e-5)

    def test_lambda_min_shifted(self):
        A, spec = random_symmetric(45, 9)
        top = power_iteration(lambda v: A @ v, 45, seed=10)
        res = lambda_min_shifted(lambda v: A @ v, 45, top.value, seed=11)
        assert_allclose(res.value, spec[0], rtol=1e-5, atol=1e-8)

    def test_power_iteration_vs_dense_suite(self):
        # the estimator contract: relative 1e-3 against dense whenever n <= 256
        for seed in range(5):
            n = int(np.random.default_rng(seed).integers(20, 256))
            A, spec = random_symmetric(n, seed + 20)
            res = spectral_norm_squared_action(lambda v: A @ v, n, seed=seed)
            dense = float(np.max(np.abs(spec)))
            assert abs(res.value - dense) / dense < 1e-3


class TestSampling:
    def test_unit_directions_are_unit(self):
        rng = np.random.default_rng(0)
        d = sample_unit_directions(200, 17, rng)
        assert d.shape == (200, 17)
        assert_allclose(np.linalg.norm(d, axis=1), np.ones(200), rtol=1e-12)

    def test_ball_containment_and_coverage(self):
        rng = np.random.default_rng(1)
        center = np.full(5, 2.0)
        pts = sample_in_ball(center, 3.0, 4000, rng)
        r = np.linalg.norm(pts - center, axis=1)
        assert np.all(r <= 3.0 + 1e-12)
        # uniform in the ball: E r = R * dim/(dim+1)
        assert_allclose(np.mean(r), 3.0 * 5 / 6, rtol=0.03)

    def test_sampling_deterministic(self):
        a = sample_in_ball(np.zeros(3), 1.0, 10, np.random.default_rng(5))
        b = sample_in_ball(np.zeros(3), 1.0, 10, np.random.default_rng(5))
        assert_allclose(a, b, atol=0)


class TestValidation:
    def test_lanczos_nonconvergence_reported(self):
        # one iteration cannot resolve a 100-dim spectrum
        A, _ = random_symmetric(100, 12)
        res = lanczos_extremes(lambda v: A @ v, 100, seed=0, max_iters=2, tol=1e-14)
        assert not res.converged

    def test_power_iteration_rejects_bad_dim(self):
        with pytest.raises(ContractError):
            power_iteration(lambda v: v, 0, seed=0)
