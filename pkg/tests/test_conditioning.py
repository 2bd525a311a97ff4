import numpy as np
import pytest
from numpy.testing import assert_allclose

from tangentkit.conditioning import (
    KERNEL_SIZE_LIMIT,
    certify_ball,
    estimate_constants,
    pl_star_ratio,
    tangent_kernel,
    transformed_kernel,
)
from tangentkit.errors import CapacityError, ContractError
from tangentkit.numerics import sample_in_ball
from tangentkit.systems import (
    LinearSystem,
    ShallowNet,
    SmoothSystem,
    TransformedSystem,
    fd_jacobian,
    synthetic_dataset,
)


class TestTangentKernel:
    def test_linear_diagonal_pin(self):
        kern = tangent_kernel(LinearSystem(np.diag([1.0, 2.0])), np.zeros(2))
        assert_allclose(kern.matrix, np.diag([1.0, 4.0]))
        assert_allclose([kern.lambda_min, kern.lambda_max], [1.0, 4.0])

    def test_single_unit_identity_pin(self):
        # K(x, x) = x^2 sigma'(wx)^2 v^2 / m = 9
        net = ShallowNet(1, "identity", inputs=np.array([3.0]), trainable="w",
                        fixed_v=np.array([1.0]))
        kern = tangent_kernel(net, np.array([0.4]))
        assert_allclose(kern.matrix, [[9.0]])

    def test_kernel_matches_fd_jacobian_route(self):
        data = synthetic_dataset(5, seed=2)
        net = ShallowNet(50, "tanh", inputs=data.scalar_inputs())
        w = net.init_params(0)
        kern = tangent_kernel(net, w)
        J = fd_jacobian(net, w)
        assert_allclose(kern.matrix, J @ J.T, rtol=1e-4, atol=1e-8)

    def test_kernel_psd_and_symmetric(self):
        data = synthetic_dataset(12, seed=3)
        net = ShallowNet(40, "softplus", inputs=data.scalar_inputs())
        rng = np.random.default_rng(4)
        for _ in range(5):
            kern = tangent_kernel(net, rng.standard_normal(net.n_params))
            assert_allclose(kern.matrix, kern.matrix.T, rtol=1e-12)
            assert kern.lambda_min >= -1e-10

    def test_capacity_guard(self):
        class Wide(SmoothSystem):
            n_outputs = KERNEL_SIZE_LIMIT + 1
            n_params = 3

            def evaluate(self, w):
                raise AssertionError("guard must trip before evaluation")

            def jacobian(self, w):
                raise AssertionError

            def hvp_per_output(self, w, i, u):
                raise AssertionError

        with pytest.raises(CapacityError):
            tangent_kernel(Wide(), np.zeros(3))


class TestPLStarRatio:
    def test_identity_system_ratio_one(self):
        sys = LinearSystem(np.eye(3))
        assert_allclose(pl_star_ratio(sys, np.array([1.0, 2.0, 3.0]), np.zeros(3)), 1.0)

    def test_aligned_residual_picks_eigenvalue(self):
        sys = LinearSystem(np.diag([1.0, 2.0]))
        w = np.array([0.0, 1.0])  # residual along the second axis only
        assert_allclose(pl_star_ratio(sys, w, np.zeros(2)), 4.0)

    def test_ratio_dominates_lambda_min(self):
        data = synthetic_dataset(20, seed=0)
        net = ShallowNet(200, "tanh", inputs=data.scalar_inputs())
        rng = np.random.default_rng(5)
        for _ in range(3):
            w = rng.standard_normal(net.n_params)
            ratio = pl_star_ratio(net, w, data.targets)
            assert ratio >= tangent_kernel(net, w).lambda_min - 1e-8

    def test_chain_identity(self):
        # 0.5 ||grad L||^2 == 0.5 r^T K r for the square loss
        data = synthetic_dataset(10, seed=1)
        net = ShallowNet(60, "tanh", inputs=data.scalar_inputs())
        rng = np.random.default_rng(6)
        for _ in range(5):
            w = rng.standard_normal(net.n_params)
            r = net.evaluate(w) - data.targets
            lhs = 0.5 * float(np.sum(net.vjp(w, r) ** 2))
            rhs = 0.5 * float(r @ tangent_kernel(net, w).matrix @ r)
            assert_allclose(lhs, rhs, rtol=1e-10)

    def test_interpolation_returns_inf(self):
        sys = LinearSystem(np.eye(2))
        w = np.array([1.0, -1.0])
        assert pl_star_ratio(sys, w, sys.evaluate(w)) == np.inf


class TestCertifyBall:
    def test_identity_certificate_pin(self):
        sys = LinearSystem(np.eye(4))
        cert = certify_ball(sys, np.zeros(4), 2.0, np.ones(4), samples=8)
        assert_allclose([cert.mu_hat, cert.lambda_max_loss_hat, cert.kappa_hat],
                        [1.0, 1.0, 1.0], rtol=1e-8)
        assert cert.uniformly_conditioned

    def test_shallow_certificate_and_condition_number_bound(self):
        # scalar-input tanh kernels lose rank fast as n grows; n=6 keeps
        # lambda_min well above round-off
        data = synthetic_dataset(6, seed=0)
        net = ShallowNet(1000, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(0)
        cert = certify_ball(net, w0, 1.0, data.targets, samples=12, seed=1)
        assert cert.mu_hat > 0
        consts = estimate_constants(net, w0, 1.0, samples=12, seed=1,
                                    targets=data.targets)
        sup_res = 0.0
        rng = np.random.default_rng(1)
        for w in [w0] + list(sample_in_ball(w0, 1.0, 12, rng)):
            sup_res = max(sup_res, float(np.linalg.norm(net.evaluate(w) - data.targets)))
        bound = (consts.L_F_hat**2 + consts.beta_F_hat * sup_res) / cert.mu_hat
        assert cert.kappa_hat <= bound * (1 + 1e-8)

    def test_eigenvalue_ratio_below_kappa(self):
        data = synthetic_dataset(6, seed=2)
        net = ShallowNet(200, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(3)
        cert = certify_ball(net, w0, 0.3, np.asarray(data.targets), samples=10, seed=2)
        rng = np.random.default_rng(2)
        for w in [w0] + list(sample_in_ball(w0, 0.3, 10, rng)):
            kern = tangent_kernel(net, w)
            assert kern.lambda_max / kern.lambda_min <= cert.kappa_hat + 1e-8

    def test_record_round_trip_fields(self):
        sys = LinearSystem(np.diag([1.0, 3.0]))
        cert = certify_ball(sys, np.zeros(2), 1.0, np.ones(2), samples=4)
        rec = cert.to_record()
        assert rec["mu_hat"] == cert.mu_hat
        assert rec["uniformly_conditioned"] is True

    def test_degenerate_data_not_conditioned(self):
        # duplicated rows make the kernel exactly singular
        x = np.array([0.3, 0.3, 0.8])
        net = ShallowNet(50, "tanh", inputs=x)
        y = 2.0 * x + 0.5
        cert = certify_ball(net, net.init_params(0), 0.5, y, samples=6)
        assert cert.mu_hat <= 1e-10
        assert not cert.uniformly_conditioned


class TestEstimateConstants:
    def test_linear_exact_hooks(self):
        A = np.diag([1.0, 2.0])
        consts = estimate_constants(LinearSystem(A), np.zeros(2), 5.0, samples=4)
        assert_allclose(consts.L_F_hat, 1.1 * 2.0, rtol=1e-12)
        assert consts.beta_F_hat == 0.0

    def test_sample_count_monotonicity(self):
        data = synthetic_dataset(6, seed=0)
        net = ShallowNet(30, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(1)
        small = estimate_constants(net, w0, 1.0, samples=10, seed=7)
        large = estimate_constants(net, w0, 1.0, samples=100, seed=7)
        assert large.L_F_hat >= small.L_F_hat

    def test_kernel_norm_below_lipschitz_squared(self):
        data = synthetic_dataset(6, seed=0)
        net = ShallowNet(30, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(1)
        consts = estimate_constants(net, w0, 1.0, samples=16, seed=8)
        rng = np.random.default_rng(8)
        for w in [w0] + list(sample_in_ball(w0, 1.0, 16, rng)):
            assert tangent_kernel(net, w).lambda_max <= consts.L_F_hat**2 + 1e-8

    def test_nonsmooth_system_rejected(self):
        net = ShallowNet(10, "relu", inputs=np.array([0.5]))
        with pytest.raises(Exception):
            estimate_constants(net, net.init_params(0), 1.0, samples=4)


class TestTransformedKernel:
    def setup_method(self):
        data = synthetic_dataset(9, seed=4)
        self.base = ShallowNet(25, "tanh", inputs=data.scalar_inputs())
        self.w = self.base.init_params(5)
        self.base_kern = tangent_kernel(self.base, self.w)
        self.f = self.base.evaluate(self.w)

    def test_identity_map(self):
        kern, rho = transformed_kernel(self.base_kern, self.f, "identity")
        assert_allclose(kern.matrix, self.base_kern.matrix)
        assert rho == 1.0

    def test_linear_scaling(self):
        from tangentkit.activations import Activation

        double = Activation(
            kind="double", fn=lambda z: 2.0 * z,
            deriv=lambda z: np.full_like(np.asarray(z, dtype=float), 2.0),
            second_deriv=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            lipschitz_constant=2.0, smoothness_constant=0.0, code=-1)
        kern, rho = transformed_kernel(self.base_kern, self.f, double)
        assert_allclose(kern.matrix, 4.0 * self.base_kern.matrix, rtol=1e-12)
        assert_allclose(rho, 2.0)
        assert_allclose(kern.lambda_min, 4.0 * self.base_kern.lambda_min,
                        rtol=1e-10, atol=1e-14)

    def test_matches_composed_system_kernel(self):
        kern, _ = transformed_kernel(self.base_kern, self.f, "scaled-tanh-3")
        composed = TransformedSystem(self.base, "scaled-tanh-3")
        direct = composed.jacobian(self.w)
        assert_allclose(kern.matrix, direct @ direct.T, rtol=1e-6, atol=1e-10)

    def test_eigenvalue_sandwich(self):
        kern, rho = transformed_kernel(self.base_kern, self.f, "scaled-tanh-3")
        phi_max = 3.0  # sup |3 tanh'|
        assert kern.lambda_min >= rho**2 * self.base_kern.lambda_min - 1e-8
        assert kern.lambda_max <= phi_max**2 * self.base_kern.lambda_max + 1e-8

    def test_saturated_map_flags_zero_rho(self):
        # quadratic output map has phi'(0) = 0: rho must report the dead point
        from tangentkit.activations import get_activation

        f = np.array([0.0, 1.0, 2.0])
        K = np.eye(3)
        kern, rho = transformed_kernel(K, f, get_activation("quadratic"))
        assert rho == 0.0
        assert_allclose(np.diag(kern.matrix), (2.0 * f) ** 2)
