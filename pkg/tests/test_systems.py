import numpy as np
import pytest
from numpy.testing import assert_allclose

from tangentkit.errors import ContractError, UnsupportedOperationError
from tangentkit.systems import (
    DeepMLP,
    LinearSystem,
    QuadraticSystem,
    ShallowNet,
    SparseAdditiveModel,
    TransformedSystem,
    box_dataset,
    fd_hessian_output,
    fd_jacobian,
    fd_loss_hessian,
    synthetic_dataset,
)


def model_zoo(seed=0):
    """One seeded instance per smooth family, with a parameter point."""
    data = synthetic_dataset(8, seed=seed)
    x = data.scalar_inputs()
    zoo = [
        LinearSystem.random(4, 6, seed),
        QuadraticSystem.random(4, 6, seed),
        ShallowNet(12, "tanh", inputs=x, trainable="w"),
        ShallowNet(12, "tanh", inputs=x, trainable="wvb"),
        ShallowNet(10, "softplus", inputs=x, trainable="wvb"),
        DeepMLP(3, 8, "tanh", inputs=box_dataset(6, 2, seed).inputs),
        SparseAdditiveModel.random(40, 12, 3, "tanh", x, seed),
        TransformedSystem(ShallowNet(9, "tanh", inputs=x), "scaled-tanh-3"),
    ]
    rng = np.random.default_rng(seed + 100)
    return [(s, 0.5 * rng.standard_normal(s.n_params)) for s in zoo]


class TestEvaluate:
    def test_linear_matvec(self):
        sys = LinearSystem(np.array([[1.0, 0.0], [0.0, 2.0]]))
        assert_allclose(sys.evaluate(np.array([1.0, 1.0])), [1.0, 2.0])

    def test_shallow_single_unit_identity(self):
        net = ShallowNet(1, "identity", inputs=np.array([3.0]), trainable="w",
                         fixed_v=np.array([1.0]))
        assert_allclose(net.evaluate(np.array([2.0])), [6.0])

    def test_deep_zero_input_maps_to_zero(self):
        # no biases anywhere, so tanh(0) propagates through every layer
        net = DeepMLP(2, 4, "tanh", inputs=np.zeros((3, 1)))
        theta = net.init_params(0)
        assert_allclose(net.evaluate(theta), np.zeros(3), atol=0)

    def test_shallow_wvb_matches_formula(self):
        x = np.array([0.3, -1.2, 0.8])
        net = ShallowNet(5, "relu", inputs=x, trainable="wvb")
        theta = net.init_params(3)
        w, b, v = net.split(theta)
        expect = np.maximum(np.outer(x, w) + b, 0.0) @ v / np.sqrt(5.0)
        assert_allclose(net.evaluate(theta), expect, rtol=1e-14)


class TestJacobians:
    def test_linear_jacobian_constant(self):
        sys = LinearSystem.random(3, 5, seed=1)
        rng = np.random.default_rng(2)
        J0 = sys.jacobian(rng.standard_normal(5))
        J1 = sys.jacobian(rng.standard_normal(5))
        assert_allclose(J0, J1)
        assert_allclose(J0, sys.matrix)

    def test_shallow_single_unit_gradient(self):
        net = ShallowNet(1, "identity", inputs=np.array([3.0]), trainable="w",
                         fixed_v=np.array([1.0]))
        assert_allclose(net.jacobian(np.array([2.0])), [[3.0]])

    def test_zoo_jacobians_match_central_differences(self):
        for sys, w in model_zoo():
            J = sys.jacobian(w)
            J_fd = fd_jacobian(sys, w)
            scale = np.maximum(np.abs(J_fd), 1.0)
            err = np.max(np.abs(J - J_fd) / scale)
            assert err < 1e-5, f"{type(sys).__name__}: rel err {err:.2e}"

    def test_zoo_jacobians_deterministic_across_points(self):
        # 10 seeded points per system, as a repetition of the FD property
        for sys, _ in model_zoo(seed=4):
            rng = np.random.default_rng(11)
            for _ in range(10):
                w = 0.3 * rng.standard_normal(sys.n_params)
                J_fd = fd_jacobian(sys, w)
                err = np.max(
                    np.abs(sys.jacobian(w) - J_fd) / np.maximum(np.abs(J_fd), 1.0)
                )
                assert err < 1e-5

    def test_jvp_vjp_adjoint(self):
        rng = np.random.default_rng(5)
        for sys, w in model_zoo(seed=2):
            u = rng.standard_normal(sys.n_params)
            r = rng.standard_normal(sys.n_outputs)
            assert_allclose(sys.jvp(w, u) @ r, u @ sys.vjp(w, r), rtol=1e-10)

    def test_tangent_gram_equals_jjt(self):
        for sys, w in model_zoo(seed=3):
            J = sys.jacobian(w)
            assert_allclose(sys.tangent_gram(w), J @ J.T, rtol=1e-10, atol=1e-12)


class TestHessians:
    def test_linear_hvp_zero(self):
        sys = LinearSystem.random(3, 4, seed=0)
        u = np.ones(4)
        assert_allclose(sys.hvp_per_output(np.zeros(4), 1, u), np.zeros(4))

    def test_shallow_quadratic_unit_pin(self):
        # single quadratic unit: H u = v sigma''(wx) x^2 u / sqrt(m) = 2u
        net = ShallowNet(1, "quadratic", inputs=np.array([1.0]), trainable="w",
                         fixed_v=np.array([1.0]))
        assert_allclose(net.hvp_per_output(np.array([0.7]), 0, np.array([1.0])), [2.0])

    def test_zoo_hvp_matches_dense_fd_hessian(self):
        rng = np.random.default_rng(7)
        for sys, w in model_zoo(seed=6):
            i = int(rng.integers(sys.n_outputs))
            H = fd_hessian_output(sys, w, i)
            u = rng.standard_normal(sys.n_params)
            hu = sys.hvp_per_output(w, i, u)
            # atol covers the FD noise floor eps*|F|/h^2 ~ 1e-5
            assert_allclose(hu, H @ u, rtol=1e-4, atol=5e-5)

    def test_shallow_hvp_matches_dense_fd_at_width_100(self):
        data = synthetic_dataset(8, seed=6)
        net = ShallowNet(100, "tanh", inputs=data.scalar_inputs())
        rng = np.random.default_rng(106)
        w = 0.5 * rng.standard_normal(net.n_params)
        u = rng.standard_normal(net.n_params)
        hu = net.hvp_per_output(w, 3, u)
        H = fd_hessian_output(net, w, 3)
        rel = np.linalg.norm(hu - H @ u) / np.linalg.norm(H @ u)
        assert rel < 1e-4

    def test_hessian_symmetry(self):
        rng = np.random.default_rng(8)
        for sys, w in model_zoo(seed=9):
            u = rng.standard_normal(sys.n_params)
            up = rng.standard_normal(sys.n_params)
            for i in range(min(3, sys.n_outputs)):
                a = sys.hvp_per_output(w, i, u) @ up
                b = sys.hvp_per_output(w, i, up) @ u
                assert abs(a - b) <= 1e-10 * (1.0 + abs(a))

    def test_weighted_loss_hvp_matches_fd(self):
        data = synthetic_dataset(6, seed=1)
        net = ShallowNet(30, "tanh", inputs=data.scalar_inputs())
        rng = np.random.default_rng(10)
        theta = 0.5 * rng.standard_normal(net.n_params)
        y = data.targets
        H = fd_loss_hessian(net, theta, y)
        u = rng.standard_normal(net.n_params)
        r = net.evaluate(theta) - y
        assert_allclose(net.weighted_loss_hvp(theta, r, u), H @ u, rtol=1e-4, atol=1e-6)

    def test_interpolation_reduces_loss_hessian_to_gram(self):
        # with r = 0 the second-derivative term drops out
        sys = QuadraticSystem.random(4, 7, seed=2)
        rng = np.random.default_rng(11)
        w = rng.standard_normal(7)
        u = rng.standard_normal(7)
        J = sys.jacobian(w)
        assert_allclose(sys.weighted_loss_hvp(w, np.zeros(4), u), J.T @ (J @ u),
                        rtol=1e-12)

    def test_shallow_fixed_v_hessian_is_diagonal(self):
        net = ShallowNet(6, "tanh", inputs=np.array([0.5, -0.3]), trainable="w")
        theta = net.init_params(1)
        for j in range(6):
            e = np.zeros(6)
            e[j] = 1.0
            hu = net.hvp_per_output(theta, 0, e)
            off = np.delete(hu, j)
            assert_allclose(off, np.zeros(5), atol=1e-15)

    def test_relu_rejects_second_order(self):
        net = ShallowNet(4, "relu", inputs=np.array([1.0]))
        with pytest.raises(UnsupportedOperationError):
            net.hvp_per_output(net.init_params(0), 0, np.zeros(net.n_params))


class TestSparse:
    def test_hvp_sparsity_honored(self):
        x = np.array([0.2, 0.9, -0.4])
        model = SparseAdditiveModel.random(60, 15, 4, "tanh", x, seed=3)
        w = model.init_params(0)
        for j in range(0, 60, 7):
            e = np.zeros(60)
            e[j] = 1.0
            for i in range(model.n_outputs):
                hu = model.hvp_per_output(w, i, e)
                assert np.count_nonzero(hu) <= model.sparsity_bound**2

    def test_unit_smoothness_bound_dominates_unit_hessians(self):
        x = np.array([0.7, -1.0])
        model = SparseAdditiveModel.random(30, 8, 3, "tanh", x, seed=5)
        beta = model.unit_smoothness_bound()
        rng = np.random.default_rng(6)
        # per-unit Hessian norm = |sigma''(x u)| x^2 ||g||^2 at sampled w
        for _ in range(20):
            w = rng.standard_normal(30)
            for i in range(model.n_outputs):
                for idx, g in zip(model.subsets, model.gains):
                    u = float(g @ w[idx])
                    curv = abs(model.activation.second_deriv(model.x[i] * u))
                    curv *= model.x[i] ** 2 * float(g @ g)
                    assert curv <= beta * (1 + 1e-12)

    def test_subset_capacity_validated(self):
        with pytest.raises(ContractError):
            SparseAdditiveModel.random(6, 10, 3, "tanh", np.array([1.0]), seed=0)


class TestTransformed:
    def test_identity_map_is_transparent(self):
        base = ShallowNet(7, "tanh", inputs=np.array([0.1, 0.5]))
        sys = TransformedSystem(base, "identity")
        w = base.init_params(2)
        assert_allclose(sys.evaluate(w), base.evaluate(w))
        assert_allclose(sys.jacobian(w), base.jacobian(w))
        assert_allclose(sys.tangent_gram(w), base.tangent_gram(w))

    def test_linear_scaling_map_scales_kernel(self):
        from tangentkit.activations import Activation

        double = Activation(
            kind="double",
            fn=lambda z: 2.0 * z,
            deriv=lambda z: np.full_like(np.asarray(z, dtype=float), 2.0),
            second_deriv=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            lipschitz_constant=2.0,
            smoothness_constant=0.0,
            code=-1,
        )
        base = ShallowNet(7, "tanh", inputs=np.array([0.1, 0.5]))
        sys = TransformedSystem(base, double)
        w = base.init_params(2)
        assert_allclose(sys.tangent_gram(w), 4.0 * base.tangent_gram(w), rtol=1e-12)

    def test_nonsmooth_output_map_rejected_for_second_order(self):
        base = ShallowNet(5, "tanh", inputs=np.array([1.0]))
        sys = TransformedSystem(base, "relu")
        with pytest.raises(UnsupportedOperationError):
            sys.hvp_per_output(base.init_params(0), 0, np.zeros(base.n_params))


class TestInitAndData:
    def test_init_deterministic(self):
        for sys, _ in model_zoo():
            assert_allclose(sys.init_params(42), sys.init_params(42), atol=0)

    def test_shallow_wvb_init_structure(self):
        net = ShallowNet(500, "relu", inputs=np.array([0.5]))
        w, b, v = net.split(net.init_params(9))
        assert set(np.unique(v)) == {-1.0, 1.0}
        # weights and biases are standard normal draws
        assert abs(np.mean(w)) < 0.2 and abs(np.std(w) - 1.0) < 0.15
        assert abs(np.mean(b)) < 0.2 and abs(np.std(b) - 1.0) < 0.15

    def test_deep_layer_spectral_norms_match_dense_svd(self):
        net = DeepMLP(3, 50, "tanh", inputs=box_dataset(5, 3, 0).inputs)
        theta = net.init_params(4)
        norms = net.layer_spectral_norms(theta)
        dense = [np.linalg.svd(W, compute_uv=False)[0] for W in net.split(theta)]
        assert_allclose(norms, dense, rtol=1e-6)

    def test_affine_rule_dataset(self):
        data = synthetic_dataset(20, seed=0)
        assert data.n == 20 and data.dim == 1
        x = data.scalar_inputs()
        assert np.all((x >= 0.0) & (x <= 1.0))
        assert_allclose(data.targets, 2.0 * x + 0.5, rtol=1e-15)
        again = synthetic_dataset(20, seed=0)
        assert_allclose(data.inputs, again.inputs, atol=0)

    def test_box_dataset_shapes(self):
        data = box_dataset(6, 3, seed=1)
        assert data.inputs.shape == (6, 3)
        with pytest.raises(ContractError):
            data.scalar_inputs()

    def test_parameter_shape_validated(self):
        sys = LinearSystem(np.eye(3))
        with pytest.raises(ContractError):
            sys.evaluate(np.zeros(4))
