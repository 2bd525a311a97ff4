import numpy as np
import pytest
from numpy.testing import assert_allclose

from tangentkit.conditioning import ConstantsEstimate, estimate_constants, tangent_kernel
from tangentkit.errors import ContractError
from tangentkit.optimize import (
    GDPrescription,
    prescribe_gd,
    prescribe_sgd,
    run_gd,
    run_sgd,
    verify_rate,
)
from tangentkit.systems import LinearSystem, ShallowNet, synthetic_dataset


def consts(L, beta):
    return ConstantsEstimate(L_F_hat=L, beta_F_hat=beta, gamma_hat=None,
                             safety_factor=1.0)


class TestPrescribeGD:
    def test_smoothness_mode_pin(self):
        # eta = 1/(L^2 + beta ||r0||), R = 2 L ||r0|| / mu
        sys = LinearSystem(np.eye(1))
        w0, y = np.zeros(1), np.array([3.0])  # ||r0|| = 3
        p = prescribe_gd(sys, w0, y, consts(2.0, 1.0), mu=1.0)
        assert_allclose(p.step_size, 1.0 / 7.0)
        assert_allclose(p.radius, 12.0)
        assert p.provenance == "smoothness"

    def test_linear_beta_zero(self):
        A = np.diag([1.0, 2.0])
        sys = LinearSystem(A)
        c = estimate_constants(sys, np.zeros(2), 1.0, samples=4)
        p = prescribe_gd(sys, np.zeros(2), np.ones(2), c, mu=1.0)
        assert c.beta_F_hat == 0.0
        assert_allclose(p.step_size, 1.0 / c.L_F_hat**2)

    def test_kernel_mode_pin(self):
        # closed form with n = 1, L^2 = 1, lambda_min = 1:
        # eta = 2 / (2 + (1 - mu) mu)
        sys = LinearSystem(np.eye(1))
        p = prescribe_gd(sys, np.zeros(1), np.array([1.0]), consts(1.0, 0.0),
                         mu=0.5, mode="kernel")
        assert_allclose(p.step_size, 2.0 / (2.0 + 0.25))
        assert p.provenance == "kernel"

    def test_kernel_mode_needs_small_mu(self):
        sys = LinearSystem(np.eye(2))
        with pytest.raises(ContractError):
            prescribe_gd(sys, np.zeros(2), np.ones(2), consts(1.0, 0.0),
                         mu=1.0, mode="kernel")

    def test_self_estimated_constants_converge_shallow(self):
        data = synthetic_dataset(4, seed=0)
        net = ShallowNet(300, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(0)
        mu = 0.5 * tangent_kernel(net, w0).lambda_min
        p = prescribe_gd(net, w0, data.targets, None, mu=mu, samples=16, seed=1)
        assert p.step_size > 0 and p.radius > 0
        traj = run_gd(net, w0, data.targets, p.step_size, max_iters=10000,
                      loss_tol=1e-4)
        assert traj.converged
        assert float(np.max(traj.dist_from_init)) <= p.radius
        assert verify_rate(traj, p.step_size, mu).holds

    def test_argument_guards(self):
        sys = LinearSystem(np.eye(2))
        with pytest.raises(ContractError):
            prescribe_gd(sys, np.zeros(2), np.ones(2), consts(1.0, 0.0), mu=0.0)
        with pytest.raises(ContractError):
            prescribe_gd(sys, np.zeros(2), np.ones(2), consts(1.0, 0.0),
                         mu=1.0, mode="newton")


class TestRunGD:
    def test_identity_single_step(self):
        # w <- w - eta (w - y): eta = 1 lands exactly on the target
        sys = LinearSystem(np.eye(2))
        y = np.array([0.0, 0.0])
        traj = run_gd(sys, np.array([1.0, 0.0]), y, step=1.0, max_iters=5,
                      loss_tol=0.0)
        assert traj.converged
        assert traj.stop_reason == "converged"
        assert_allclose(traj.final_w, [0.0, 0.0], atol=1e-15)
        assert_allclose(traj.loss[0], 0.5)
        assert traj.t[-1] == 1

    def test_diagonal_geometric_decay(self):
        # losses contract exactly by factors (1 - eta a_i^2)^2 per axis
        A = np.diag([1.0, 2.0])
        sys = LinearSystem(A)
        w0 = np.array([1.0, 1.0])
        traj = run_gd(sys, w0, np.zeros(2), step=0.25, max_iters=60)
        t = traj.t.astype(np.float64)
        expected = 0.5 * (1.0 - 0.25) ** (2 * t) + 2.0 * (1.0 - 1.0) ** (2 * t)
        expected[0] = 2.5
        assert_allclose(traj.loss, expected, rtol=1e-12, atol=1e-300)
        # the slow axis dominates: rate bound with mu = lambda_min = 1
        report = verify_rate(traj, eta=0.25, mu=1.0)
        assert report.holds
        assert report.first_violation is None

    def test_verify_rate_flags_injected_spike(self):
        sys = LinearSystem(np.diag([1.0, 2.0]))
        traj = run_gd(sys, np.array([1.0, 1.0]), np.zeros(2), step=0.25,
                      max_iters=30)
        spiked = traj.loss.copy()
        spiked[7] = spiked[0]  # no descent method does this
        fake = type(traj)(t=traj.t, loss=spiked,
                          dist_from_init=traj.dist_from_init,
                          grad_norm=traj.grad_norm,
                          lambda_min_K=traj.lambda_min_K,
                          final_w=traj.final_w, converged=traj.converged,
                          stop_reason=traj.stop_reason)
        report = verify_rate(fake, eta=0.25, mu=1.0)
        assert not report.holds
        assert report.first_violation == 7

    def test_verify_rate_guard(self):
        sys = LinearSystem(np.eye(1))
        traj = run_gd(sys, np.ones(1), np.zeros(1), step=0.5, max_iters=3)
        with pytest.raises(ContractError):
            verify_rate(traj, eta=2.0, mu=1.0)

    def test_prescribed_shallow_descent_properties(self):
        data = synthetic_dataset(4, seed=0)
        net = ShallowNet(500, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(1)
        kern = tangent_kernel(net, w0)
        mu = 0.5 * kern.lambda_min
        assert mu > 0
        p = prescribe_gd(net, w0, data.targets, None, mu=mu, samples=16, seed=2)
        traj = run_gd(net, w0, data.targets, p.step_size, max_iters=10000,
                      loss_tol=1e-4, kernel_every=500)
        assert traj.converged
        # monotone descent at the prescribed step
        assert np.all(np.diff(traj.loss) <= 1e-15)
        # stays inside the prescribed ball
        assert float(np.max(traj.dist_from_init)) <= p.radius
        # the kernel stays positive along the way wherever it was sampled
        sampled = traj.lambda_min_K[~np.isnan(traj.lambda_min_K)]
        assert sampled.size >= 2 and np.all(sampled > 0)
        # Lipschitz floor on travel: ||F(w_T) - F(w_0)|| <= L ||w_T - w_0||
        L_hat = estimate_constants(net, w0, p.radius, samples=8, seed=3).L_F_hat
        r0 = float(np.linalg.norm(net.evaluate(w0) - data.targets))
        r_T = float(np.linalg.norm(net.evaluate(traj.final_w) - data.targets))
        assert float(traj.dist_from_init[-1]) >= (r0 - r_T) / L_hat - 1e-8

    def test_step_halving_is_stable(self):
        # both step sizes land on essentially the same near-interpolating
        # point, and halving the step doubles the iteration count
        data = synthetic_dataset(4, seed=0)
        net = ShallowNet(500, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(1)
        mu = 0.5 * tangent_kernel(net, w0).lambda_min
        p = prescribe_gd(net, w0, data.targets, None, mu=mu, samples=16, seed=2)
        full = run_gd(net, w0, data.targets, p.step_size, max_iters=30000,
                      loss_tol=1e-4)
        half = run_gd(net, w0, data.targets, 0.5 * p.step_size,
                      max_iters=60000, loss_tol=1e-4)
        assert full.converged and half.converged
        assert half.t[-1] <= 2.2 * full.t[-1]
        travel = float(np.linalg.norm(full.final_w - w0))
        gap = float(np.linalg.norm(full.final_w - half.final_w))
        assert gap <= 0.1 * travel

    def test_divergence_detected(self):
        sys = LinearSystem(np.diag([1.0, 2.0]))
        traj = run_gd(sys, np.array([1.0, 1.0]), np.zeros(2), step=10.0,
                      max_iters=200)
        assert traj.stop_reason == "diverged"
        assert not traj.converged

    def test_step_guard(self):
        with pytest.raises(ContractError):
            run_gd(LinearSystem(np.eye(1)), np.zeros(1), np.ones(1),
                   step=0.0, max_iters=1)


class TestPrescribeSGD:
    def test_closed_form_pins(self):
        # n=1, s=1: eta = mu/gamma^2; radius = 2 sqrt(2 gamma L0)/(mu delta)
        p = prescribe_sgd(n=1, mu=1.0, gamma=2.0, batch_size=1, L0=1.0,
                          delta=1.0)
        assert_allclose(p.step, 0.25)
        assert_allclose(p.radius, 2.0 * np.sqrt(2.0 * 2.0) / 1.0)
        assert_allclose(p.rate_factor, 1.0 - 0.25)

    def test_full_batch_matches_formula(self):
        n, mu, gamma, s = 4, 0.5, 1.5, 4
        p = prescribe_sgd(n, mu, gamma, s, L0=2.0, delta=0.1)
        step = n * mu / (n * gamma * (n**2 * gamma + mu * (s - 1)))
        assert_allclose(p.step, step)
        assert_allclose(p.rate_factor, 1.0 - mu * s * step / n)
        assert 0.0 < p.rate_factor < 1.0

    def test_batch_and_positivity_guards(self):
        with pytest.raises(ContractError):
            prescribe_sgd(4, 1.0, 1.0, 0, 1.0, 0.5)
        with pytest.raises(ContractError):
            prescribe_sgd(4, 1.0, 1.0, 5, 1.0, 0.5)
        with pytest.raises(ContractError):
            prescribe_sgd(4, -1.0, 1.0, 2, 1.0, 0.5)
        with pytest.raises(ContractError):
            prescribe_sgd(4, 1.0, 1.0, 2, 1.0, 0.0)


class TestRunSGD:
    def test_full_batch_without_replacement_is_gd(self):
        # batch = all of [n] makes the sum-form update exactly one GD step
        # at the same step size
        A = np.array([[1.0, 0.5], [0.0, 2.0], [0.3, 0.0]])
        sys = LinearSystem(A)
        w0 = np.array([1.0, -1.0])
        y = np.array([0.5, 0.0, 0.1])
        sgd = run_sgd(sys, w0, y, step=0.05, batch_size=3, max_iters=40,
                      seed=0, loss_every=1, replace=False)
        gd = run_gd(sys, w0, y, step=0.05, max_iters=40)
        assert_allclose(sgd.final_w, gd.final_w, rtol=1e-12)
        assert_allclose(sgd.loss, gd.loss, rtol=1e-12)

    def test_same_seed_reproduces(self):
        data = synthetic_dataset(8, seed=0)
        net = ShallowNet(50, "tanh", inputs=data.scalar_inputs())
        w0 = net.init_params(0)
        a = run_sgd(net, w0, data.targets, step=0.01, batch_size=2,
                    max_iters=100, seed=5)
        b = run_sgd(net, w0, data.targets, step=0.01, batch_size=2,
                    max_iters=100, seed=5)
        assert_allclose(a.final_w, b.final_w, rtol=0, atol=0)
        c = run_sgd(net, w0, data.targets, step=0.01, batch_size=2,
                    max_iters=100, seed=6)
        assert not np.allclose(b.final_w, c.final_w)

    def test_identity_mean_rate(self):
        # identity system, per-equation loss smoothness gamma = 1; the mean
        # loss over seeds must track the prescribed geometric rate
        n = 2
        sys = LinearSystem(np.eye(n))
        w0 = np.array([1.0, -1.0])
        y = np.zeros(n)
        L0 = 0.5 * float(w0 @ w0)
        p = prescribe_sgd(n=n, mu=1.0, gamma=1.0, batch_size=1, L0=L0,
                          delta=0.1)
        T = 60
        finals = []
        for seed in range(20):
            traj = run_sgd(sys, w0, y, step=p.step, batch_size=1,
                           max_iters=T, seed=seed, loss_every=T)
            finals.append(traj.loss[-1])
        mean_final = float(np.mean(finals))
        bound = p.rate_factor**T * L0
        assert mean_final <= bound * 1.5
        # every seed stays inside the high-probability ball
        for seed in range(20):
            traj = run_sgd(sys, w0, y, step=p.step, batch_size=1,
                           max_iters=T, seed=seed, loss_every=10)
            assert float(np.max(traj.dist_from_init)) <= p.radius

    def test_divergence_stop_reason(self):
        sys = LinearSystem(np.diag([1.0, 3.0]))
        traj = run_sgd(sys, np.array([1.0, 1.0]), np.zeros(2), step=5.0,
                       batch_size=2, max_iters=500, seed=0)
        assert traj.stop_reason == "diverged"

    def test_checkpoint_schedule(self):
        sys = LinearSystem(np.eye(2))
        traj = run_sgd(sys, np.ones(2), np.zeros(2), step=0.1, batch_size=1,
                       max_iters=25, seed=0, loss_every=10)
        assert list(traj.t) == [0, 10, 20, 25]

    def test_argument_guards(self):
        sys = LinearSystem(np.eye(2))
        with pytest.raises(ContractError):
            run_sgd(sys, np.zeros(2), np.ones(2), step=-0.1, batch_size=1,
                    max_iters=5)
        with pytest.raises(ContractError):
            run_sgd(sys, np.zeros(2), np.ones(2), step=0.1, batch_size=3,
                    max_iters=5)
        with pytest.raises(ContractError):
            run_sgd(sys, np.zeros(2), np.ones(2), step=0.1, batch_size=1,
                    max_iters=5, loss_every=0)


class TestTrajectoryRecord:
    def test_gd_records_every_iteration(self):
        sys = LinearSystem(np.diag([1.0, 2.0]))
        traj = run_gd(sys, np.ones(2), np.zeros(2), step=0.2, max_iters=17)
        assert list(traj.t) == list(range(18))
        assert traj.loss.shape == traj.grad_norm.shape == traj.dist_from_init.shape
        assert traj.dist_from_init[0] == 0.0
        # the gradient norm identity ||grad|| = ||J^T r|| at each iterate
        assert traj.grad_norm[0] == pytest.approx(
            float(np.linalg.norm(sys.jacobian(np.ones(2)).T
                                 @ (sys.evaluate(np.ones(2)) - np.zeros(2)))))

    def test_kernel_sampling_stride(self):
        sys = LinearSystem(np.diag([1.0, 2.0]))
        traj = run_gd(sys, np.ones(2), np.zeros(2), step=0.2, max_iters=10,
                      kernel_every=4)
        sampled = ~np.isnan(traj.lambda_min_K)
        assert list(np.flatnonzero(sampled)) == [0, 4, 8, 10]
        assert_allclose(traj.lambda_min_K[sampled], 1.0)
