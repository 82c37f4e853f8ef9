"""Tests for discretize.py - Euler schemes, exact and Newton inversion, and weights."""

import math

import numpy as np
import pytest

from src.sqc_smoother.discretize import (
    ContinuousSystem,
    IqcWeights,
    discretize_weights,
    euler_forward,
    euler_reverse,
    exact_reverse,
    newton_reverse,
)
from src.sqc_smoother.exceptions import InvalidArgumentError
from src.sqc_smoother.model import NonlinearMap

pytestmark = pytest.mark.unit  # All tests in this module are unit tests

UNIT_WEIGHTS = IqcWeights(N=1.0, Q=1.0, R=1.0, d=1.0, x_bar_0=[0.0])


def _scalar_system(a_c: NonlinearMap, g_gain: float = 0.0) -> ContinuousSystem:
    return ContinuousSystem(
        a_c=a_c,
        g_c=NonlinearMap.affine([[g_gain]], name="g_c"),
        c_c=NonlinearMap.affine([[1.0]], name="c_c"),
        D_c=[[1.0]],
        weights=UNIT_WEIGHTS,
    )


def _cubic() -> NonlinearMap:
    return NonlinearMap(1, 1, func=lambda x: -(x**3), jac=lambda x: [[-3.0 * x[0] ** 2]])


class TestEulerForward:
    """Tests for euler_forward."""

    def test_linear_decay(self):
        ft = euler_forward(_scalar_system(NonlinearMap.affine([[-1.0]])), 0.1)
        assert ft.alpha.eval([2.0])[0] == pytest.approx(1.8)
        assert ft.alpha.is_affine

    def test_zero_field_is_identity(self):
        ft = euler_forward(_scalar_system(NonlinearMap.zero(1)), 0.7)
        assert ft.alpha.eval([3.0])[0] == 3.0

    def test_cubic(self):
        ft = euler_forward(_scalar_system(_cubic()), 0.1)
        assert ft.alpha.eval([1.0])[0] == pytest.approx(0.9)
        assert ft.alpha.jacobian([1.0])[0, 0] == pytest.approx(0.7)
        assert not ft.alpha.is_affine

    def test_noise_and_output_scaling(self):
        ft = euler_forward(_scalar_system(NonlinearMap.zero(1), g_gain=2.0), 0.25)
        assert ft.Dbar_at(0)[0, 0] == pytest.approx(0.25)
        assert ft.kappa.eval([1.0])[0] == pytest.approx(2.0 * math.sqrt(0.25))
        assert ft.xi.eval([1.5])[0] == 1.5

    @pytest.mark.parametrize("step", [0.0, -0.1])
    def test_nonpositive_step(self, step):
        with pytest.raises(InvalidArgumentError, match="step must be positive"):
            euler_forward(_scalar_system(NonlinearMap.zero(1)), step)


class TestEulerReverse:
    """Tests for euler_reverse."""

    def test_linear_decay(self):
        rt = euler_reverse(_scalar_system(NonlinearMap.affine([[-1.0]])), 0.1)
        assert rt.a.eval([1.0])[0] == pytest.approx(1.1)
        assert rt.D_at(0)[0, 0] == pytest.approx(0.1)

    def test_zero_field_is_identity(self):
        rt = euler_reverse(_scalar_system(NonlinearMap.zero(1)), 0.3)
        assert rt.a.eval([2.0])[0] == 2.0

    def test_output_maps_match_forward(self):
        """Both schemes give the same output values at the same state."""
        system = _scalar_system(_cubic(), g_gain=0.5)
        ft, rt = euler_forward(system, 0.1), euler_reverse(system, 0.1)
        for x in (-1.0, 0.2, 3.0):
            assert rt.g.eval([x])[0] == ft.kappa.eval([x])[0]
            assert rt.c.eval([x])[0] == ft.xi.eval([x])[0]

    def test_nonpositive_step(self):
        with pytest.raises(InvalidArgumentError):
            euler_reverse(_scalar_system(NonlinearMap.zero(1)), 0.0)

    def test_round_trip_error_is_second_order(self):
        """alpha(a(x)) - x shrinks like step^2."""
        system = _scalar_system(NonlinearMap.affine([[-1.0]]))
        errors = []
        steps = [0.1, 0.05, 0.025]
        for step in steps:
            ft, rt = euler_forward(system, step), euler_reverse(system, step)
            grid = np.linspace(0.0, 1.0, 11)
            errors.append(max(abs(ft.alpha.eval(rt.a.eval([x]))[0] - x) for x in grid))
        for step, err in zip(steps, errors, strict=True):
            assert err <= 1.01 * step**2
        order = math.log(errors[0] / errors[2]) / math.log(steps[0] / steps[2])
        assert order == pytest.approx(2.0, abs=0.1)


class TestExactReverse:
    """Tests for exact_reverse."""

    def test_inverts_affine_map(self):
        system = ContinuousSystem(
            a_c=NonlinearMap.affine([[-0.5, 1.0], [-1.0, -0.5]], offset=[0.2, 0.0]),
            g_c=NonlinearMap.zero(2),
            c_c=NonlinearMap.affine([[1.0, 0.0]]),
            D_c=np.eye(2),
            weights=IqcWeights(N=np.eye(2), Q=np.eye(2), R=1.0, d=1.0, x_bar_0=[0.0, 0.0]),
        )
        ft = euler_forward(system, 0.1)
        rt = exact_reverse(ft)
        x = np.array([0.3, -1.2])
        w = np.array([0.5, 0.25])
        x_next = ft.alpha.eval(x) + ft.Dbar_at(0) @ w
        assert np.allclose(rt.a.eval(x_next) - rt.D_at(0) @ w, x, atol=1e-12)

    def test_rejects_nonlinear(self):
        ft = euler_forward(_scalar_system(_cubic()), 0.1)
        with pytest.raises(InvalidArgumentError, match="affine"):
            exact_reverse(ft)

    def test_rejects_singular(self):
        # x + 1.0 * (-x) = 0
        ft = euler_forward(_scalar_system(NonlinearMap.affine([[-1.0]])), 1.0)
        with pytest.raises(InvalidArgumentError, match="singular"):
            exact_reverse(ft)


class TestNewtonReverse:
    """Tests for newton_reverse."""

    @pytest.mark.parametrize("x", [-0.5, 0.3, 0.8])
    def test_inverts_cubic_step(self, x):
        ft = euler_forward(_scalar_system(_cubic()), 0.1)
        rt = newton_reverse(ft, [0.0])
        z = rt.a.eval([x])
        assert ft.alpha.eval(z)[0] == pytest.approx(x, abs=1e-10)
        assert rt.a.jacobian([x])[0, 0] * ft.alpha.jacobian(z)[0, 0] == pytest.approx(1.0)
        assert not rt.a.is_affine

    def test_matches_exact_inverse_for_affine(self):
        system = ContinuousSystem(
            a_c=NonlinearMap.affine([[-0.5, 1.0], [-1.0, -0.5]], offset=[0.2, 0.0]),
            g_c=NonlinearMap.zero(2),
            c_c=NonlinearMap.affine([[1.0, 0.0]]),
            D_c=np.eye(2),
            weights=IqcWeights(N=np.eye(2), Q=np.eye(2), R=1.0, d=1.0, x_bar_0=[0.0, 0.0]),
        )
        ft = euler_forward(system, 0.1)
        exact, newton = exact_reverse(ft), newton_reverse(ft, [0.0, 0.0])
        x = np.array([0.3, -1.2])
        assert np.allclose(newton.a.eval(x), exact.a.eval(x), atol=1e-12)
        assert np.allclose(newton.D_at(0), exact.D_at(0), atol=1e-12)

    def test_noise_free_trajectory_satisfies_reverse_dynamics(self):
        """Unlike reverse Euler, the Newton step undoes the forward step."""
        ft = euler_forward(_scalar_system(_cubic()), 0.1)
        rt = newton_reverse(ft, [0.0])
        states = [np.array([1.2])]
        for _ in range(10):
            states.append(ft.alpha.eval(states[-1]))
        for before, after in zip(states[:-1], states[1:], strict=True):
            assert rt.a.eval(after)[0] == pytest.approx(before[0], abs=1e-10)

    def test_rejects_singular(self):
        # x + 1.0 * (-x) = 0
        ft = euler_forward(_scalar_system(NonlinearMap.affine([[-1.0]])), 1.0)
        with pytest.raises(InvalidArgumentError, match="singular"):
            newton_reverse(ft, [0.0])


class TestDiscretizeWeights:
    """Tests for discretize_weights."""

    def test_constant_scaling(self):
        sqc = discretize_weights(IqcWeights(N=1.0, Q=2.0, R=4.0, d=1.0, x_bar_0=[0.0]), 0.5, 10)
        assert sqc.Q_at(0)[0, 0] == pytest.approx(1.0)
        assert sqc.Q_at(9)[0, 0] == pytest.approx(1.0)
        assert sqc.R_at(3)[0, 0] == pytest.approx(2.0)

    def test_pass_through(self):
        sqc = discretize_weights(
            IqcWeights(N=np.eye(2), Q=1.0, R=1.0, d=5.0, x_bar_0=[1.0, 2.0]), 0.1, 3
        )
        assert np.array_equal(sqc.N, np.eye(2))
        assert sqc.d == 5.0
        assert sqc.x_bar_0.tolist() == [1.0, 2.0]

    def test_time_varying(self):
        weights = IqcWeights(N=1.0, Q=lambda tau: 1.0 + tau, R=1.0, d=1.0, x_bar_0=[0.0])
        sqc = discretize_weights(weights, 0.1, 5)
        assert sqc.Q.shape == (5, 1, 1)
        assert sqc.Q_at(3)[0, 0] == pytest.approx(0.13)

    def test_indefinite_weight_rejected(self):
        with pytest.raises(InvalidArgumentError, match="positive-definite"):
            discretize_weights(IqcWeights(N=1.0, Q=-1.0, R=1.0, d=1.0, x_bar_0=[0.0]), 0.1, 3)

    def test_time_varying_failure_names_time(self):
        weights = IqcWeights(N=1.0, Q=1.0, R=lambda tau: 1.0 - tau, d=1.0, x_bar_0=[0.0])
        with pytest.raises(InvalidArgumentError, match=r"R\(1\)"):
            discretize_weights(weights, 0.5, 4)

    def test_invalid_horizon(self):
        with pytest.raises(InvalidArgumentError, match="horizon"):
            discretize_weights(UNIT_WEIGHTS, 0.1, 0)

    def test_riemann_sum_converges_at_first_order(self):
        """SQC of x(s) = exp(-s) sampled at step approaches the IQC integral."""
        exact = (1.0 - math.exp(-2.0)) / 2.0  # integral of exp(-2s) over [0, 1]
        errors = []
        for step in (0.1, 0.05, 0.025):
            sqc = discretize_weights(UNIT_WEIGHTS, step, round(1.0 / step))
            samples = [math.exp(-(s + 1) * step) for s in range(round(1.0 / step))]
            riemann = sum(sqc.R_at(s)[0, 0] * v**2 for s, v in enumerate(samples))
            errors.append(abs(riemann - exact))
        assert errors[1] < errors[0]
        assert errors[2] < errors[1]
        assert errors[0] / errors[2] == pytest.approx(4.0, rel=0.1)
