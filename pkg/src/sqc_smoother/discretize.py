"""Euler discretization of continuous-time uncertain models.

A continuous model

    dx/ds = a_c(x) + D_c w,   z = g_c(x),   y = c_c(x) + v

with IQC weights (N, Q(.), R(.), d, x_bar_0) is turned into

- a forward-time discrete system (x_{t+1} = alpha(x_t) + Dbar w_t) for the
  reverse filter and the simulator,
- a reverse-time discrete system (x_t = a(x_{t+1}) - D w_t) for the forward
  filter, by reverse Euler, by exact inversion of an affine forward step, or
  by Newton inversion of a nonlinear one,
- SQC weights whose Riemann sum approximates the IQC integral.

Every stage term carries the weight step: Q_s and R_s are scaled by step and
the uncertainty output by sqrt(step).
"""

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as linalg

from .constants import NEWTON_MAX_ITERATIONS, NEWTON_TOL
from .exceptions import InvalidArgumentError, NumericalError
from .linalg import ArrayLike, as_matrix, as_vector, require_spd
from .model import ForwardDiscreteSystem, NonlinearMap, ReverseDiscreteSystem, SqcParams

WeightFunction = Callable[[float], ArrayLike]


@dataclass(frozen=True)
class IqcWeights:
    """Continuous-time constraint weights.

    Q and R are constant matrices or functions of time returning matrices.
    """

    N: ArrayLike
    Q: ArrayLike | WeightFunction
    R: ArrayLike | WeightFunction
    d: float
    x_bar_0: ArrayLike


@dataclass(frozen=True)
class ContinuousSystem:
    """Continuous-time uncertain model with autonomous maps."""

    a_c: NonlinearMap
    g_c: NonlinearMap
    c_c: NonlinearMap
    D_c: np.ndarray
    weights: IqcWeights

    def __post_init__(self) -> None:
        n = self.a_c.dimension_in
        if self.a_c.dimension_out != n:
            raise InvalidArgumentError("a_c must map the state space to itself")
        for m in (self.g_c, self.c_c):
            if m.dimension_in != n:
                raise InvalidArgumentError(f"{m.name} must take the state dimension {n}")
        d_c = as_matrix(self.D_c, name="D_c")
        if d_c.shape[0] != n:
            raise InvalidArgumentError(f"D_c must have {n} rows, got {d_c.shape[0]}")
        object.__setattr__(self, "D_c", d_c)

    @property
    def n(self) -> int:
        return self.a_c.dimension_in

    @property
    def is_affine(self) -> bool:
        return self.a_c.is_affine and self.g_c.is_affine and self.c_c.is_affine


def _check_step(step: float) -> float:
    if not step > 0.0:
        raise InvalidArgumentError(f"discretization step must be positive, got {step}")
    return float(step)


def _euler_map(a_c: NonlinearMap, step: float, sign: float, name: str) -> NonlinearMap:
    """x -> x + sign * step * a_c(x), Jacobian I + sign * step * grad a_c."""
    identity = np.eye(a_c.dimension_in)
    return NonlinearMap(
        dimension_in=a_c.dimension_in,
        dimension_out=a_c.dimension_out,
        func=lambda x: x + sign * step * a_c.eval(x),
        jac=lambda x: identity + sign * step * a_c.jacobian(x),
        is_affine=a_c.is_affine,
        name=name,
    )


def euler_forward(system: ContinuousSystem, step: float) -> ForwardDiscreteSystem:
    """Forward Euler: alpha(x) = x + step * a_c(x), Dbar = step * D_c.

    Raises:
        InvalidArgumentError: If step <= 0
    """
    step = _check_step(step)
    return ForwardDiscreteSystem(
        alpha=_euler_map(system.a_c, step, 1.0, "alpha"),
        kappa=system.g_c.scaled(math.sqrt(step)),
        xi=system.c_c,
        Dbar=step * system.D_c,
    )


def euler_reverse(system: ContinuousSystem, step: float) -> ReverseDiscreteSystem:
    """Reverse Euler: x_t = x_{t+1} - step * a_c(x_{t+1}) - step * D_c w_t.

    Raises:
        InvalidArgumentError: If step <= 0
    """
    step = _check_step(step)
    return ReverseDiscreteSystem(
        a=_euler_map(system.a_c, step, -1.0, "a"),
        g=system.g_c.scaled(math.sqrt(step)),
        c=system.c_c,
        D=step * system.D_c,
    )


def exact_reverse(system: ForwardDiscreteSystem) -> ReverseDiscreteSystem:
    """Invert an affine forward-time system exactly.

    With alpha(x) = F x + f the reverse dynamics are
    x_t = F^{-1}(x_{t+1} - f) - F^{-1} Dbar_t w_t.

    Raises:
        InvalidArgumentError: If alpha is not affine or F is singular
    """
    if not system.alpha.is_affine:
        raise InvalidArgumentError("exact_reverse requires an affine transition map")
    origin = np.zeros(system.n)
    f_mat = system.alpha.jacobian(origin)
    f_off = system.alpha.eval(origin)
    try:
        f_inv = linalg.inv(f_mat)
    except linalg.LinAlgError as e:
        raise InvalidArgumentError("transition matrix is singular") from e
    if not np.all(np.isfinite(f_inv)):
        raise InvalidArgumentError("transition matrix is singular")
    d_rev = np.einsum("ij,...jk->...ik", f_inv, system.Dbar)
    return ReverseDiscreteSystem(
        a=NonlinearMap.affine(f_inv, -f_inv @ f_off, name="a"),
        g=system.kappa,
        c=system.xi,
        D=d_rev,
    )


def _newton_inverse(alpha: NonlinearMap, x: np.ndarray) -> np.ndarray:
    """Solve alpha(z) = x, starting from the reverse Euler guess 2x - alpha(x)."""
    z = 2.0 * x - alpha.eval(x)
    tolerance = NEWTON_TOL * (1.0 + float(np.linalg.norm(x)))
    for _ in range(NEWTON_MAX_ITERATIONS):
        residual = alpha.eval(z) - x
        if not np.all(np.isfinite(residual)):
            break
        if float(np.linalg.norm(residual)) <= tolerance:
            return z
        try:
            z = z - linalg.solve(alpha.jacobian(z), residual)
        except linalg.LinAlgError as e:
            raise NumericalError(f"{alpha.name} has a singular Jacobian at {z}") from e
    raise NumericalError(f"Newton inversion of {alpha.name} did not converge at {x}")


def newton_reverse(system: ForwardDiscreteSystem, point: ArrayLike) -> ReverseDiscreteSystem:
    """Reverse-time system that inverts the forward step numerically.

    a(x) solves alpha(a(x)) = x by Newton iteration, so a trajectory of the
    forward-time system with w = 0 satisfies the reverse dynamics exactly.
    The noise input is D_t = J^{-1} Dbar_t with J the Jacobian of alpha at
    ``point``, a first-order match of alpha^{-1}(x - Dbar w).

    Raises:
        InvalidArgumentError: If the Jacobian at ``point`` is singular
    """
    alpha = system.alpha
    anchor = as_vector(point, system.n, "point")
    try:
        j_inv = linalg.inv(alpha.jacobian(anchor))
    except linalg.LinAlgError as e:
        raise InvalidArgumentError(f"{alpha.name} is singular at {anchor}") from e
    if not np.all(np.isfinite(j_inv)):
        raise InvalidArgumentError(f"{alpha.name} is singular at {anchor}")

    def jac(x: np.ndarray) -> np.ndarray:
        try:
            return linalg.inv(alpha.jacobian(_newton_inverse(alpha, x)))
        except linalg.LinAlgError as e:
            raise NumericalError(f"{alpha.name} has a singular Jacobian near {x}") from e

    return ReverseDiscreteSystem(
        a=NonlinearMap(
            system.n,
            system.n,
            func=lambda x: _newton_inverse(alpha, x),
            jac=jac,
            is_affine=alpha.is_affine,
            name="a",
        ),
        g=system.kappa,
        c=system.xi,
        D=np.einsum("ij,...jk->...ik", j_inv, system.Dbar),
    )


def _weight_at(weight: ArrayLike | WeightFunction, time: float) -> np.ndarray:
    value = weight(time) if callable(weight) else weight
    return as_matrix(value)


def discretize_weights(weights: IqcWeights, step: float, horizon: int) -> SqcParams:
    """Riemann-sum SQC weights: Q_s = Q(s * step) * step, R_s = R(s * step) * step.

    N, d and x_bar_0 pass through unchanged. Constant weights stay constant;
    time-varying weights become per-stage stacks of length ``horizon``.

    Raises:
        InvalidArgumentError: If step <= 0, horizon < 1, or a weight is not SPD
    """
    step = _check_step(step)
    if horizon < 1:
        raise InvalidArgumentError(f"horizon must be at least 1, got {horizon}")

    def stage_weights(weight: ArrayLike | WeightFunction, name: str) -> np.ndarray:
        if not callable(weight):
            return require_spd(as_matrix(weight, name=name), name) * step
        return np.stack(
            [
                require_spd(_weight_at(weight, s * step), f"{name}({s * step:g})") * step
                for s in range(horizon)
            ]
        )

    n_mat = require_spd(as_matrix(weights.N, name="N"), "N")
    return SqcParams(
        N=n_mat,
        Q=stage_weights(weights.Q, "Q"),
        R=stage_weights(weights.R, "R"),
        d=weights.d,
        x_bar_0=as_vector(weights.x_bar_0, n_mat.shape[0], "x_bar_0"),
    )
