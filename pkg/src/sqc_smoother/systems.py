"""Built-in model catalogue.

Each model is a continuous-time vector field with analytic Jacobians, an
uncertainty output, a measurement map and a noise input matrix. Scenario
parameters override the defaults in MODEL_PARAMETERS; unknown names are
rejected.

    linear_scalar      dx = a x + b w,                 z = u x,        y = x
    linear_2d          rotation at `frequency` with `damping`,
                       z = u x,                                        y = x_1
    logistic           dx = r x (1 - x) + b w,          z = u x,        y = x
    pendulum           theta'' = -(g / L) sin(theta) - f theta' + b w,
                       z = u sin(theta),                               y = theta
    custom_polynomial  dx = sum_i c_i x^i + b w,        z = u x,        y = x
"""

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .discretize import (
    ContinuousSystem,
    IqcWeights,
    discretize_weights,
    euler_forward,
    euler_reverse,
    exact_reverse,
    newton_reverse,
)
from .exceptions import InvalidArgumentError, ScenarioError
from .linalg import as_matrix
from .model import ForwardDiscreteSystem, NonlinearMap, ReverseDiscreteSystem, SqcParams
from .utils import print_debug

ParamValue = float | list[float]

MODEL_PARAMETERS: dict[str, dict[str, ParamValue]] = {
    "linear_scalar": {
        "a": -1.0,
        "process_gain": 1.0,
        "uncertainty_gain": 0.0,
        "x0": [0.0],
    },
    "linear_2d": {
        "damping": 0.2,
        "frequency": 1.0,
        "process_gain": 1.0,
        "uncertainty_gain": 0.0,
        "x0": [1.0, 0.0],
    },
    "logistic": {
        "rate": 0.5,
        "process_gain": 1.0,
        "uncertainty_gain": 0.0,
        "x0": [0.5],
    },
    "pendulum": {
        "gravity": 9.81,
        "length": 1.0,
        "friction": 0.1,
        "process_gain": 1.0,
        "uncertainty_gain": 0.0,
        "x0": [0.5, 0.0],
    },
    "custom_polynomial": {
        "coefficients": [0.0, -1.0],
        "process_gain": 1.0,
        "uncertainty_gain": 0.0,
        "x0": [0.0],
    },
}

VECTOR_PARAMETERS = ("x0", "coefficients")
REVERSE_DISCRETIZATIONS = ("auto", "euler", "exact", "newton")


@dataclass(frozen=True)
class ModelParts:
    """Continuous-time ingredients of a built-in model."""

    a_c: NonlinearMap
    g_c: NonlinearMap
    c_c: NonlinearMap
    D_c: np.ndarray
    nominal_state: np.ndarray

    @property
    def dimensions(self) -> tuple[int, int, int, int]:
        """(n, p, q, l)."""
        return (
            self.a_c.dimension_in,
            self.D_c.shape[1],
            self.g_c.dimension_out,
            self.c_c.dimension_out,
        )


@dataclass(frozen=True)
class DiscreteModel:
    """Discretized model ready for simulation and smoothing."""

    model_id: str
    continuous: ContinuousSystem
    forward: ForwardDiscreteSystem
    reverse: ReverseDiscreteSystem
    sqc: SqcParams


def resolve_parameters(model_id: str, params: Mapping[str, ParamValue]) -> dict[str, ParamValue]:
    """Merge scenario parameters over the model defaults.

    Raises:
        ScenarioError: For an unknown model, an unknown parameter name or a
            value of the wrong kind
    """
    if model_id not in MODEL_PARAMETERS:
        raise ScenarioError(
            f"model_id must be one of {', '.join(MODEL_PARAMETERS)}, got {model_id!r}"
        )
    defaults = MODEL_PARAMETERS[model_id]
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise ScenarioError(
            f"model_params.{unknown[0]} is not a parameter of {model_id} "
            f"(allowed: {', '.join(defaults)})"
        )
    resolved: dict[str, ParamValue] = dict(defaults)
    for name, value in params.items():
        if name in VECTOR_PARAMETERS:
            values = [value] if isinstance(value, int | float) else list(value)
            if not values or not all(math.isfinite(float(v)) for v in values):
                raise ScenarioError(f"model_params.{name} must be a non-empty list of finite numbers")
            resolved[name] = [float(v) for v in values]
        else:
            if not isinstance(value, int | float) or not math.isfinite(float(value)):
                raise ScenarioError(f"model_params.{name} must be a finite number")
            resolved[name] = float(value)
    return resolved


def _nominal(params: Mapping[str, ParamValue], n: int, model_id: str) -> np.ndarray:
    x0 = np.asarray(params["x0"], dtype=float)
    if x0.shape != (n,):
        raise ScenarioError(f"model_params.x0 must have {n} entries for {model_id}")
    return x0


def _linear_scalar(params: Mapping[str, ParamValue]) -> ModelParts:
    a = float(params["a"])
    return ModelParts(
        a_c=NonlinearMap.affine([[a]], name="a_c"),
        g_c=NonlinearMap.affine([[float(params["uncertainty_gain"])]], name="g_c"),
        c_c=NonlinearMap.affine([[1.0]], name="c_c"),
        D_c=np.array([[float(params["process_gain"])]]),
        nominal_state=_nominal(params, 1, "linear_scalar"),
    )


def _linear_2d(params: Mapping[str, ParamValue]) -> ModelParts:
    damping, omega = float(params["damping"]), float(params["frequency"])
    return ModelParts(
        a_c=NonlinearMap.affine([[-damping, omega], [-omega, -damping]], name="a_c"),
        g_c=NonlinearMap.affine(float(params["uncertainty_gain"]) * np.eye(2), name="g_c"),
        c_c=NonlinearMap.affine([[1.0, 0.0]], name="c_c"),
        D_c=float(params["process_gain"]) * np.eye(2),
        nominal_state=_nominal(params, 2, "linear_2d"),
    )


def _logistic(params: Mapping[str, ParamValue]) -> ModelParts:
    r = float(params["rate"])
    return ModelParts(
        a_c=NonlinearMap(
            1,
            1,
            func=lambda x: r * x * (1.0 - x),
            jac=lambda x: [[r * (1.0 - 2.0 * x[0])]],
            name="a_c",
        ),
        g_c=NonlinearMap.affine([[float(params["uncertainty_gain"])]], name="g_c"),
        c_c=NonlinearMap.affine([[1.0]], name="c_c"),
        D_c=np.array([[float(params["process_gain"])]]),
        nominal_state=_nominal(params, 1, "logistic"),
    )


def _pendulum(params: Mapping[str, ParamValue]) -> ModelParts:
    length = float(params["length"])
    if length <= 0.0:
        raise ScenarioError("model_params.length must be positive")
    ratio = float(params["gravity"]) / length
    friction = float(params["friction"])
    u = float(params["uncertainty_gain"])
    return ModelParts(
        a_c=NonlinearMap(
            2,
            2,
            func=lambda x: np.array([x[1], -ratio * math.sin(x[0]) - friction * x[1]]),
            jac=lambda x: [[0.0, 1.0], [-ratio * math.cos(x[0]), -friction]],
            name="a_c",
        ),
        g_c=NonlinearMap(
            2,
            1,
            func=lambda x: [u * math.sin(x[0])],
            jac=lambda x: [[u * math.cos(x[0]), 0.0]],
            is_affine=u == 0.0,
            name="g_c",
        ),
        c_c=NonlinearMap.affine([[1.0, 0.0]], name="c_c"),
        D_c=np.array([[0.0], [float(params["process_gain"])]]),
        nominal_state=_nominal(params, 2, "pendulum"),
    )


def _custom_polynomial(params: Mapping[str, ParamValue]) -> ModelParts:
    poly = Polynomial(np.asarray(params["coefficients"], dtype=float)).trim()
    deriv = poly.deriv()
    return ModelParts(
        a_c=NonlinearMap(
            1,
            1,
            func=lambda x: [poly(x[0])],
            jac=lambda x: [[deriv(x[0])]],
            is_affine=poly.degree() <= 1,
            name="a_c",
        ),
        g_c=NonlinearMap.affine([[float(params["uncertainty_gain"])]], name="g_c"),
        c_c=NonlinearMap.affine([[1.0]], name="c_c"),
        D_c=np.array([[float(params["process_gain"])]]),
        nominal_state=_nominal(params, 1, "custom_polynomial"),
    )


_BUILDERS = {
    "linear_scalar": _linear_scalar,
    "linear_2d": _linear_2d,
    "logistic": _logistic,
    "pendulum": _pendulum,
    "custom_polynomial": _custom_polynomial,
}


def model_parts(model_id: str, params: Mapping[str, ParamValue] | None = None) -> ModelParts:
    """Build the continuous-time parts of a built-in model.

    Raises:
        ScenarioError: For unknown models or invalid parameters
    """
    resolved = resolve_parameters(model_id, params or {})
    return _BUILDERS[model_id](resolved)


def _check_weight_shapes(parts: ModelParts, weights: IqcWeights, model_id: str) -> None:
    n, p, _, l = parts.dimensions
    expected = {"N": (n, n), "Q": (p, p), "R": (l, l)}
    for name, shape in expected.items():
        value = getattr(weights, name)
        if callable(value):
            continue
        actual = as_matrix(value, name=name).shape
        if actual != shape:
            raise ScenarioError(
                f"sqc.{name} must be {shape[0]}x{shape[1]} for {model_id}, "
                f"got {actual[0]}x{actual[1]}"
            )


def _reverse_system(
    continuous: ContinuousSystem,
    forward: ForwardDiscreteSystem,
    nominal_state: np.ndarray,
    delta: float,
    method: str,
    model_id: str,
) -> ReverseDiscreteSystem:
    if method == "euler":
        return euler_reverse(continuous, delta)
    if method == "exact":
        if not forward.alpha.is_affine:
            raise ScenarioError(
                f"reverse_discretization 'exact' requires affine dynamics; {model_id} is nonlinear"
            )
        return exact_reverse(forward)
    if method == "newton":
        return newton_reverse(forward, nominal_state)
    # auto: invert the forward step, Euler when it cannot be inverted
    try:
        if forward.alpha.is_affine:
            return exact_reverse(forward)
        return newton_reverse(forward, nominal_state)
    except InvalidArgumentError as e:
        print_debug(f"{model_id}: forward step not invertible ({e}); using reverse Euler")
        return euler_reverse(continuous, delta)


def build_model(
    model_id: str,
    params: Mapping[str, ParamValue] | None,
    weights: IqcWeights,
    delta: float,
    horizon: int,
    reverse_discretization: str = "auto",
) -> DiscreteModel:
    """Discretize a built-in model with step delta over the given horizon.

    ``reverse_discretization`` picks how the forward filter's reverse-time
    system is built: "exact" inverts the Euler map of an affine model,
    "newton" inverts a nonlinear one numerically about the nominal state,
    "euler" uses reverse Euler. "auto" inverts the forward step (exact or
    Newton) and falls back to reverse Euler when it is singular.

    Raises:
        ScenarioError: For invalid parameters, mismatched weight shapes, or
            "exact" on a nonlinear model
    """
    if reverse_discretization not in REVERSE_DISCRETIZATIONS:
        raise ScenarioError(
            "reverse_discretization must be one of "
            f"{', '.join(REVERSE_DISCRETIZATIONS)}, got {reverse_discretization!r}"
        )
    parts = model_parts(model_id, params)
    _check_weight_shapes(parts, weights, model_id)
    try:
        continuous = ContinuousSystem(
            a_c=parts.a_c, g_c=parts.g_c, c_c=parts.c_c, D_c=parts.D_c, weights=weights
        )
        forward = euler_forward(continuous, delta)
        reverse = _reverse_system(
            continuous, forward, parts.nominal_state, delta, reverse_discretization, model_id
        )
        sqc = discretize_weights(weights, delta, horizon)
    except InvalidArgumentError as e:
        raise ScenarioError(str(e)) from e
    return DiscreteModel(
        model_id=model_id, continuous=continuous, forward=forward, reverse=reverse, sqc=sqc
    )
