"""Scenario files.

A scenario is a UTF-8 JSON document describing one Monte Carlo experiment:
the model, horizon and smoothing index, the continuous-time constraint
weights, the noise generator and the output format. Unknown fields are
rejected at every level.

Example:
    {
        "model_id": "linear_scalar",
        "model_params": {"a": -0.5},
        "horizon_t": 20,
        "smooth_at_k": 10,
        "sqc": {"N": 1.0, "Q": 1.0, "R": 1.0, "d": 4.0},
        "noise": {"target_fraction": 0.8, "seed": 7},
        "runs": 200
    }
"""

import json
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from .constants import DEFAULT_DELTA, DEFAULT_RUNS, DEFAULT_SEED, DEFAULT_TARGET_FRACTION
from .discretize import IqcWeights
from .exceptions import ExportError, ScenarioError
from .linalg import is_positive_definite, is_symmetric
from .systems import DiscreteModel, ParamValue, build_model, model_parts

MatrixValue = float | list[list[float]]


def _as_array(value: MatrixValue) -> np.ndarray:
    arr = np.array(value, dtype=float)
    return arr.reshape(1, 1) if arr.ndim == 0 else arr


class SqcConfig(BaseModel):
    """Continuous-time constraint weights; scalars stand for 1x1 matrices."""

    model_config = ConfigDict(extra="forbid")

    N: MatrixValue
    Q: MatrixValue
    R: MatrixValue
    d: float = Field(gt=0)
    x_bar_0: list[float] | None = None

    @field_validator("N", "Q", "R")
    @classmethod
    def validate_spd(cls, v: MatrixValue, info: ValidationInfo) -> MatrixValue:
        """Require a square, symmetric, positive-definite matrix."""
        arr = _as_array(v)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"{info.field_name} must be a square matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{info.field_name} must contain finite numbers")
        if not is_symmetric(arr):
            raise ValueError(f"{info.field_name} must be symmetric")
        if not is_positive_definite(arr):
            raise ValueError(f"{info.field_name} must be positive-definite")
        return v


class NoiseConfig(BaseModel):
    """Admissible-noise generator settings."""

    model_config = ConfigDict(extra="forbid")

    target_fraction: float = Field(default=DEFAULT_TARGET_FRACTION, gt=0, lt=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    zero: bool = False


class OutputConfig(BaseModel):
    """Which result files to write."""

    model_config = ConfigDict(extra="forbid")

    format: Literal["csv", "json", "both"] = "both"


class Scenario(BaseModel):
    """Validated scenario."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_id: Literal["linear_scalar", "linear_2d", "logistic", "pendulum", "custom_polynomial"]
    model_params: dict[str, ParamValue] = Field(default_factory=dict)
    horizon_t: int = Field(ge=1)
    smooth_at_k: int
    delta: float = Field(default=DEFAULT_DELTA, gt=0)
    sqc: SqcConfig
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    runs: int = Field(default=DEFAULT_RUNS, ge=1)
    output: OutputConfig = Field(default_factory=OutputConfig)
    terminal_anchor: list[float] | None = None
    measurement_split: Literal["forward", "reverse"] = "forward"
    reverse_discretization: Literal["auto", "euler", "exact", "newton"] = "auto"

    @model_validator(mode="after")
    def validate_consistency(self) -> "Scenario":
        """Cross-field checks: index range and model dimensions."""
        if not 0 <= self.smooth_at_k <= self.horizon_t:
            raise ValueError("smooth_at_k must satisfy 0 ≤ k ≤ horizon_t")
        try:
            parts = model_parts(self.model_id, self.model_params)
        except ScenarioError as e:
            raise ValueError(str(e)) from e
        n = parts.dimensions[0]
        if self.sqc.x_bar_0 is not None and len(self.sqc.x_bar_0) != n:
            raise ValueError(f"sqc.x_bar_0 must have {n} entries for {self.model_id}")
        if self.terminal_anchor is not None and len(self.terminal_anchor) != n:
            raise ValueError(f"terminal_anchor must have {n} entries for {self.model_id}")
        return self

    def weights(self) -> IqcWeights:
        """Continuous weights; x_bar_0 defaults to the model's nominal state."""
        x_bar_0 = self.sqc.x_bar_0
        if x_bar_0 is None:
            x_bar_0 = model_parts(self.model_id, self.model_params).nominal_state
        return IqcWeights(
            N=_as_array(self.sqc.N),
            Q=_as_array(self.sqc.Q),
            R=_as_array(self.sqc.R),
            d=self.sqc.d,
            x_bar_0=np.asarray(x_bar_0, dtype=float),
        )

    def build(self) -> DiscreteModel:
        """Discretize the scenario's model and weights.

        Raises:
            ScenarioError: If the weights do not fit the model
        """
        return build_model(
            self.model_id,
            self.model_params,
            self.weights(),
            self.delta,
            self.horizon_t,
            self.reverse_discretization,
        )


def _format_validation_error(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        message = item["msg"].removeprefix("Value error, ")
        messages.append(f"{location}: {message}" if location else message)
    return "; ".join(messages)


def scenario_from_dict(data: dict) -> Scenario:
    """Validate an already-parsed scenario document.

    Raises:
        ScenarioError: On any schema or constraint violation
    """
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(_format_validation_error(e)) from e
    scenario.build()
    return scenario


def parse_scenario(path: Path) -> Scenario:
    """Read and validate a scenario file.

    Args:
        path: JSON scenario file

    Returns:
        Validated Scenario with defaults applied

    Raises:
        ExportError: If the file cannot be read or is not UTF-8
        ScenarioError: If the JSON is malformed or fails validation
    """
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ExportError(f"cannot read scenario file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from e
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    return scenario_from_dict(data)
