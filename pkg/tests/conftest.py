"""Shared pytest fixtures for sqc-smoother tests.

This module provides common systems, weights and scenario documents used
across multiple test files, reducing duplication and ensuring consistent
test data.
"""

import json
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from src.sqc_smoother.model import (
    ForwardDiscreteSystem,
    NonlinearMap,
    ReverseDiscreteSystem,
    SqcParams,
)

# =============================================================================
# Scalar Systems
# =============================================================================


@pytest.fixture
def scalar_reverse_system() -> ReverseDiscreteSystem:
    """x_s = 0.9 x_{s+1} - w_s, y = x, no uncertainty output."""
    return ReverseDiscreteSystem(
        a=NonlinearMap.affine([[0.9]], name="a"),
        g=NonlinearMap.zero(1),
        c=NonlinearMap.affine([[1.0]], name="c"),
        D=[[1.0]],
    )


@pytest.fixture
def scalar_forward_system() -> ForwardDiscreteSystem:
    """x_{s+1} = x_s + w_s, y = x, no uncertainty output."""
    return ForwardDiscreteSystem(
        alpha=NonlinearMap.affine([[1.0]], name="alpha"),
        kappa=NonlinearMap.zero(1),
        xi=NonlinearMap.affine([[1.0]], name="xi"),
        Dbar=[[1.0]],
    )


@pytest.fixture
def unit_sqc() -> SqcParams:
    """N = Q = R = 1, d = 1, x_bar_0 = 0."""
    return SqcParams(N=[[1.0]], Q=[[1.0]], R=[[1.0]], d=1.0, x_bar_0=[0.0])


# =============================================================================
# Random Affine Instances
# =============================================================================


def _spd(rng: np.random.Generator, n: int, floor: float = 0.5) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m @ m.T / n + floor * np.eye(n)


@pytest.fixture
def random_affine_instance() -> Callable[..., dict]:
    """Factory for seeded affine instances sharing one forward-time model.

    Returns a dict with matching forward-time and reverse-time systems
    (the latter the exact inverse of the former), SQC weights, and
    measurements of length t.
    """

    def build(seed: int, n: int = 1, t: int = 20, uncertainty: float = 0.0) -> dict:
        rng = np.random.default_rng(seed)
        F = np.eye(n) + 0.2 * rng.standard_normal((n, n))
        f = 0.1 * rng.standard_normal(n)
        Dbar = 0.5 * rng.standard_normal((n, n)) + np.eye(n)
        C = rng.standard_normal((1, n)) if n > 1 else np.array([[1.0]])
        G = uncertainty * np.eye(n)
        F_inv = np.linalg.inv(F)

        forward = ForwardDiscreteSystem(
            alpha=NonlinearMap.affine(F, f, name="alpha"),
            kappa=NonlinearMap.affine(G, name="kappa"),
            xi=NonlinearMap.affine(C, name="xi"),
            Dbar=Dbar,
        )
        reverse = ReverseDiscreteSystem(
            a=NonlinearMap.affine(F_inv, -F_inv @ f, name="a"),
            g=NonlinearMap.affine(G, name="g"),
            c=NonlinearMap.affine(C, name="c"),
            D=F_inv @ Dbar,
        )
        sqc = SqcParams(
            N=_spd(rng, n),
            Q=_spd(rng, n),
            R=[[1.0 + rng.uniform()]],
            d=1.0,
            x_bar_0=rng.standard_normal(n),
        )
        measurements = rng.standard_normal((t, 1))
        return {
            "forward": forward,
            "reverse": reverse,
            "sqc": sqc,
            "measurements": measurements,
            "F": F,
            "C": C,
        }

    return build


# =============================================================================
# Scenario Fixtures
# =============================================================================


@pytest.fixture
def linear_scenario_data() -> dict:
    """Small linear_scalar scenario document."""
    return {
        "model_id": "linear_scalar",
        "model_params": {"a": -0.5},
        "horizon_t": 10,
        "smooth_at_k": 5,
        "delta": 0.1,
        "sqc": {"N": 1.0, "Q": 1.0, "R": 1.0, "d": 1.0},
        "noise": {"target_fraction": 0.8, "seed": 42},
        "runs": 3,
    }


@pytest.fixture
def pendulum_scenario_data() -> dict:
    """Small pendulum scenario document."""
    return {
        "model_id": "pendulum",
        "horizon_t": 20,
        "smooth_at_k": 10,
        "delta": 0.05,
        "sqc": {
            "N": [[10.0, 0.0], [0.0, 10.0]],
            "Q": 1.0,
            "R": 10.0,
            "d": 1.0,
        },
        "noise": {"target_fraction": 0.2, "seed": 5},
        "runs": 2,
    }


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[[dict | str, str], Path]:
    """Write a scenario document (dict or raw text) to a temporary file."""

    def write(document: dict | str, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        text = document if isinstance(document, str) else json.dumps(document)
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def scenario_file(write_scenario, linear_scenario_data: dict) -> Path:
    """Valid linear scenario file on disk."""
    return write_scenario(linear_scenario_data)
