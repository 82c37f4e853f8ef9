"""Forward-time filter over [0, k].

Propagates the quadratic value function

    V_k(x) = ||x - x_hat_k||^2_{Pi_k} + phi_k

of the reverse-time system x_s = a(x_{s+1}) - D w_s. One step absorbs SQC
stage s = k: the disturbance w_k is minimized out in closed form, which
replaces Pi by Sigma, and the observation y_k of x_{k+1} enters through the
linearized measurement and uncertainty-output maps.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .constants import RICCATI_FORM_ALIASES, RICCATI_FORMS
from .exceptions import InvalidArgumentError, NumericalError
from .linalg import (
    ArrayLike,
    StageQuadratic,
    as_matrix,
    as_vector,
    inverse_or_pinv,
    linearized_stage,
    min_eigenvalue,
    read_only,
    solve_or_pinv,
    symmetrize,
    weighted_sq_norm,
)
from .model import ReverseDiscreteSystem, SqcParams, as_measurement_list


@dataclass(frozen=True)
class ForwardFilterState:
    """Value-function parameters (x_hat, Pi, phi) at index step_index.

    Attributes:
        x_hat: Center of the quadratic
        Pi: Symmetric weight, possibly indefinite
        phi: Level shift
        step_index: Time index k
        pinv_fallback: True when the step producing this state needed a
            pseudo-inverse
        min_eigenvalue: Smallest eigenvalue of Pi
    """

    x_hat: np.ndarray
    Pi: np.ndarray
    phi: float
    step_index: int
    pinv_fallback: bool = False
    min_eigenvalue: float = float("nan")

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_hat", read_only(self.x_hat))
        object.__setattr__(self, "Pi", read_only(self.Pi))
        object.__setattr__(self, "phi", float(self.phi))

    @classmethod
    def initial(cls, sqc: SqcParams) -> "ForwardFilterState":
        """Boundary condition (x_bar_0, N, 0)."""
        return cls(
            x_hat=np.array(sqc.x_bar_0),
            Pi=np.array(sqc.N),
            phi=0.0,
            step_index=0,
            min_eigenvalue=min_eigenvalue(sqc.N),
        )

    def value(self, x: ArrayLike) -> float:
        """V_k(x) = ||x - x_hat||^2_Pi + phi."""
        e = as_vector(x, self.x_hat.shape[0], "x") - self.x_hat
        return weighted_sq_norm(e, self.Pi) + self.phi


def _check_noise_channel(Pi: np.ndarray, D: np.ndarray, Q: np.ndarray) -> None:
    n = Pi.shape[0]
    if Pi.shape != (n, n):
        raise InvalidArgumentError(f"Pi must be square, got shape {Pi.shape}")
    if D.shape[0] != n:
        raise InvalidArgumentError(f"D must have {n} rows, got shape {D.shape}")
    if Q.shape != (D.shape[1], D.shape[1]):
        raise InvalidArgumentError(
            f"Q must be {D.shape[1]}x{D.shape[1]} to match D, got shape {Q.shape}"
        )


def _sigma(Pi: np.ndarray, D: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, bool]:
    _check_noise_channel(Pi, D, Q)
    inner_inv, used_pinv = inverse_or_pinv(D.T @ Pi @ D + Q)
    gain = Pi @ D
    return symmetrize(Pi - gain @ inner_inv @ gain.T), used_pinv


def sigma(Pi: ArrayLike, D: ArrayLike, Q: ArrayLike) -> np.ndarray:
    """Sigma = Pi - Pi D (D^T Pi D + Q)^# D^T Pi.

    The true inverse is used when D^T Pi D + Q is positive-definite.

    Raises:
        InvalidArgumentError: On shape mismatch
    """
    result, _ = _sigma(as_matrix(Pi, name="Pi"), as_matrix(D, name="D"), as_matrix(Q, name="Q"))
    return result


def optimal_disturbance(
    Pi: ArrayLike, D: ArrayLike, Q: ArrayLike, a_val: ArrayLike, x_hat: ArrayLike
) -> np.ndarray:
    """Completed-square minimizer w* = (D^T Pi D + Q)^# D^T Pi (a(x) - x_hat).

    w* minimizes ||a(x) - D w - x_hat||^2_Pi + ||w||^2_Q.
    """
    pi_m, d_m, q_m = as_matrix(Pi, name="Pi"), as_matrix(D, name="D"), as_matrix(Q, name="Q")
    _check_noise_channel(pi_m, d_m, q_m)
    n = pi_m.shape[0]
    residual = as_vector(a_val, n, "a_val") - as_vector(x_hat, n, "x_hat")
    inner_inv, _ = inverse_or_pinv(d_m.T @ pi_m @ d_m + q_m)
    return inner_inv @ d_m.T @ pi_m @ residual


def _forward_stage(
    state: ForwardFilterState,
    y: np.ndarray | None,
    system: ReverseDiscreteSystem,
    weight: np.ndarray,
    R: np.ndarray,
    sigma_output: bool,
) -> StageQuadratic:
    """Linearize the right side of the recursion about x_hat_k."""
    point = state.x_hat
    a_val, A = system.a.eval(point), system.a.jacobian(point)
    if y is None:
        return linearized_stage(weight, A, a_val - state.x_hat, state.phi)
    c_val, C = system.c.eval(point), system.c.jacobian(point)
    g_val, G = system.g.eval(point), system.g.jacobian(point)
    if sigma_output and system.l != system.n:
        raise InvalidArgumentError(
            "sigma-output Riccati form needs as many outputs as states "
            f"(l={system.l}, n={system.n})"
        )
    return linearized_stage(
        weight,
        A,
        a_val - state.x_hat,
        state.phi,
        measurement_jacobian=C,
        measurement_weight=R,
        innovation=y - c_val,
        uncertainty_jacobian=G,
        uncertainty_value=g_val,
        hessian_measurement_weight=weight if sigma_output else None,
    )


def forward_step(
    state: ForwardFilterState,
    y: ArrayLike | None,
    system: ReverseDiscreteSystem,
    Q: ArrayLike,
    R: ArrayLike,
    *,
    step: int | None = None,
    riccati_form: str = "derived",
) -> ForwardFilterState:
    """Advance (x_hat, Pi, phi) from index k to k+1.

    With the linearization A, C, G of a, c, g at x_hat_k:

        Pi_{k+1}    = A^T Sigma A + C^T R C - G^T G
        x_hat_{k+1} = x_hat_k + Pi_{k+1}^# Xi
        Xi          = A^T Sigma (x_hat_k - a(x_hat_k)) + C^T R (y - c(x_hat_k)) + G^T g(x_hat_k)

    and phi_{k+1} is the linearized right side evaluated at x_hat_{k+1}, so
    V_{k+1} reproduces it exactly whenever the maps are affine.

    ``y=None`` drops the measurement and uncertainty-output terms.
    ``riccati_form="sigma-output"`` (alias "paper-literal") uses C^T Sigma C
    in the Riccati equation and the previous Pi_k in the center update.

    Args:
        state: Filter state at index k
        y: Observation of x_{k+1}, or None
        system: Reverse-time system
        Q: Process weight of stage k
        R: Measurement weight of stage k
        step: Index used to pick D from a time-varying stack (default: state index)
        riccati_form: "derived" or "sigma-output"

    Raises:
        InvalidArgumentError: On dimension mismatch or unknown riccati_form
        NumericalError: If the update produces non-finite values
    """
    riccati_form = RICCATI_FORM_ALIASES.get(riccati_form, riccati_form)
    if riccati_form not in RICCATI_FORMS:
        raise InvalidArgumentError(
            f"riccati_form must be one of {', '.join(RICCATI_FORMS)}, got {riccati_form!r}"
        )
    sigma_output = riccati_form == "sigma-output"
    k = state.step_index if step is None else step
    q_m = as_matrix(Q, name="Q")
    r_m = as_matrix(R, (system.l, system.l), "R")
    y_vec = None if y is None else as_vector(y, system.l, "y")

    sigma_m, sigma_pinv = _sigma(state.Pi, system.D_at(k), q_m)
    stage = _forward_stage(state, y_vec, system, sigma_m, r_m, sigma_output)

    if sigma_output:
        displacement, center_pinv = solve_or_pinv(state.Pi, stage.drive)
    else:
        displacement, center_pinv = stage.minimizer()
    x_next = state.x_hat + displacement
    phi_next = stage.value(displacement)

    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(stage.hessian))):
        raise NumericalError(f"forward filter diverged at step {k + 1}")

    return ForwardFilterState(
        x_hat=x_next,
        Pi=stage.hessian,
        phi=phi_next,
        step_index=state.step_index + 1,
        pinv_fallback=sigma_pinv or center_pinv,
        min_eigenvalue=min_eigenvalue(stage.hessian),
    )


def run_forward(
    system: ReverseDiscreteSystem,
    sqc: SqcParams,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    k: int,
    *,
    riccati_form: str = "derived",
) -> list[ForwardFilterState]:
    """Run the forward filter from (x_bar_0, N, 0) to index k.

    Args:
        system: Reverse-time system
        sqc: SQC weights; stage s uses Q_s, R_s and D_s
        measurements: y_0..y_{k-1}, entry s observing x_{s+1}; None entries
            are skipped
        k: Final index

    Returns:
        States for indices 0..k

    Raises:
        InvalidArgumentError: If k < 0 or the measurement count differs from k
    """
    if k < 0:
        raise InvalidArgumentError(f"k must be nonnegative, got {k}")
    ys = as_measurement_list(measurements, system.l)
    if len(ys) != k:
        raise InvalidArgumentError(f"expected {k} measurements, got {len(ys)}")
    if sqc.n != system.n:
        raise InvalidArgumentError(
            f"N dimension {sqc.n} does not match the state dimension {system.n}"
        )

    trace = [ForwardFilterState.initial(sqc)]
    for s, y in enumerate(ys):
        trace.append(
            forward_step(
                trace[-1], y, system, sqc.Q_at(s), sqc.R_at(s), step=s, riccati_form=riccati_form
            )
        )
    return trace
