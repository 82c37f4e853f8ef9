"""Reverse-time filter over [k, t].

Propagates the cost-to-go

    V~_j(x) = ||x - x_tilde_j||^2_{Pi_bar_j} + psi_j

of the forward-time system x_{j+1} = alpha(x_j) + Dbar w_j backward from
(x_bar_t, 0, 0). The step into index j minimizes out w_j (weight Q_j), which
replaces Pi_bar_{j+1} by Omega, and adds the observation of x_j (SQC stage
j-1, weight R_{j-1}) through the linearized output maps. Linearization is
about x_tilde_{j+1}, optionally refined at the new center.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

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
    symmetrize,
    weighted_sq_norm,
)
from .model import ForwardDiscreteSystem, SqcParams, as_measurement_list


@dataclass(frozen=True)
class ReverseFilterState:
    """Cost-to-go parameters (x_tilde, Pi_bar, psi) at index step_index."""

    x_tilde: np.ndarray
    Pi_bar: np.ndarray
    psi: float
    step_index: int
    pinv_fallback: bool = False
    min_eigenvalue: float = float("nan")

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_tilde", read_only(self.x_tilde))
        object.__setattr__(self, "Pi_bar", read_only(self.Pi_bar))
        object.__setattr__(self, "psi", float(self.psi))

    @classmethod
    def terminal(cls, x_bar_t: ArrayLike, t: int) -> "ReverseFilterState":
        """Boundary condition (x_bar_t, 0, 0) at index t."""
        x = as_vector(x_bar_t, name="x_bar_t")
        n = x.shape[0]
        return cls(
            x_tilde=x,
            Pi_bar=np.zeros((n, n)),
            psi=0.0,
            step_index=t,
            min_eigenvalue=0.0,
        )

    def value(self, x: ArrayLike) -> float:
        e = as_vector(x, self.x_tilde.shape[0], "x") - self.x_tilde
        return weighted_sq_norm(e, self.Pi_bar) + self.psi


def _omega(
    Pi_bar_next: np.ndarray, Dbar: np.ndarray, Q: np.ndarray
) -> tuple[np.ndarray, bool]:
    n = Pi_bar_next.shape[0]
    if Pi_bar_next.shape != (n, n):
        raise InvalidArgumentError(f"Pi_bar must be square, got shape {Pi_bar_next.shape}")
    if Dbar.shape[0] != n:
        raise InvalidArgumentError(f"Dbar must have {n} rows, got shape {Dbar.shape}")
    if Q.shape != (Dbar.shape[1], Dbar.shape[1]):
        raise InvalidArgumentError(
            f"Q must be {Dbar.shape[1]}x{Dbar.shape[1]} to match Dbar, got shape {Q.shape}"
        )
    inner_inv, used_pinv = inverse_or_pinv(Dbar.T @ Pi_bar_next @ Dbar + Q)
    gain = Pi_bar_next @ Dbar
    return symmetrize(Pi_bar_next - gain @ inner_inv @ gain.T), used_pinv


def omega(Pi_bar_next: ArrayLike, Dbar: ArrayLike, Q: ArrayLike) -> np.ndarray:
    """Omega = Pi_bar - Pi_bar Dbar (Dbar^T Pi_bar Dbar + Q)^# Dbar^T Pi_bar."""
    result, _ = _omega(
        as_matrix(Pi_bar_next, name="Pi_bar"),
        as_matrix(Dbar, name="Dbar"),
        as_matrix(Q, name="Q"),
    )
    return result


def reverse_optimal_disturbance(
    Pi_bar_next: ArrayLike,
    Dbar: ArrayLike,
    Q: ArrayLike,
    alpha_val: ArrayLike,
    x_tilde_next: ArrayLike,
) -> np.ndarray:
    """w* = (Dbar^T Pi_bar Dbar + Q)^# Dbar^T Pi_bar (x_tilde_next - alpha(x)).

    w* minimizes ||alpha(x) + Dbar w - x_tilde_next||^2_{Pi_bar} + ||w||^2_Q.
    """
    pi_m = as_matrix(Pi_bar_next, name="Pi_bar")
    d_m = as_matrix(Dbar, name="Dbar")
    q_m = as_matrix(Q, name="Q")
    _omega(pi_m, d_m, q_m)
    n = pi_m.shape[0]
    residual = as_vector(x_tilde_next, n, "x_tilde_next") - as_vector(alpha_val, n, "alpha_val")
    inner_inv, _ = inverse_or_pinv(d_m.T @ pi_m @ d_m + q_m)
    return inner_inv @ d_m.T @ pi_m @ residual


def _reverse_stage(
    point: np.ndarray,
    state_next: ReverseFilterState,
    y: np.ndarray | None,
    system: ForwardDiscreteSystem,
    weight: np.ndarray,
    R: np.ndarray,
) -> StageQuadratic:
    """Linearized right side as a quadratic in e = x - point."""
    alpha_val, A = system.alpha.eval(point), system.alpha.jacobian(point)
    residual = alpha_val - state_next.x_tilde
    if y is None:
        return linearized_stage(weight, A, residual, state_next.psi)
    xi_val, C = system.xi.eval(point), system.xi.jacobian(point)
    kappa_val, G = system.kappa.eval(point), system.kappa.jacobian(point)
    return linearized_stage(
        weight,
        A,
        residual,
        state_next.psi,
        measurement_jacobian=C,
        measurement_weight=R,
        innovation=y - xi_val,
        uncertainty_jacobian=G,
        uncertainty_value=kappa_val,
    )


def reverse_step(
    state_next: ReverseFilterState,
    y: ArrayLike | None,
    system: ForwardDiscreteSystem,
    Q: ArrayLike,
    R: ArrayLike,
    *,
    step: int | None = None,
    relinearize_iterations: int = 0,
) -> ReverseFilterState:
    """Step (x_tilde, Pi_bar, psi) from index j+1 back to j.

    With the linearization A, C, G of alpha, xi, kappa at x_tilde_{j+1}:

        Pi_bar_j   = A^T Omega A + C^T R C - G^T G
        x_tilde_j  = x_tilde_{j+1} + Pi_bar_j^# Lambda
        Lambda     = A^T Omega (x_tilde_{j+1} - alpha) + C^T R (y - xi) + G^T kappa

    and psi_j is the linearized right side evaluated at x_tilde_j.
    ``relinearize_iterations`` repeats the step linearized at the newest
    center.

    Args:
        state_next: State at index j+1
        y: Observation of x_j, or None to skip the output terms
        system: Forward-time system
        Q: Weight of w_j
        R: Weight of the observation of x_j
        step: Index j used to pick Dbar (default: state_next index - 1)
        relinearize_iterations: Extra linearization passes

    Raises:
        InvalidArgumentError: On dimension mismatch
        NumericalError: If the update produces non-finite values
    """
    if relinearize_iterations < 0:
        raise InvalidArgumentError(
            f"relinearize_iterations must be nonnegative, got {relinearize_iterations}"
        )
    j = state_next.step_index - 1 if step is None else step
    q_m = as_matrix(Q, name="Q")
    r_m = as_matrix(R, (system.l, system.l), "R")
    y_vec = None if y is None else as_vector(y, system.l, "y")

    omega_m, omega_pinv = _omega(state_next.Pi_bar, system.Dbar_at(max(j, 0)), q_m)

    point = np.array(state_next.x_tilde)
    for _ in range(relinearize_iterations + 1):
        stage = _reverse_stage(point, state_next, y_vec, system, omega_m, r_m)
        displacement, center_pinv = stage.minimizer()
        x_new = point + displacement
        psi_new = stage.value(displacement)
        point = x_new

    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(stage.hessian))):
        raise NumericalError(f"reverse filter diverged at step {j}")

    return ReverseFilterState(
        x_tilde=x_new,
        Pi_bar=stage.hessian,
        psi=psi_new,
        step_index=state_next.step_index - 1,
        pinv_fallback=omega_pinv or center_pinv,
        min_eigenvalue=min_eigenvalue(stage.hessian),
    )


def run_reverse(
    system: ForwardDiscreteSystem,
    sqc: SqcParams,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    k: int,
    t: int,
    x_bar_t: ArrayLike,
    *,
    relinearize_iterations: int = 0,
) -> list[ReverseFilterState]:
    """Run the reverse filter from (x_bar_t, 0, 0) at t back to index k.

    Args:
        system: Forward-time system
        sqc: SQC weights; the step into j uses Q_j, Dbar_j and R_{j-1}
            (R_0 at j = 0)
        measurements: t - k entries, entry i observing x_{k+i}; None entries
            are skipped
        k: Smoothing index
        t: Terminal index
        x_bar_t: Terminal anchor

    Returns:
        States for indices t, t-1, ..., k

    Raises:
        InvalidArgumentError: If k > t, k < 0 or the measurement count is wrong
    """
    if k < 0 or k > t:
        raise InvalidArgumentError(f"need 0 <= k <= t, got k={k}, t={t}")
    ys = as_measurement_list(measurements, system.l)
    if len(ys) != t - k:
        raise InvalidArgumentError(f"expected {t - k} measurements, got {len(ys)}")

    trace = [ReverseFilterState.terminal(as_vector(x_bar_t, system.n, "x_bar_t"), t)]
    for j in range(t - 1, k - 1, -1):
        trace.append(
            reverse_step(
                trace[-1],
                ys[j - k],
                system,
                sqc.Q_at(j),
                sqc.R_at(max(j - 1, 0)),
                step=j,
                relinearize_iterations=relinearize_iterations,
            )
        )
    return trace
