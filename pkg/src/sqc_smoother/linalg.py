"""Dense small-matrix helpers shared by the filters.

Inputs are coerced to float64 numpy arrays with explicit shape checks so that
dimension errors surface as InvalidArgumentError at the call site instead of
as broadcasting surprises deep inside a recursion.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as linalg

from .constants import PINV_RTOL, SYMMETRY_TOL
from .exceptions import InvalidArgumentError

ArrayLike = np.ndarray | Sequence[float] | float


def as_vector(value: ArrayLike, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce a scalar or sequence to a 1-D float array.

    Args:
        value: Scalar, sequence, or array
        dim: Required length, or None to accept any length
        name: Name used in error messages

    Returns:
        1-D float64 array (a copy)

    Raises:
        InvalidArgumentError: If the value is not 1-D or has the wrong length
    """
    arr = np.atleast_1d(np.array(value, dtype=float))
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidArgumentError(
            f"{name} must have length {dim}, got {arr.shape[0]}"
        )
    return arr


def as_matrix(
    value: ArrayLike, shape: tuple[int, int] | None = None, name: str = "matrix"
) -> np.ndarray:
    """Coerce a scalar or nested sequence to a 2-D float array.

    A bare scalar becomes a 1x1 matrix.

    Raises:
        InvalidArgumentError: If the value is not 2-D or has the wrong shape
    """
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise InvalidArgumentError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M^T) / 2."""
    return 0.5 * (m + m.T)


def is_symmetric(m: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    """Check symmetry relative to the largest entry."""
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.T), initial=0.0) <= tol * scale)


def is_positive_definite(m: np.ndarray) -> bool:
    """Check positive definiteness with a Cholesky attempt."""
    try:
        linalg.cholesky(symmetrize(m), lower=True)
    except linalg.LinAlgError:
        return False
    return True


def require_spd(m: np.ndarray, name: str) -> np.ndarray:
    """Validate that a matrix is symmetric positive-definite.

    Returns:
        The symmetrized matrix

    Raises:
        InvalidArgumentError: If the matrix is not square, symmetric, or
            positive-definite
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {m.shape}")
    if not is_symmetric(m):
        raise InvalidArgumentError(f"{name} must be symmetric")
    if not is_positive_definite(m):
        raise InvalidArgumentError(f"{name} must be positive-definite")
    return symmetrize(m)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of M."""
    if m.size == 0:
        return 0.0
    return float(linalg.eigvalsh(symmetrize(m))[0])


def pinv(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with singular values below
    PINV_RTOL times the largest one treated as zero."""
    return linalg.pinv(m, atol=0.0, rtol=PINV_RTOL)


def is_numerically_singular(m: np.ndarray) -> bool:
    """True when the smallest singular value falls under the pinv threshold."""
    s = linalg.svdvals(m)
    if s.size == 0 or s[0] == 0.0:
        return True
    return bool(s[-1] <= PINV_RTOL * s[0])


def inverse_or_pinv(m: np.ndarray) -> tuple[np.ndarray, bool]:
    """Invert a symmetric matrix, falling back to the pseudo-inverse.

    The true inverse is used when M is positive-definite.

    Returns:
        (inverse, used_pinv)
    """
    sym = symmetrize(m)
    try:
        factor = linalg.cho_factor(sym, lower=True)
    except linalg.LinAlgError:
        return symmetrize(pinv(sym)), True
    return symmetrize(linalg.cho_solve(factor, np.eye(sym.shape[0]))), False


def solve_or_pinv(m: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve M x = rhs, using the pseudo-inverse when M is numerically singular.

    Returns:
        (solution, used_pinv)
    """
    if is_numerically_singular(m):
        return pinv(m) @ rhs, True
    return linalg.solve(m, rhs), False


def weighted_sq_norm(v: np.ndarray, w: np.ndarray) -> float:
    """||v||_W^2 = v^T W v."""
    return float(v @ w @ v)


@dataclass(frozen=True)
class StageQuadratic:
    """Quadratic e^T P e - 2 e^T drive + constant in a displacement e.

    Produced by linearizing one dynamic-programming stage about a point; both
    filters read their Riccati matrix, center update and level shift off it.
    """

    hessian: np.ndarray
    drive: np.ndarray
    constant: float

    def value(self, e: np.ndarray) -> float:
        return float(e @ self.hessian @ e - 2.0 * e @ self.drive + self.constant)

    def minimizer(self) -> tuple[np.ndarray, bool]:
        """Stationary displacement P^# drive and whether pinv was needed."""
        return solve_or_pinv(self.hessian, self.drive)


def linearized_stage(
    weight: np.ndarray,
    dynamics_jacobian: np.ndarray,
    dynamics_residual: np.ndarray,
    level: float,
    measurement_jacobian: np.ndarray | None = None,
    measurement_weight: np.ndarray | None = None,
    innovation: np.ndarray | None = None,
    uncertainty_jacobian: np.ndarray | None = None,
    uncertainty_value: np.ndarray | None = None,
    hessian_measurement_weight: np.ndarray | None = None,
) -> StageQuadratic:
    """Expand one linearized stage cost as a quadratic in the displacement e.

    The stage is

        ||r + A e||_W^2 + ||nu - C e||_R^2 - |g + G e|^2 + level

    where r is the dynamics residual at the linearization point, nu the
    measurement innovation and g the uncertainty output. Output terms are
    omitted when ``measurement_jacobian`` is None.

    ``hessian_measurement_weight`` replaces R in the C^T R C block only; it
    exists for the sigma-output forward Riccati variant.
    """
    a = dynamics_jacobian
    hessian = a.T @ weight @ a
    drive = -a.T @ weight @ dynamics_residual
    constant = weighted_sq_norm(dynamics_residual, weight) + level

    if measurement_jacobian is not None:
        c = measurement_jacobian
        g = uncertainty_jacobian
        m_weight = (
            measurement_weight
            if hessian_measurement_weight is None
            else hessian_measurement_weight
        )
        hessian = hessian + c.T @ m_weight @ c - g.T @ g
        drive = drive + c.T @ measurement_weight @ innovation + g.T @ uncertainty_value
        constant += weighted_sq_norm(innovation, measurement_weight) - float(
            uncertainty_value @ uncertainty_value
        )

    return StageQuadratic(hessian=symmetrize(hessian), drive=drive, constant=constant)


def read_only(value: ArrayLike) -> np.ndarray:
    """Float64 copy with the writeable flag cleared."""
    arr = np.array(value, dtype=float)
    arr.flags.writeable = False
    return arr
