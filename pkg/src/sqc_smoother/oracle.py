"""Independent references for the filters.

Nothing here calls the filter modules. For affine systems the exact value
functions are carried in information form x^T P x + 2 q^T x + r, minimizing
out one disturbance per stage with a Cholesky solve; quadratics are then
fitted to those values at fit points.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as linalg

from .constants import (
    NOISE_MAX_ATTEMPTS,
    NOISE_MAX_BISECTIONS,
    NOISE_MAX_EXPANSIONS,
    NOISE_REL_TOL,
)
from .exceptions import InvalidArgumentError, NoiseGenerationError, UnsupportedInstanceError
from .linalg import ArrayLike, as_matrix, as_vector, is_positive_definite, read_only
from .model import (
    ForwardDiscreteSystem,
    NonlinearMap,
    ReverseDiscreteSystem,
    SqcParams,
    as_measurement_list,
    evaluate_sqc,
    realize,
    uncertainty_outputs,
)


@dataclass(frozen=True)
class QuadraticFit:
    """V(x) ~ ||x - center||^2_weight + offset, with the max fit error."""

    center: np.ndarray
    weight: np.ndarray
    offset: float
    residual: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", read_only(self.center))
        object.__setattr__(self, "weight", read_only(self.weight))

    def value(self, x: ArrayLike) -> float:
        e = as_vector(x, self.center.shape[0], "x") - self.center
        return float(e @ self.weight @ e) + self.offset


def fit_stencil(center: ArrayLike, weight: ArrayLike | None = None) -> np.ndarray:
    """Fit points around a center, spaced by trace(weight)^(-1/2).

    One dimension gives five points (center, +-h, +-2h). Higher dimensions
    add +-h and +-2h along each axis and h(e_i +- e_j) for every pair, enough
    to over-determine a full quadratic.
    """
    c = as_vector(center, name="center")
    n = c.shape[0]
    h = 1.0
    if weight is not None:
        tr = float(np.trace(as_matrix(weight, (n, n), "weight")))
        if tr > 0.0 and np.isfinite(tr):
            h = tr ** -0.5
    eye = np.eye(n)
    offsets = [np.zeros(n)]
    for i in range(n):
        offsets.extend([h * eye[i], -h * eye[i], 2 * h * eye[i], -2 * h * eye[i]])
    for i in range(n):
        for j in range(i + 1, n):
            offsets.extend([h * (eye[i] + eye[j]), h * (eye[i] - eye[j])])
    return c + np.array(offsets)


def _monomials(u: np.ndarray) -> np.ndarray:
    """Columns u_i u_j (i <= j), u_i, 1 for each row of u."""
    n = u.shape[1]
    cols = [u[:, i] * u[:, j] for i in range(n) for j in range(i, n)]
    cols.extend(u[:, i] for i in range(n))
    cols.append(np.ones(u.shape[0]))
    return np.column_stack(cols)


def fit_quadratic(points: ArrayLike, values: ArrayLike) -> QuadraticFit:
    """Least-squares quadratic through (point, value) pairs.

    Raises:
        InvalidArgumentError: If there are fewer points than coefficients
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = as_vector(values, pts.shape[0], "values")
    n = pts.shape[1]
    n_coef = n * (n + 1) // 2 + n + 1
    if pts.shape[0] < n_coef:
        raise InvalidArgumentError(
            f"need at least {n_coef} fit points for a quadratic in {n} dimensions"
        )
    origin = pts[0]
    u = pts - origin
    coef, *_ = linalg.lstsq(_monomials(u), vals)

    weight = np.zeros((n, n))
    idx = 0
    for i in range(n):
        for j in range(i, n):
            if i == j:
                weight[i, i] = coef[idx]
            else:
                weight[i, j] = weight[j, i] = coef[idx] / 2.0
            idx += 1
    linear = coef[idx : idx + n]
    constant = coef[-1]

    shift = -0.5 * linalg.pinv(weight, atol=0.0, rtol=1e-12) @ linear
    offset = float(shift @ weight @ shift + linear @ shift + constant)
    residual = float(np.max(np.abs(_monomials(u) @ coef - vals)))
    return QuadraticFit(center=origin + shift, weight=weight, offset=offset, residual=residual)


class _ExactValue:
    """V(x) = x^T P x + 2 q^T x + r, carried exactly through the recursion."""

    def __init__(self, P: np.ndarray, q: np.ndarray, r: float):
        self.P = 0.5 * (P + P.T)
        self.q = q
        self.r = r

    @classmethod
    def centered(cls, weight: np.ndarray, center: np.ndarray) -> "_ExactValue":
        """||x - center||^2_weight."""
        return cls(weight, -weight @ center, float(center @ weight @ center))

    def __call__(self, x: np.ndarray) -> float:
        return float(x @ self.P @ x + 2.0 * self.q @ x) + self.r

    def through(
        self, F: np.ndarray, f: np.ndarray, D: np.ndarray, Q: np.ndarray
    ) -> "_ExactValue":
        """x -> min_w ||w||^2_Q + V(F x + f + D w).

        Raises:
            UnsupportedInstanceError: If the minimum over w is unbounded below
        """
        H = Q + D.T @ self.P @ D
        pf_q = self.P @ f + self.q
        K = D.T @ self.P @ F
        k0 = D.T @ pf_q
        unbounded = "value function is unbounded below in the disturbances"
        if not is_positive_definite(H):
            raise UnsupportedInstanceError(unbounded)
        try:
            factor = linalg.cho_factor(0.5 * (H + H.T), lower=True)
        except linalg.LinAlgError as e:
            raise UnsupportedInstanceError(unbounded) from e
        HK = linalg.cho_solve(factor, K)
        Hk0 = linalg.cho_solve(factor, k0)
        return _ExactValue(
            F.T @ self.P @ F - K.T @ HK,
            F.T @ pf_q - K.T @ Hk0,
            float(f @ self.P @ f + 2.0 * self.q @ f) + self.r - float(k0 @ Hk0),
        )

    def observed(
        self,
        y: np.ndarray | None,
        C: np.ndarray,
        c0: np.ndarray,
        R: np.ndarray,
        G: np.ndarray,
        g0: np.ndarray,
    ) -> "_ExactValue":
        """Add ||y - C x - c0||^2_R - |G x + g0|^2; nothing when y is None."""
        if y is None:
            return self
        nu = y - c0
        return _ExactValue(
            self.P + C.T @ R @ C - G.T @ G,
            self.q - C.T @ R @ nu - G.T @ g0,
            self.r + float(nu @ R @ nu) - float(g0 @ g0),
        )


def _affine_parts(
    transition: NonlinearMap, uncertainty: NonlinearMap, measurement: NonlinearMap, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if not (transition.is_affine and uncertainty.is_affine and measurement.is_affine):
        raise UnsupportedInstanceError("the oracle only handles affine systems")
    origin = np.zeros(n)
    return (
        transition.jacobian(origin),
        transition.eval(origin),
        uncertainty.jacobian(origin),
        uncertainty.eval(origin),
        measurement.jacobian(origin),
        measurement.eval(origin),
    )


def _forward_values(
    system: ReverseDiscreteSystem,
    sqc: SqcParams,
    ys: list[np.ndarray | None],
) -> list[_ExactValue]:
    """V_0..V_k; V_{s+1}(x) minimizes out w_s with x_s = F x + f - D_s w_s."""
    F, f, G, g0, C, c0 = _affine_parts(system.a, system.g, system.c, system.n)
    values = [_ExactValue.centered(sqc.N, sqc.x_bar_0)]
    for s, y in enumerate(ys):
        step = values[-1].through(F, f, -system.D_at(s), sqc.Q_at(s))
        values.append(step.observed(y, C, c0, sqc.R_at(s), G, g0))
    return values


def _reverse_values(
    system: ForwardDiscreteSystem,
    sqc: SqcParams,
    ys: list[np.ndarray | None],
    k: int,
    t: int,
) -> list[_ExactValue]:
    """V~_t..V~_k; V~_j(x) minimizes out w_j with x_{j+1} = F x + f + Dbar_j w_j."""
    F, f, G, g0, C, c0 = _affine_parts(system.alpha, system.kappa, system.xi, system.n)
    n = system.n
    values = [_ExactValue(np.zeros((n, n)), np.zeros(n), 0.0)]
    for j in range(t - 1, k - 1, -1):
        step = values[-1].through(F, f, system.Dbar_at(j), sqc.Q_at(j))
        values.append(step.observed(ys[j - k], C, c0, sqc.R_at(max(j - 1, 0)), G, g0))
    return values


def _fit_values(value_of: Callable[[np.ndarray], float], points: np.ndarray) -> QuadraticFit:
    return fit_quadratic(points, [value_of(x) for x in points])


def dp_value_forward(
    system: ReverseDiscreteSystem,
    sqc: SqcParams,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    k: int,
    fit_points: ArrayLike | None = None,
) -> list[QuadraticFit]:
    """Exact forward value functions V_0..V_k of an affine system, fitted.

    Uses the same stage conventions as the forward filter: measurement s
    observes x_{s+1} with weight R_s, and w_s carries Q_s and D_s.

    Args:
        system: Affine reverse-time system
        sqc: SQC weights
        measurements: y_0..y_{k-1}, None entries skipped
        k: Final index
        fit_points: Fixed fit points, or None to build a stencil around
            the previous fit at every step

    Raises:
        UnsupportedInstanceError: If the system is not affine or a value is
            unbounded below
    """
    ys = as_measurement_list(measurements, system.l)
    if len(ys) != k:
        raise InvalidArgumentError(f"expected {k} measurements, got {len(ys)}")
    fixed = None if fit_points is None else np.atleast_2d(np.asarray(fit_points, float))
    fits: list[QuadraticFit] = []
    for value in _forward_values(system, sqc, ys):
        if fixed is not None:
            points = fixed
        elif fits:
            points = fit_stencil(fits[-1].center, fits[-1].weight)
        else:
            points = fit_stencil(sqc.x_bar_0, sqc.N)
        fits.append(_fit_values(value, points))
    return fits


def dp_value_reverse(
    system: ForwardDiscreteSystem,
    sqc: SqcParams,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    k: int,
    t: int,
    fit_points: ArrayLike | None = None,
    center: ArrayLike | None = None,
) -> list[QuadraticFit]:
    """Exact reverse cost-to-go V~_t..V~_k of an affine system, fitted.

    Conventions match the reverse filter: entry i of ``measurements``
    observes x_{k+i} with weight R_{k+i-1}; w_j carries Q_j and Dbar_j.

    Raises:
        UnsupportedInstanceError: If the system is not affine or a value is
            unbounded below
    """
    if k < 0 or k > t:
        raise InvalidArgumentError(f"need 0 <= k <= t, got k={k}, t={t}")
    ys = as_measurement_list(measurements, system.l)
    if len(ys) != t - k:
        raise InvalidArgumentError(f"expected {t - k} measurements, got {len(ys)}")
    fixed = None if fit_points is None else np.atleast_2d(np.asarray(fit_points, float))
    start = np.zeros(system.n) if center is None else as_vector(center, system.n, "center")
    fits: list[QuadraticFit] = []
    for value in _reverse_values(system, sqc, ys, k, t):
        if fixed is not None:
            points = fixed
        elif fits and is_positive_definite(fits[-1].weight):
            points = fit_stencil(fits[-1].center, fits[-1].weight)
        else:
            points = fit_stencil(fits[-1].center if fits else start)
        fits.append(_fit_values(value, points))
    return fits


def information_filter_reference(
    A: ArrayLike,
    C: ArrayLike,
    R: ArrayLike,
    N: ArrayLike,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    x_bar_0: ArrayLike | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Information-form recursion for x_s = A x_{s+1}, y_s = C x_{s+1} + v_s.

        Y_{s+1} = A^T Y_s A + C^T R C,   i_{s+1} = A^T i_s + C^T R y_s

    starting from Y_0 = N and i_0 = N x_bar_0.

    Returns:
        (information matrix, information state) for indices 0..len(measurements)
    """
    a_m = as_matrix(A, name="A")
    n = a_m.shape[0]
    c_m = as_matrix(C, name="C")
    r_m = as_matrix(R, (c_m.shape[0], c_m.shape[0]), "R")
    info = as_matrix(N, (n, n), "N")
    state = info @ (np.zeros(n) if x_bar_0 is None else as_vector(x_bar_0, n, "x_bar_0"))
    out = [(info, state)]
    for y in as_measurement_list(measurements, c_m.shape[0]):
        info = a_m.T @ info @ a_m
        state = a_m.T @ state
        if y is not None:
            info = info + c_m.T @ r_m @ c_m
            state = state + c_m.T @ r_m @ y
        out.append((info, state))
    return out


def _sqc_at_scale(
    sqc: SqcParams,
    system: ForwardDiscreteSystem,
    e0: np.ndarray,
    w: np.ndarray,
    v: np.ndarray,
    scale: float,
) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            traj = realize(system, sqc.x_bar_0 + scale * e0, scale * w, scale * v)
            z = uncertainty_outputs(system.kappa, traj)
            value = evaluate_sqc(sqc, traj, z, traj.horizon)
        except (InvalidArgumentError, OverflowError, FloatingPointError):
            return float("nan")
    return value


def _bisect_scale(
    objective: Callable[[float], float], target: float, tolerance: float
) -> float | None:
    """Scale lam with |objective(lam) - target| <= tolerance, or None."""
    lo, hi = 0.0, 1.0
    f_hi = objective(hi)
    for _ in range(NOISE_MAX_EXPANSIONS):
        if not np.isfinite(f_hi):
            return None
        if abs(f_hi - target) <= tolerance:
            return hi
        if f_hi > target:
            break
        lo, hi = hi, 2.0 * hi
        f_hi = objective(hi)
    else:
        return None

    for _ in range(NOISE_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        f_mid = objective(mid)
        if not np.isfinite(f_mid):
            return None
        if abs(f_mid - target) <= tolerance:
            return mid
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    return None


def admissible_noise(
    sqc: SqcParams,
    system: ForwardDiscreteSystem,
    horizon: int,
    target_fraction: float,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded noise realization whose SQC value is target_fraction * d.

    A Gaussian candidate (w, v, x0 - x_bar_0) is drawn from a PCG64 generator
    and scaled jointly; the scale is found by doubling and bisection. The SQC
    is evaluated along the trajectory the noise induces, so uncertainty
    outputs are included. Draws whose scaled SQC never crosses the target are
    replaced by the next draw from the same stream.

    Returns:
        (w with shape (t, p), v with shape (t, l), x0)

    Raises:
        InvalidArgumentError: If target_fraction is outside (0, 1) or horizon < 0
        NoiseGenerationError: If no draw reaches the target
    """
    if not 0.0 < target_fraction < 1.0:
        raise InvalidArgumentError(
            f"target_fraction must lie in (0, 1), got {target_fraction}"
        )
    if horizon < 0:
        raise InvalidArgumentError(f"horizon must be nonnegative, got {horizon}")
    rng = np.random.Generator(np.random.PCG64(seed))
    target = target_fraction * sqc.d
    tolerance = NOISE_REL_TOL * sqc.d

    for _ in range(NOISE_MAX_ATTEMPTS):
        e0 = rng.standard_normal(system.n)
        w = rng.standard_normal((horizon, system.p))
        v = rng.standard_normal((horizon, system.l))
        scale = _bisect_scale(
            lambda lam, e0=e0, w=w, v=v: _sqc_at_scale(sqc, system, e0, w, v, lam),
            target,
            tolerance,
        )
        if scale is not None:
            return scale * w, scale * v, sqc.x_bar_0 + scale * e0
    raise NoiseGenerationError(
        f"no admissible noise at {target_fraction:g} * d after {NOISE_MAX_ATTEMPTS} draws"
    )
