"""System models, SQC weights, trajectories and cost evaluators.

Conventions used across the package:

- A trajectory over horizon t has states x_0..x_t, process noise w_0..w_{t-1}
  and one measurement per stage: y_s = c(x_{s+1}) + v_s for s = 0..t-1.
- The uncertainty output of stage s is z_s = g(x_{s+1}).
- Stage s of the SQC is ||w_s||^2_{Q_s} + ||v_s||^2_{R_s} - |z_s|^2.
- S1(k) is the initial-state term plus stages 0..k-1 and S2(k, t) is stages
  k..t-1, so S1 + S2 equals the full SQC exactly.

Time-varying matrices are stored either as a single matrix (broadcast to every
step) or as a stack indexed by step; indices past the end of a stack reuse the
last entry.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .constants import FD_MIN_STEP, FD_REL_STEP
from .exceptions import InvalidArgumentError
from .linalg import (
    ArrayLike,
    as_matrix,
    as_vector,
    read_only,
    require_spd,
    weighted_sq_norm,
)

VectorMap = Callable[[np.ndarray], ArrayLike]


def finite_difference_jacobian(
    func: Callable[[np.ndarray], np.ndarray], point: np.ndarray
) -> np.ndarray:
    """Central-difference Jacobian with step max(1e-6, 1e-6 * |x_i|) per coordinate."""
    x = np.asarray(point, dtype=float)
    columns = []
    for i in range(x.shape[0]):
        h = max(FD_MIN_STEP, FD_REL_STEP * abs(x[i]))
        step = np.zeros_like(x)
        step[i] = h
        columns.append((func(x + step) - func(x - step)) / (2.0 * h))
    return np.column_stack(columns)


@dataclass(frozen=True)
class NonlinearMap:
    """A smooth map R^dimension_in -> R^dimension_out with its Jacobian.

    Attributes:
        dimension_in: Input dimension
        dimension_out: Output dimension
        func: The map itself
        jac: Analytic Jacobian, or None to use central finite differences
        is_affine: True when the map is known to be affine (oracle gate)
        name: Label used in error messages
    """

    dimension_in: int
    dimension_out: int
    func: VectorMap
    jac: Callable[[np.ndarray], ArrayLike] | None = None
    is_affine: bool = False
    name: str = "map"

    def __post_init__(self) -> None:
        if self.dimension_in < 1 or self.dimension_out < 1:
            raise InvalidArgumentError(
                f"{self.name}: dimensions must be positive, got "
                f"{self.dimension_in} -> {self.dimension_out}"
            )

    @classmethod
    def affine(
        cls, matrix: ArrayLike, offset: ArrayLike | None = None, name: str = "affine"
    ) -> "NonlinearMap":
        """Build x -> M x + b with its exact Jacobian."""
        m = read_only(as_matrix(matrix, name=name))
        b = read_only(
            np.zeros(m.shape[0]) if offset is None else as_vector(offset, m.shape[0], name)
        )
        return cls(
            dimension_in=m.shape[1],
            dimension_out=m.shape[0],
            func=lambda x: m @ x + b,
            jac=lambda x: m,
            is_affine=True,
            name=name,
        )

    @classmethod
    def zero(cls, dimension_in: int, dimension_out: int = 1, name: str = "zero") -> "NonlinearMap":
        """The identically-zero map."""
        return cls.affine(np.zeros((dimension_out, dimension_in)), name=name)

    def eval(self, x: ArrayLike) -> np.ndarray:
        point = as_vector(x, self.dimension_in, f"{self.name} input")
        return as_vector(self.func(point), self.dimension_out, f"{self.name} output")

    def jacobian(self, x: ArrayLike) -> np.ndarray:
        point = as_vector(x, self.dimension_in, f"{self.name} input")
        if self.jac is None:
            return finite_difference_jacobian(self.eval, point)
        return as_matrix(
            self.jac(point),
            (self.dimension_out, self.dimension_in),
            f"{self.name} jacobian",
        )

    def with_finite_differences(self) -> "NonlinearMap":
        """Same map with the Jacobian replaced by central differences."""
        return NonlinearMap(
            self.dimension_in, self.dimension_out, self.func, None, self.is_affine, self.name
        )

    def scaled(self, factor: float) -> "NonlinearMap":
        """x -> factor * f(x)."""
        func, jac_map = self.func, self
        return NonlinearMap(
            dimension_in=self.dimension_in,
            dimension_out=self.dimension_out,
            func=lambda x: factor * np.asarray(func(x), dtype=float),
            jac=lambda x: factor * jac_map.jacobian(x),
            is_affine=self.is_affine,
            name=self.name,
        )


def linearize(nonlinear_map: NonlinearMap, point: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """First-order expansion data (f(x0), J(x0)) of a map about a point.

    Raises:
        InvalidArgumentError: If the point has the wrong dimension
    """
    return nonlinear_map.eval(point), nonlinear_map.jacobian(point)


def _step_stack(value: ArrayLike, rows: int | None, name: str) -> np.ndarray:
    """Coerce a constant matrix or a per-step sequence of matrices to a frozen array."""
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim not in (2, 3):
        raise InvalidArgumentError(
            f"{name} must be a matrix or a sequence of matrices, got shape {arr.shape}"
        )
    if arr.ndim == 3 and arr.shape[0] == 0:
        raise InvalidArgumentError(f"{name} sequence must not be empty")
    if rows is not None and arr.shape[-2] != rows:
        raise InvalidArgumentError(
            f"{name} must have {rows} rows at every step, got {arr.shape[-2]}"
        )
    return read_only(arr)


def _at(stack: np.ndarray, step: int, name: str) -> np.ndarray:
    if step < 0:
        raise InvalidArgumentError(f"{name} step index must be nonnegative, got {step}")
    if stack.ndim == 2:
        return stack
    return stack[min(step, stack.shape[0] - 1)]


def _check_system_maps(
    transition: NonlinearMap, uncertainty: NonlinearMap, measurement: NonlinearMap
) -> int:
    n = transition.dimension_in
    if transition.dimension_out != n:
        raise InvalidArgumentError(
            f"{transition.name} must map R^{n} to R^{n}, got R^{transition.dimension_out}"
        )
    for m in (uncertainty, measurement):
        if m.dimension_in != n:
            raise InvalidArgumentError(
                f"{m.name} must take the state dimension {n}, got {m.dimension_in}"
            )
    return n


@dataclass(frozen=True)
class ReverseDiscreteSystem:
    """Reverse-time discrete system used by the forward filter.

        x_t = a_t(x_{t+1}) - D_t w_t,  z_t = g_t(x_{t+1}),  y_t = c_t(x_{t+1}) + v
    """

    a: NonlinearMap
    g: NonlinearMap
    c: NonlinearMap
    D: np.ndarray

    def __post_init__(self) -> None:
        n = _check_system_maps(self.a, self.g, self.c)
        object.__setattr__(self, "D", _step_stack(self.D, n, "D"))

    @property
    def n(self) -> int:
        return self.a.dimension_in

    @property
    def p(self) -> int:
        return self.D.shape[-1]

    @property
    def q(self) -> int:
        return self.g.dimension_out

    @property
    def l(self) -> int:
        return self.c.dimension_out

    @property
    def is_affine(self) -> bool:
        return self.a.is_affine and self.g.is_affine and self.c.is_affine

    def D_at(self, step: int) -> np.ndarray:
        return _at(self.D, step, "D")


@dataclass(frozen=True)
class ForwardDiscreteSystem:
    """Forward-time discrete system used by the reverse filter and the simulator.

        x_{t+1} = alpha_t(x_t) + Dbar_t w_t,  z = kappa_t(x),  y = xi_t(x) + v
    """

    alpha: NonlinearMap
    kappa: NonlinearMap
    xi: NonlinearMap
    Dbar: np.ndarray

    def __post_init__(self) -> None:
        n = _check_system_maps(self.alpha, self.kappa, self.xi)
        object.__setattr__(self, "Dbar", _step_stack(self.Dbar, n, "Dbar"))

    @property
    def n(self) -> int:
        return self.alpha.dimension_in

    @property
    def p(self) -> int:
        return self.Dbar.shape[-1]

    @property
    def q(self) -> int:
        return self.kappa.dimension_out

    @property
    def l(self) -> int:
        return self.xi.dimension_out

    @property
    def is_affine(self) -> bool:
        return self.alpha.is_affine and self.kappa.is_affine and self.xi.is_affine

    def Dbar_at(self, step: int) -> np.ndarray:
        return _at(self.Dbar, step, "Dbar")


@dataclass(frozen=True)
class SqcParams:
    """Sum-quadratic-constraint weights.

    Attributes:
        N: Initial-state weight (n x n, SPD)
        Q: Process-uncertainty weight, constant (p x p) or per stage (T x p x p)
        R: Measurement-uncertainty weight, constant (l x l) or per stage
        d: Constraint level, positive
        x_bar_0: Nominal initial state
    """

    N: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    d: float
    x_bar_0: np.ndarray

    def __post_init__(self) -> None:
        n_mat = require_spd(as_matrix(self.N, name="N"), "N")
        q_stack = _step_stack(self.Q, None, "Q")
        r_stack = _step_stack(self.R, None, "R")
        for name, stack in (("Q", q_stack), ("R", r_stack)):
            for i, m in enumerate(stack.reshape(-1, *stack.shape[-2:])):
                label = name if stack.ndim == 2 else f"{name}[{i}]"
                require_spd(m, label)
        if not float(self.d) > 0.0:
            raise InvalidArgumentError(f"d must be positive, got {self.d}")
        object.__setattr__(self, "N", read_only(n_mat))
        object.__setattr__(self, "Q", q_stack)
        object.__setattr__(self, "R", r_stack)
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(
            self, "x_bar_0", read_only(as_vector(self.x_bar_0, n_mat.shape[0], "x_bar_0"))
        )

    @property
    def n(self) -> int:
        return self.N.shape[0]

    @property
    def p(self) -> int:
        return self.Q.shape[-1]

    @property
    def l(self) -> int:
        return self.R.shape[-1]

    def Q_at(self, step: int) -> np.ndarray:
        return _at(self.Q, step, "Q")

    def R_at(self, step: int) -> np.ndarray:
        return _at(self.R, step, "R")


@dataclass(frozen=True)
class Trajectory:
    """States, noise and measurements of one realization over horizon t.

    Attributes:
        states: x_0..x_t, shape (t+1, n)
        process_noise: w_0..w_{t-1}, shape (t, p)
        meas_noise: v_0..v_{t-1}, shape (t, l)
        measurements: y_0..y_{t-1} with y_s = c(x_{s+1}) + v_s, shape (t, l)
    """

    states: np.ndarray
    process_noise: np.ndarray
    meas_noise: np.ndarray
    measurements: np.ndarray
    horizon: int = field(init=False)

    def __post_init__(self) -> None:
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        t = states.shape[0] - 1
        if t < 0:
            raise InvalidArgumentError("trajectory needs at least the initial state")
        arrays = {}
        for name in ("process_noise", "meas_noise", "measurements"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.size == 0:
                arr = arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
            elif arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            if arr.shape[0] != t:
                raise InvalidArgumentError(
                    f"{name} must have {t} entries for horizon {t}, got {arr.shape[0]}"
                )
            arrays[name] = arr
        if arrays["meas_noise"].shape != arrays["measurements"].shape:
            raise InvalidArgumentError("meas_noise and measurements must have equal shapes")
        object.__setattr__(self, "states", read_only(states))
        for name, arr in arrays.items():
            object.__setattr__(self, name, read_only(arr))
        object.__setattr__(self, "horizon", t)

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]


def uncertainty_outputs(g: NonlinearMap, trajectory: Trajectory) -> np.ndarray:
    """z_s = g(x_{s+1}) for s = 0..t-1, shape (t, q)."""
    if trajectory.horizon == 0:
        return np.zeros((0, g.dimension_out))
    return np.vstack([g.eval(x) for x in trajectory.states[1:]])


def _check_cost_inputs(
    params: SqcParams, trajectory: Trajectory, z_seq: ArrayLike, stop: int
) -> np.ndarray:
    if stop < 0:
        raise InvalidArgumentError(f"index must be nonnegative, got {stop}")
    if stop > trajectory.horizon:
        raise InvalidArgumentError(
            f"index {stop} exceeds the trajectory horizon {trajectory.horizon}"
        )
    z = np.array(z_seq, dtype=float)
    if z.ndim == 1:
        z = z.reshape(-1, 1)
    if z.size == 0:
        z = z.reshape(0, 1)
    if z.shape[0] < stop:
        raise InvalidArgumentError(f"z_seq must cover {stop} stages, got {z.shape[0]}")
    if trajectory.states.shape[1] != params.n:
        raise InvalidArgumentError(
            f"trajectory state dimension {trajectory.states.shape[1]} != N dimension {params.n}"
        )
    if stop > 0:
        if trajectory.process_noise.shape[1] != params.p:
            raise InvalidArgumentError(
                f"process noise dimension {trajectory.process_noise.shape[1]} != Q dimension {params.p}"
            )
        if trajectory.meas_noise.shape[1] != params.l:
            raise InvalidArgumentError(
                f"measurement noise dimension {trajectory.meas_noise.shape[1]} != R dimension {params.l}"
            )
    return z


def stage_costs(
    params: SqcParams, trajectory: Trajectory, z_seq: ArrayLike, start: int, stop: int
) -> np.ndarray:
    """Per-stage SQC terms ||w_s||^2_{Q_s} + ||v_s||^2_{R_s} - |z_s|^2 for start <= s < stop."""
    if start > stop:
        raise InvalidArgumentError(f"start index {start} exceeds stop index {stop}")
    z = _check_cost_inputs(params, trajectory, z_seq, stop)
    return np.array(
        [
            weighted_sq_norm(trajectory.process_noise[s], params.Q_at(s))
            + weighted_sq_norm(trajectory.meas_noise[s], params.R_at(s))
            - float(z[s] @ z[s])
            for s in range(start, stop)
        ],
        dtype=float,
    )


def initial_cost(params: SqcParams, trajectory: Trajectory) -> float:
    """||x_0 - x_bar_0||^2_N."""
    return weighted_sq_norm(trajectory.x0 - params.x_bar_0, params.N)


def evaluate_sqc(
    params: SqcParams, trajectory: Trajectory, z_seq: ArrayLike, horizon: int
) -> float:
    """Full SQC value over [0, horizon]; admissible when the result is below d."""
    costs = stage_costs(params, trajectory, z_seq, 0, horizon)
    return initial_cost(params, trajectory) + float(np.sum(costs))


def evaluate_s1(params: SqcParams, trajectory: Trajectory, z_seq: ArrayLike, k: int) -> float:
    """Cost over [0, k]: initial-state term plus stages 0..k-1."""
    costs = stage_costs(params, trajectory, z_seq, 0, k)
    return initial_cost(params, trajectory) + float(np.sum(costs))


def evaluate_s2(
    params: SqcParams, trajectory: Trajectory, z_seq: ArrayLike, k: int, t: int
) -> float:
    """Cost over [k, t]: stages k..t-1, never an initial-state term.

    Raises:
        InvalidArgumentError: If k > t
    """
    if k > t:
        raise InvalidArgumentError(f"k must not exceed t, got k={k}, t={t}")
    return float(np.sum(stage_costs(params, trajectory, z_seq, k, t)))


def as_measurement_list(
    measurements: Sequence[ArrayLike | None] | np.ndarray, dim: int, name: str = "y"
) -> list[np.ndarray | None]:
    """Normalize a measurement sequence, keeping None entries as absent outputs."""
    return [
        None if y is None else as_vector(y, dim, f"{name}[{i}]")
        for i, y in enumerate(measurements)
    ]


def propagate(
    system: ForwardDiscreteSystem, x0: ArrayLike, process_noise: np.ndarray
) -> np.ndarray:
    """States x_0..x_t of x_{s+1} = alpha(x_s) + Dbar_s w_s, shape (t+1, n)."""
    w = np.asarray(process_noise, dtype=float).reshape(-1, system.p)
    states = [as_vector(x0, system.n, "x0")]
    for s, w_s in enumerate(w):
        states.append(system.alpha.eval(states[-1]) + system.Dbar_at(s) @ w_s)
    return np.vstack(states)


def realize(
    system: ForwardDiscreteSystem,
    x0: ArrayLike,
    process_noise: np.ndarray,
    meas_noise: np.ndarray,
) -> Trajectory:
    """Propagate the dynamics and form y_s = xi(x_{s+1}) + v_s."""
    states = propagate(system, x0, process_noise)
    v = np.asarray(meas_noise, dtype=float).reshape(-1, system.l)
    measurements = np.array(
        [system.xi.eval(x) + v_s for x, v_s in zip(states[1:], v, strict=True)]
    ).reshape(-1, system.l)
    return Trajectory(
        states=states,
        process_noise=np.asarray(process_noise, dtype=float).reshape(-1, system.p),
        meas_noise=v,
        measurements=measurements,
    )
