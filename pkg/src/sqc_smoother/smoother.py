"""Set-valued fixed-point smoother.

At the smoothing index k the forward value V_k and the reverse cost-to-go
V~_k are added. The estimate is the sublevel set

    {x : ||x - x_hat||^2_Pi + ||x - x_tilde||^2_{Pi_bar} <= d - phi_k - psi_k}

together with the minimizer of the quadratic form as a point estimate.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .constants import MEMBERSHIP_SLACK, SYMMETRY_TOL
from .exceptions import InvalidArgumentError
from .forward_filter import ForwardFilterState, run_forward
from .linalg import (
    ArrayLike,
    as_vector,
    is_positive_definite,
    min_eigenvalue,
    read_only,
    solve_or_pinv,
    weighted_sq_norm,
)
from .model import ForwardDiscreteSystem, ReverseDiscreteSystem, SqcParams, as_measurement_list
from .reverse_filter import ReverseFilterState, run_reverse

MEASUREMENT_SPLITS = ("forward", "reverse")


@dataclass(frozen=True)
class SmoothedSet:
    """Sublevel set of the combined quadratic at index step_index."""

    x_hat: np.ndarray
    Pi: np.ndarray
    x_tilde: np.ndarray
    Pi_bar: np.ndarray
    level: float
    step_index: int = 0

    def __post_init__(self) -> None:
        for name in ("x_hat", "Pi", "x_tilde", "Pi_bar"):
            object.__setattr__(self, name, read_only(getattr(self, name)))
        object.__setattr__(self, "level", float(self.level))

    @property
    def n(self) -> int:
        return self.x_hat.shape[0]


@dataclass(frozen=True)
class SmootherReport:
    """Result of one smoother run.

    Attributes:
        smoothed_set: The set estimate at k
        point_estimate: Minimizer of the membership quadratic
        is_empty: True when no state reaches the level
        is_bounded: True when Pi + Pi_bar is positive-definite
        form_minimum: Quadratic form at the point estimate
        forward_trace: Forward states 0..k
        reverse_trace: Reverse states from the start index down to k
    """

    smoothed_set: SmoothedSet
    point_estimate: np.ndarray
    is_empty: bool
    is_bounded: bool
    form_minimum: float
    forward_trace: list[ForwardFilterState] = field(repr=False)
    reverse_trace: list[ReverseFilterState] = field(repr=False)

    @property
    def forward_estimate(self) -> np.ndarray:
        return self.forward_trace[-1].x_hat

    @property
    def pinv_steps(self) -> int:
        """Number of filter steps that fell back to a pseudo-inverse."""
        return sum(s.pinv_fallback for s in self.forward_trace) + sum(
            s.pinv_fallback for s in self.reverse_trace
        )


def combine(fwd: ForwardFilterState, rev: ReverseFilterState, d: float) -> SmoothedSet:
    """Combine both filters at the same index; level = d - phi - psi.

    Raises:
        InvalidArgumentError: If the indices or dimensions differ
    """
    if fwd.step_index != rev.step_index:
        raise InvalidArgumentError(
            f"forward index {fwd.step_index} does not match reverse index {rev.step_index}"
        )
    if fwd.x_hat.shape != rev.x_tilde.shape:
        raise InvalidArgumentError(
            f"state dimensions differ: {fwd.x_hat.shape[0]} vs {rev.x_tilde.shape[0]}"
        )
    return SmoothedSet(
        x_hat=fwd.x_hat,
        Pi=fwd.Pi,
        x_tilde=rev.x_tilde,
        Pi_bar=rev.Pi_bar,
        level=float(d) - fwd.phi - rev.psi,
        step_index=fwd.step_index,
    )


def form_value(smoothed_set: SmoothedSet, x: ArrayLike) -> float:
    """||x - x_hat||^2_Pi + ||x - x_tilde||^2_Pi_bar."""
    point = as_vector(x, smoothed_set.n, "x")
    return weighted_sq_norm(point - smoothed_set.x_hat, smoothed_set.Pi) + weighted_sq_norm(
        point - smoothed_set.x_tilde, smoothed_set.Pi_bar
    )


def contains(smoothed_set: SmoothedSet, x: ArrayLike) -> bool:
    """Membership with an absolute slack of 1e-12 on the level."""
    return form_value(smoothed_set, x) <= smoothed_set.level + MEMBERSHIP_SLACK


def _normal_equations(smoothed_set: SmoothedSet) -> tuple[np.ndarray, np.ndarray]:
    total = smoothed_set.Pi + smoothed_set.Pi_bar
    rhs = smoothed_set.Pi @ smoothed_set.x_hat + smoothed_set.Pi_bar @ smoothed_set.x_tilde
    return total, rhs


def point_estimate(smoothed_set: SmoothedSet) -> np.ndarray:
    """(Pi + Pi_bar)^# (Pi x_hat + Pi_bar x_tilde)."""
    total, rhs = _normal_equations(smoothed_set)
    estimate, _ = solve_or_pinv(total, rhs)
    return estimate


def _emptiness(smoothed_set: SmoothedSet, estimate: np.ndarray) -> tuple[bool, bool, float]:
    """(is_empty, is_bounded, form value at the estimate).

    Empty only when the form is bounded below, which needs Pi + Pi_bar
    positive semidefinite with the linear term in its range.
    """
    total, rhs = _normal_equations(smoothed_set)
    minimum = form_value(smoothed_set, estimate)
    bounded = is_positive_definite(total)
    scale = max(1.0, float(np.max(np.abs(total), initial=0.0)))
    if min_eigenvalue(total) < -SYMMETRY_TOL * scale:
        return False, False, minimum
    consistent = np.linalg.norm(total @ estimate - rhs) <= 1e-8 * max(
        1.0, float(np.linalg.norm(rhs))
    )
    if not consistent:
        return False, bounded, minimum
    return minimum > smoothed_set.level + MEMBERSHIP_SLACK, bounded, minimum


def split_measurements(
    ys: list[np.ndarray | None], k: int, t: int, split: str
) -> tuple[list[np.ndarray | None], list[np.ndarray | None]]:
    """Measurements for the forward pass and the reverse pass.

    Forward gets y_0..y_{k-1}. The reverse pass starts at t+1 and gets one
    entry per state x_k..x_t, the first holding the observation of x_k when
    split is "reverse".
    """
    forward = list(ys[:k])
    reverse: list[np.ndarray | None] = [None] + list(ys[k:t])
    if split == "reverse" and k > 0:
        reverse[0] = forward[-1]
        forward[-1] = None
    return forward, reverse


def run_smoother(
    rt_system: ReverseDiscreteSystem,
    ft_system: ForwardDiscreteSystem,
    sqc: SqcParams,
    measurements: Sequence[ArrayLike | None] | np.ndarray,
    k: int,
    t: int,
    *,
    terminal_anchor: ArrayLike | None = None,
    measurement_split: str = "forward",
    riccati_form: str = "derived",
    relinearize_iterations: int = 0,
) -> SmootherReport:
    """Smooth the state at index k from measurements y_0..y_{t-1}.

    The forward filter runs over [0, k] on ``rt_system``. The reverse filter
    starts at t+1 from (anchor, 0, 0); its first step absorbs the observation
    of x_t and later steps reach back to k, so each observation is used once.
    The anchor defaults to x_hat_t of a forward pass over the whole horizon.

    Args:
        rt_system: Reverse-time system (forward filter)
        ft_system: Forward-time system (reverse filter)
        sqc: SQC weights
        measurements: y_0..y_{t-1}, y_s observing x_{s+1}
        k: Smoothing index
        t: Horizon
        terminal_anchor: Override for the reverse filter's anchor
        measurement_split: "forward" or "reverse" owner of the observation of x_k
        riccati_form: Forward Riccati variant
        relinearize_iterations: Reverse-filter relinearization passes

    Raises:
        InvalidArgumentError: If 0 <= k <= t fails, the measurement count is
            not t, or the split is unknown
    """
    if not 0 <= k <= t:
        raise InvalidArgumentError(f"smoothing index must satisfy 0 <= k <= t, got k={k}, t={t}")
    if measurement_split not in MEASUREMENT_SPLITS:
        raise InvalidArgumentError(
            f"measurement_split must be one of {', '.join(MEASUREMENT_SPLITS)}, "
            f"got {measurement_split!r}"
        )
    if rt_system.n != ft_system.n:
        raise InvalidArgumentError("forward-time and reverse-time systems differ in dimension")
    ys = as_measurement_list(measurements, rt_system.l)
    if len(ys) != t:
        raise InvalidArgumentError(f"expected {t} measurements, got {len(ys)}")

    forward_ys, reverse_ys = split_measurements(ys, k, t, measurement_split)
    forward_trace = run_forward(rt_system, sqc, forward_ys, k, riccati_form=riccati_form)

    if terminal_anchor is None:
        anchor = (
            forward_trace[-1].x_hat
            if k == t and measurement_split == "forward"
            else run_forward(rt_system, sqc, ys, t, riccati_form=riccati_form)[-1].x_hat
        )
    else:
        anchor = as_vector(terminal_anchor, rt_system.n, "terminal_anchor")
    reverse_trace = run_reverse(
        ft_system,
        sqc,
        reverse_ys,
        k,
        t + 1,
        anchor,
        relinearize_iterations=relinearize_iterations,
    )

    smoothed = combine(forward_trace[-1], reverse_trace[-1], sqc.d)
    estimate = point_estimate(smoothed)
    is_empty, is_bounded, minimum = _emptiness(smoothed, estimate)
    return SmootherReport(
        smoothed_set=smoothed,
        point_estimate=estimate,
        is_empty=is_empty,
        is_bounded=is_bounded,
        form_minimum=minimum,
        forward_trace=forward_trace,
        reverse_trace=reverse_trace,
    )
