"""Scenario runner: simulation, Monte Carlo smoothing, oracle checks, export.

Every run draws its own admissible noise from seed XOR run_index, so the
scenario file and seed fully determine every output byte regardless of how
many workers execute the runs.
"""

import csv
import io
import json
import math
import statistics
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from .config import settings
from .constants import (
    MAX_SAMPLE_DIMENSION,
    RECORDS_FILENAME,
    SAMPLES_FILENAME,
    SUMMARY_FILENAME,
)
from .exceptions import ExportError, NumericalError, SmootherError
from .forward_filter import ForwardFilterState
from .linalg import pinv
from .model import Trajectory, evaluate_sqc, realize, uncertainty_outputs
from .oracle import (
    QuadraticFit,
    admissible_noise,
    dp_value_forward,
    dp_value_reverse,
    fit_stencil,
)
from .reverse_filter import ReverseFilterState
from .scenario import Scenario
from .smoother import (
    SmoothedSet,
    contains,
    form_value,
    point_estimate,
    run_smoother,
    split_measurements,
)
from .systems import DiscreteModel
from .utils import console, format_float, print_debug


def run_seed(seed: int, run_index: int) -> int:
    """Per-run generator seed."""
    return seed ^ run_index


def simulate(scenario: Scenario, run_index: int, model: DiscreteModel | None = None) -> Trajectory:
    """Draw admissible noise and propagate the forward-time system.

    With ``noise.zero`` the trajectory follows the nominal dynamics from
    x_bar_0 and the measurements are noise-free.

    Raises:
        NoiseGenerationError: If no admissible realization is found
    """
    model = model or scenario.build()
    sqc, system, t = model.sqc, model.forward, scenario.horizon_t
    if scenario.noise.zero:
        w = np.zeros((t, system.p))
        v = np.zeros((t, system.l))
        x0 = np.array(sqc.x_bar_0)
    else:
        w, v, x0 = admissible_noise(
            sqc,
            system,
            t,
            scenario.noise.target_fraction,
            run_seed(scenario.noise.seed, run_index),
        )
    return realize(system, x0, w, v)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one Monte Carlo run; failed runs carry NaNs and an error."""

    run_index: int
    true_state: np.ndarray
    point_estimate: np.ndarray
    forward_estimate: np.ndarray
    membership: bool
    level: float
    phi: float
    psi: float
    err_smoother: float
    err_forward: float
    is_empty: bool = False
    sqc_value: float = float("nan")
    error: str | None = None
    smoothed_set: SmoothedSet | None = field(default=None, repr=False, compare=False)

    @property
    def failed(self) -> bool:
        return self.error is not None

    @classmethod
    def failure(cls, run_index: int, n: int, error: str) -> "RunRecord":
        nan = np.full(n, np.nan)
        return cls(
            run_index=run_index,
            true_state=nan,
            point_estimate=nan,
            forward_estimate=nan,
            membership=False,
            level=float("nan"),
            phi=float("nan"),
            psi=float("nan"),
            err_smoother=float("nan"),
            err_forward=float("nan"),
            error=error,
        )


def _finite_or_none(value: float | None) -> float | None:
    return value if value is not None and math.isfinite(value) else None


@dataclass
class Summary:
    """Aggregate metrics over a set of runs."""

    runs: int
    completed: int
    failed: int
    membership_count: int
    membership_rate: float | None
    mean_error_smoother: float | None
    median_error_smoother: float | None
    mean_error_forward: float | None
    empty_count: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready mapping; undefined or non-finite metrics become null."""
        return {
            "runs": self.runs,
            "completed": self.completed,
            "failed": self.failed,
            "membership_count": self.membership_count,
            "membership_rate": _finite_or_none(self.membership_rate),
            "mean_error_smoother": _finite_or_none(self.mean_error_smoother),
            "median_error_smoother": _finite_or_none(self.median_error_smoother),
            "mean_error_forward": _finite_or_none(self.mean_error_forward),
            "empty_count": self.empty_count,
            "notes": list(self.notes),
        }


def summarize(records: list[RunRecord]) -> Summary:
    """Membership rate and error statistics over the completed runs."""
    done = [r for r in records if not r.failed]
    smoother_errors = [r.err_smoother for r in done]
    forward_errors = [r.err_forward for r in done]
    members = sum(r.membership for r in done)
    return Summary(
        runs=len(records),
        completed=len(done),
        failed=len(records) - len(done),
        membership_count=members,
        membership_rate=members / len(done) if done else None,
        mean_error_smoother=statistics.fmean(smoother_errors) if done else None,
        median_error_smoother=statistics.median(smoother_errors) if done else None,
        mean_error_forward=statistics.fmean(forward_errors) if done else None,
        empty_count=sum(r.is_empty for r in done),
    )


def smooth_run(scenario: Scenario, model: DiscreteModel, run_index: int) -> RunRecord:
    """Simulate one run and smooth it at smooth_at_k."""
    k, t = scenario.smooth_at_k, scenario.horizon_t
    traj = simulate(scenario, run_index, model)
    report = run_smoother(
        model.reverse,
        model.forward,
        model.sqc,
        traj.measurements,
        k,
        t,
        terminal_anchor=scenario.terminal_anchor,
        measurement_split=scenario.measurement_split,
        riccati_form=settings.riccati_form,
        relinearize_iterations=settings.relinearize_iterations,
    )
    truth = traj.states[k]
    smoothed = report.smoothed_set
    return RunRecord(
        run_index=run_index,
        true_state=truth,
        point_estimate=report.point_estimate,
        forward_estimate=report.forward_estimate,
        membership=contains(smoothed, truth),
        level=smoothed.level,
        phi=report.forward_trace[-1].phi,
        psi=report.reverse_trace[-1].psi,
        err_smoother=float(np.linalg.norm(report.point_estimate - truth)),
        err_forward=float(np.linalg.norm(report.forward_estimate - truth)),
        is_empty=report.is_empty,
        sqc_value=evaluate_sqc(
            model.sqc, traj, uncertainty_outputs(model.forward.kappa, traj), t
        ),
        smoothed_set=smoothed,
    )


def _guarded_run(scenario: Scenario, model: DiscreteModel, run_index: int) -> RunRecord:
    try:
        return smooth_run(scenario, model, run_index)
    except (SmootherError, np.linalg.LinAlgError, ValueError, FloatingPointError) as e:
        print_debug(f"run {run_index} failed: {e}")
        return RunRecord.failure(run_index, model.forward.n, f"{type(e).__name__}: {e}")


def run_scenario(
    scenario: Scenario,
    *,
    workers: int | None = None,
    show_progress: bool = False,
) -> tuple[list[RunRecord], Summary]:
    """Run every Monte Carlo run of a scenario.

    Args:
        scenario: Validated scenario
        workers: Concurrent runs (default: settings.workers)
        show_progress: Render a progress bar on the shared console

    Returns:
        (records ordered by run_index, summary)

    Raises:
        ScenarioError: If the scenario's model cannot be built
    """
    model = scenario.build()
    workers = settings.workers if workers is None else workers
    indices = range(scenario.runs)

    with Progress(
        TextColumn("[bold blue]{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task(scenario.model_id, total=scenario.runs)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_guarded_run, scenario, model, i) for i in indices]
                records = []
                for future in futures:
                    records.append(future.result())
                    progress.advance(task)
        else:
            records = []
            for i in indices:
                records.append(_guarded_run(scenario, model, i))
                progress.advance(task)

    records.sort(key=lambda r: r.run_index)
    summary = summarize(records)
    if summary.failed:
        summary.notes.append(f"{summary.failed} run(s) failed; see the error column")
    return records, summary


@dataclass(frozen=True)
class OracleReport:
    """Agreement between the filters and the dynamic-programming oracle."""

    forward_steps: int
    reverse_steps: int
    max_fit_residual: float
    max_forward_error: float
    max_reverse_error: float

    @property
    def max_error(self) -> float:
        return max(self.max_forward_error, self.max_reverse_error)


def oracle_check(scenario: Scenario, run_index: int = 0) -> OracleReport:
    """Compare filter value functions with the oracle on one simulated run.

    Both passes use the smoother's measurement split and the reverse pass
    starts one index past the horizon. Errors are relative to 1 + |V| at the
    oracle's fit points.

    Raises:
        UnsupportedInstanceError: If the model is not affine
        NumericalError: If a quadratic fit fails to converge
    """
    model = scenario.build()
    k, t = scenario.smooth_at_k, scenario.horizon_t
    traj = simulate(scenario, run_index, model)
    ys: list[np.ndarray | None] = [np.array(y) for y in traj.measurements]
    forward_ys, reverse_ys = split_measurements(ys, k, t, scenario.measurement_split)

    report = run_smoother(
        model.reverse,
        model.forward,
        model.sqc,
        ys,
        k,
        t,
        terminal_anchor=scenario.terminal_anchor,
        measurement_split=scenario.measurement_split,
        riccati_form="derived",
        relinearize_iterations=settings.relinearize_iterations,
    )
    fwd_trace, rev_trace = report.forward_trace, report.reverse_trace
    try:
        fwd_fits = dp_value_forward(model.reverse, model.sqc, forward_ys, k)
        rev_fits = dp_value_reverse(
            model.forward, model.sqc, reverse_ys, k, t + 1, center=rev_trace[0].x_tilde
        )
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"oracle fit failed: {e}") from e

    def worst(pairs: Iterable[tuple[QuadraticFit, ForwardFilterState | ReverseFilterState]]) -> float:
        err = 0.0
        for fit, state in pairs:
            for x in fit_stencil(fit.center, fit.weight if fit.weight.any() else None):
                expected = fit.value(x)
                err = max(err, abs(state.value(x) - expected) / (1.0 + abs(expected)))
        return err

    return OracleReport(
        forward_steps=len(fwd_fits) - 1,
        reverse_steps=len(rev_fits) - 1,
        max_fit_residual=max(f.residual for f in [*fwd_fits, *rev_fits]),
        max_forward_error=worst(zip(fwd_fits, fwd_trace, strict=True)),
        max_reverse_error=worst(zip(rev_fits, rev_trace, strict=True)),
    )


def _vector_columns(prefix: str, n: int) -> list[str]:
    return [f"{prefix}_{i}" for i in range(n)]


def records_header(n: int) -> list[str]:
    """CSV header for state dimension n."""
    return [
        "run_index",
        *_vector_columns("true_k", n),
        *_vector_columns("estimate", n),
        *_vector_columns("forward", n),
        "membership",
        "level",
        "phi",
        "psi",
        "err_smoother",
        "err_forward",
        "is_empty",
        "sqc_value",
        "error",
    ]


def _record_row(record: RunRecord) -> list[str]:
    return [
        str(record.run_index),
        *(format_float(float(x)) for x in record.true_state),
        *(format_float(float(x)) for x in record.point_estimate),
        *(format_float(float(x)) for x in record.forward_estimate),
        "true" if record.membership else "false",
        format_float(record.level),
        format_float(record.phi),
        format_float(record.psi),
        format_float(record.err_smoother),
        format_float(record.err_forward),
        "true" if record.is_empty else "false",
        format_float(record.sqc_value),
        record.error or "",
    ]


def sample_set(smoothed_set: SmoothedSet, points_per_axis: int) -> list[tuple[np.ndarray, float, bool]]:
    """Dense grid over a box around the point estimate.

    The set is (x - c)^T M (x - c) <= level - form(c) with M = Pi + Pi_bar,
    so its extent along axis i is sqrt(reach * (M^-1)_ii). The box is 1.5
    times that; axes without a finite extent get half-width 1.
    """
    center = point_estimate(smoothed_set)
    reach = max(smoothed_set.level - form_value(smoothed_set, center), 0.0)
    spread = np.diag(pinv(smoothed_set.Pi + smoothed_set.Pi_bar))
    half = np.where(spread > 0, 1.5 * np.sqrt(reach * np.clip(spread, 0.0, None)), 1.0)
    half = np.maximum(half, 1e-6)
    axes = [np.linspace(c - h, c + h, points_per_axis) for c, h in zip(center, half, strict=True)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, smoothed_set.n)
    return [(x, form_value(smoothed_set, x), contains(smoothed_set, x)) for x in grid]


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def export(
    records: list[RunRecord],
    summary: Summary,
    fmt: str,
    out_dir: Path,
    *,
    state_dimension: int | None = None,
    scenario: Scenario | None = None,
    grid_points: int | None = None,
) -> list[Path]:
    """Write result files.

    "csv" writes records.csv (plus set_samples.csv for n <= 2), "json" writes
    summary.json, "both" writes all of them. The sampled set is the one of
    the first completed run.

    Args:
        records: Run records ordered by run_index
        summary: Aggregate metrics
        fmt: "csv", "json" or "both"
        out_dir: Output directory, created when missing
        state_dimension: n when records is empty
        scenario: Included in summary.json when given
        grid_points: Points per axis of set_samples.csv

    Returns:
        Paths written

    Raises:
        ExportError: If a file cannot be written
    """
    if fmt not in ("csv", "json", "both"):
        raise ExportError(f"unknown output format {fmt!r}")
    n = state_dimension if state_dimension is not None else (
        records[0].true_state.shape[0] if records else 1
    )
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ExportError(f"cannot create output directory {out_dir}: {e}") from e

    written: list[Path] = []
    if fmt in ("csv", "both"):
        path = out_dir / RECORDS_FILENAME
        _write_text(path, _csv_text(records_header(n), [_record_row(r) for r in records]))
        written.append(path)

        sampled = next((r for r in records if r.smoothed_set is not None), None)
        if n > MAX_SAMPLE_DIMENSION:
            note = f"{SAMPLES_FILENAME} skipped: state dimension {n} exceeds {MAX_SAMPLE_DIMENSION}"
            if note not in summary.notes:
                summary.notes.append(note)
        elif sampled is not None:
            points = grid_points or settings.sample_grid_points
            rows = [
                [*(format_float(float(c)) for c in x), format_float(value), "true" if inside else "false"]
                for x, value, inside in sample_set(sampled.smoothed_set, points)
            ]
            path = out_dir / SAMPLES_FILENAME
            _write_text(path, _csv_text([*_vector_columns("x", n), "form_value", "member"], rows))
            written.append(path)

    if fmt in ("json", "both"):
        document = {"summary": summary.to_dict()}
        if scenario is not None:
            document["scenario"] = scenario.model_dump(mode="json")
        path = out_dir / SUMMARY_FILENAME
        _write_text(path, json.dumps(document, indent=2, allow_nan=False) + "\n")
        written.append(path)
    return written


def read_records(path: Path) -> list[dict[str, str]]:
    """Parse records.csv back into rows of strings keyed by column."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise ExportError(f"cannot read {path}: {e}") from e
