"""CLI entry point for sqc-smoother.

This module provides the command-line interface for running, validating and
oracle-checking smoother scenarios.
"""

from enum import Enum
from pathlib import Path

import typer
from rich.table import Table

from .config import settings
from .constants import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION
from .exceptions import (
    ExportError,
    InvalidArgumentError,
    NumericalError,
    ScenarioError,
    SmootherError,
)
from .harness import Summary, export, oracle_check, run_scenario
from .scenario import Scenario, parse_scenario, scenario_from_dict
from .utils import console, format_float, format_rate, print_error, print_success, print_warning


class OutputFormat(str, Enum):
    """Output format options for the run command."""

    csv = "csv"
    json = "json"
    both = "both"


app = typer.Typer(
    help="SQC Smoother - robust fixed-point smoothing under sum quadratic constraints",
    no_args_is_help=True,
)


def _exit_code(error: SmootherError) -> int:
    """Map package errors to documented exit codes."""
    if isinstance(error, ScenarioError | InvalidArgumentError):
        return EXIT_VALIDATION
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, ExportError):
        return EXIT_IO
    return 1


def _fail(error: SmootherError) -> typer.Exit:
    print_error(str(error))
    if settings.debug:
        console.print_exception()
    return typer.Exit(code=_exit_code(error))


def _load(scenario_path: Path, **overrides: object) -> Scenario:
    """Parse a scenario file and apply CLI overrides with full re-validation."""
    scenario = parse_scenario(scenario_path)
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return scenario
    data = scenario.model_dump()
    if "seed" in updates:
        data["noise"]["seed"] = updates.pop("seed")
    if "format" in updates:
        data["output"]["format"] = updates.pop("format")
    data.update(updates)
    return scenario_from_dict(data)


def _summary_table(summary: Summary) -> Table:
    def metric(value: float | None) -> str:
        return "n/a" if value is None else f"{value:.6g}"

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Metric", style="yellow")
    table.add_column("Value", style="green", justify="right")
    table.add_row("Runs", str(summary.runs))
    table.add_row("Failed", str(summary.failed))
    table.add_row("Membership", format_rate(summary.membership_count, summary.completed))
    table.add_row("Empty sets", str(summary.empty_count))
    table.add_row("Mean error (smoother)", metric(summary.mean_error_smoother))
    table.add_row("Median error (smoother)", metric(summary.median_error_smoother))
    table.add_row("Mean error (forward only)", metric(summary.mean_error_forward))
    return table


@app.command()
def run(
    scenario_path: Path = typer.Option(
        ..., "--scenario", "-s", help="Scenario JSON file"
    ),
    out: Path = typer.Option(Path("results"), "--out", "-o", help="Output directory"),
    fmt: OutputFormat | None = typer.Option(
        None, "--format", "-f", help="Output files: csv, json or both (default: from scenario)"
    ),
    seed: int | None = typer.Option(None, "--seed", min=0, help="Override noise.seed"),
    smooth_at: int | None = typer.Option(None, "--smooth-at", "-k", help="Override smooth_at_k"),
    runs: int | None = typer.Option(None, "--runs", "-n", min=1, help="Override runs"),
    debug: bool = typer.Option(False, "--debug", help="Enable debug mode with verbose output"),
) -> None:
    """
    Run a scenario's Monte Carlo smoothing experiment and write results.

    Examples:
        smoother run --scenario scenarios/linear_scalar.json
        smoother run -s scenarios/pendulum.json --runs 50 --out results/pendulum
        smoother run -s scenarios/linear_2d.json --seed 7 --smooth-at 5 --format csv
    """
    if debug:
        settings.debug = True
        console.print("[yellow]Debug mode enabled[/yellow]")
    try:
        scenario = _load(
            scenario_path,
            seed=seed,
            smooth_at_k=smooth_at,
            runs=runs,
            format=fmt.value if fmt else None,
        )
        console.print(
            f"[bold blue]{scenario.model_id}[/bold blue] "
            f"t={scenario.horizon_t} k={scenario.smooth_at_k} runs={scenario.runs}"
        )
        records, summary = run_scenario(scenario, show_progress=True)
        written = export(
            records,
            summary,
            scenario.output.format,
            out,
            state_dimension=scenario.build().forward.n,
            scenario=scenario,
        )
    except SmootherError as e:
        raise _fail(e)
    except KeyboardInterrupt:
        print_warning("Interrupted by user")
        raise typer.Exit(code=130)
    except typer.Exit:
        raise
    except Exception as e:
        print_error(f"Unexpected error: {e}")
        if settings.debug:
            console.print_exception()
        raise typer.Exit(code=1)

    console.print(_summary_table(summary))
    for note in summary.notes:
        print_warning(note)
    for path in written:
        console.print(f"[dim]wrote {path}[/dim]")
    print_success("Run complete")
    raise typer.Exit(code=EXIT_OK)


@app.command()
def validate(
    scenario_path: Path = typer.Option(..., "--scenario", "-s", help="Scenario JSON file"),
) -> None:
    """Validate a scenario file without running it."""
    try:
        scenario = parse_scenario(scenario_path)
    except SmootherError as e:
        raise _fail(e)
    print_success(
        f"{scenario_path} is valid ({scenario.model_id}, t={scenario.horizon_t}, "
        f"k={scenario.smooth_at_k}, runs={scenario.runs})"
    )


@app.command()
def oracle(
    scenario_path: Path = typer.Option(..., "--scenario", "-s", help="Scenario JSON file"),
    tolerance: float = typer.Option(
        1e-6, "--tolerance", help="Largest acceptable relative value error"
    ),
) -> None:
    """
    Compare the filters with the dynamic-programming oracle on run 0.

    Only affine models are supported.
    """
    try:
        scenario = parse_scenario(scenario_path)
        report = oracle_check(scenario)
    except SmootherError as e:
        raise _fail(e)

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Check", style="yellow")
    table.add_column("Value", style="green", justify="right")
    table.add_row("Forward steps", str(report.forward_steps))
    table.add_row("Reverse steps", str(report.reverse_steps))
    table.add_row("Max fit residual", format_float(report.max_fit_residual))
    table.add_row("Max forward error", format_float(report.max_forward_error))
    table.add_row("Max reverse error", format_float(report.max_reverse_error))
    console.print(table)
    console.print(f"max residual: {format_float(report.max_error)}")

    if report.max_error > tolerance:
        print_error(f"oracle disagreement {report.max_error:.3g} exceeds {tolerance:g}")
        raise typer.Exit(code=EXIT_NUMERICAL)
    print_success("Filters agree with the oracle")


@app.command("config")
def show_config() -> None:
    """Show current configuration."""
    console.print("\n[bold blue]SQC Smoother Configuration[/bold blue]\n")

    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Setting", style="yellow")
    table.add_column("Value", style="green")
    table.add_column("Environment", style="dim")
    table.add_row("Debug", str(settings.debug), "SMOOTHER_DEBUG")
    table.add_row("Riccati form", settings.riccati_form, "SMOOTHER_RICCATI_FORM")
    table.add_row(
        "Relinearize iterations",
        str(settings.relinearize_iterations),
        "SMOOTHER_RELINEARIZE_ITERATIONS",
    )
    table.add_row("Workers", str(settings.workers), "SMOOTHER_WORKERS")
    table.add_row(
        "Sample grid points", str(settings.sample_grid_points), "SMOOTHER_SAMPLE_GRID_POINTS"
    )
    console.print(table)


def main() -> None:
    """Main entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
