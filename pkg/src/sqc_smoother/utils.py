"""Utility functions for sqc-smoother.

This module provides the shared console and helpers for standardized
messages and number formatting.
"""

import math

from rich.console import Console

from .config import settings
from .constants import FLOAT_FORMAT

console = Console()


def format_float(value: float) -> str:
    """Format a float with 17 significant digits; negative zero prints as 0.

    Args:
        value: Number to format

    Returns:
        String that parses back to exactly the same double

    Example:
        >>> format_float(0.1)
        '0.10000000000000001'
        >>> format_float(float("nan"))
        'nan'
    """
    if math.isnan(value):
        return "nan"
    return format(value + 0.0, FLOAT_FORMAT)


def format_rate(numerator: int, denominator: int) -> str:
    """Format a ratio as 'n/m (pp.p%)'.

    Example:
        >>> format_rate(199, 200)
        '199/200 (99.5%)'
        >>> format_rate(0, 0)
        '0/0'
    """
    if denominator <= 0:
        return f"{numerator}/{denominator}"
    return f"{numerator}/{denominator} ({100.0 * numerator / denominator:.1f}%)"


def print_error(msg: str) -> None:
    """Print a standardized error message.

    Args:
        msg: Error message to display
    """
    console.print(f"[red]❌ Error: {msg}[/red]")


def print_warning(msg: str) -> None:
    """Print a standardized warning message.

    Args:
        msg: Warning message to display
    """
    console.print(f"[yellow]⚠️  {msg}[/yellow]")


def print_success(msg: str) -> None:
    """Print a standardized success message.

    Args:
        msg: Success message to display
    """
    console.print(f"[green]✓ {msg}[/green]")


def print_debug(msg: str) -> None:
    """Print a dimmed message when debug output is enabled."""
    if settings.debug:
        console.print(f"[dim]{msg}[/dim]")
