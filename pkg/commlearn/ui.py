"""Rich rendering of reports, curves and suite summaries."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

from rich.table import Table

from ._version import __version__
from .config import COLORS, console

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from .harness.runner import Curve, ExperimentReport
    from .harness.suites import SuiteResult


def _table(title: str) -> Table:
    return Table(title=title, show_header=True, header_style=f"bold {COLORS['primary']}")


def _status(ok: bool) -> str:
    return f"[{COLORS['ok']}]pass[/]" if ok else f"[{COLORS['fail']}]FAIL[/]"


def show_report(report: ExperimentReport) -> None:
    """Mean accuracy and point cost per method and dataset."""
    table = _table("Accuracy and communication cost")
    table.add_column("Method", style="bold")
    for name in report.datasets:
        table.add_column(f"{name} Acc", justify="right")
        table.add_column(f"{name} Cost", justify="right", style=COLORS["dim"])
    summary = report.summary()
    for method in report.methods:
        cells = [method]
        for name in report.datasets:
            accuracy, cost, failed = summary.get((method, name), (math.nan, math.nan, 0))
            acc_text = "n/a" if math.isnan(accuracy) else f"{accuracy:.2f}%"
            if failed:
                acc_text += f" [{COLORS['fail']}]({failed} failed)[/]"
            cells += [acc_text, "n/a" if math.isnan(cost) else f"{cost:.0f}"]
        table.add_row(*cells)
    console.print()
    console.print(table)


def show_curve(curve: Curve, title: str) -> None:
    table = _table(title)
    table.add_column("Budget", justify="right")
    table.add_column(curve.value_name.replace("_", " ").capitalize(), justify="right")
    table.add_column("Bound", justify="right", style=COLORS["dim"])
    for point in curve.points:
        table.add_row(str(point.budget), f"{point.mean:.5f}", f"{point.bound:.5f}")
    console.print()
    console.print(table)
    console.print(f"[dim]{curve.trials} trials per budget[/dim]")


def show_suites(results: Sequence[SuiteResult]) -> None:
    table = _table("Verification suites")
    table.add_column("Suite", style="bold")
    table.add_column("Trials", justify="right")
    table.add_column("Checked", justify="right")
    table.add_column("Violations", justify="right")
    table.add_column("Status")
    for result in results:
        table.add_row(result.name, str(result.trials), str(result.records), str(len(result.violations)), _status(result.passed))
    console.print()
    console.print(table)
    for result in results:
        for line in result.violations[:10]:
            console.print(f"  [{COLORS['fail']}]{result.name}[/]: {line}")
        if len(result.violations) > 10:  # noqa: PLR2004
            console.print(f"  [dim]... {len(result.violations) - 10} more in {result.name}[/dim]")


def show_written(paths: Sequence[tuple[Path, int]]) -> None:
    """Files written and their row counts."""
    table = _table("Files written")
    table.add_column("Path", style="bold")
    table.add_column("Rows", justify="right")
    for path, rows in paths:
        table.add_row(str(path), str(rows))
    console.print()
    console.print(table)


def show_problems(problems: Sequence[str]) -> None:
    if not problems:
        console.print(f"[{COLORS['ok']}]All gates met.[/]")
        return
    console.print(f"[{COLORS['fail']}]{len(problems)} gate(s) not met:[/]")
    for line in problems:
        console.print(f"  {line}")


def show_help() -> None:
    """Show help information."""
    console.print()
    console.print(f"commlearn {__version__}", style=f"bold {COLORS['primary']}")
    console.print()

    console.print("[bold]Usage:[/bold]", style=COLORS["primary"])
    console.print("  commlearn gen --kind KIND [OPTIONS]      Write generated datasets as CSV, one file per party")
    console.print("  commlearn run [--preset NAME] [OPTIONS]  Run an experiment grid or a lower-bound demo")
    console.print("  commlearn verify [--suite NAME]          Run seeded property suites")
    console.print("  commlearn help                           Show this help message")
    console.print("  commlearn --version                      Show commlearn version")
    console.print()

    console.print("[bold]Examples:[/bold]", style=COLORS["primary"])
    console.print("  commlearn gen --kind separable --seed 7", style=COLORS["dim"])
    console.print("  commlearn gen --kind circle --epsilon 0.05", style=COLORS["dim"])
    console.print("  commlearn run --preset table2 --jobs 4", style=COLORS["dim"])
    console.print("  commlearn run --method median --epsilon 0.05 --seed 1", style=COLORS["dim"])
    console.print("  commlearn run --preset lowerbound", style=COLORS["dim"])
    console.print("  commlearn verify --suite halving --trials 200", style=COLORS["dim"])
    console.print()

    console.print("[bold]Environment:[/bold]", style=COLORS["primary"])
    console.print("  COMMLEARN_SEED       Seed used when no --seed/--seeds is given", style=COLORS["dim"])
    console.print("  COMMLEARN_JOBS       Default worker processes", style=COLORS["dim"])
    console.print("  COMMLEARN_OUT        Default output directory (results)", style=COLORS["dim"])
    console.print("  COMMLEARN_LOG_LEVEL  Log level without -v (WARNING)", style=COLORS["dim"])
    console.print()
