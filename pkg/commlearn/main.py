"""Main entry point for the commlearn CLI."""

from __future__ import annotations

import argparse
import sys

from ._version import __version__
from .config import COLORS, DATASETS, METHODS, PRESET_NAMES, configure_logging, console
from .errors import CommLearnError

GEN_KINDS = ("separable", "circle", "voting-killer", "indexing-interval", "indexing-rect")
SUITE_CHOICES = ("all", "halving", "nesting", "maxmargin", "agreement", "exact", "indexing", "reservoir")
EXPERIMENTS = ("grid", "lowerbound", "indexing")


def _bits(value: str) -> str:
    if not value or set(value) - {"0", "1"}:
        msg = f"bits must be a string of 0s and 1s, got {value!r}"
        raise argparse.ArgumentTypeError(msg)
    return value


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="commlearn",
        description="commlearn - communication-bounded learning on partitioned data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        add_help=False,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"commlearn {__version__}",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")

    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    subparsers.add_parser("help", help="Show help information", parents=[common])

    # gen
    gen_parser = subparsers.add_parser("gen", help="Write a generated instance as CSV", parents=[common])
    gen_parser.add_argument("--kind", required=True, choices=GEN_KINDS, help="Instance family to generate")
    gen_parser.add_argument("--seed", type=int, default=None, help="Seed (default: COMMLEARN_SEED, else 0)")
    gen_parser.add_argument("--epsilon", type=float, default=None, help="Error target for the circle construction")
    gen_parser.add_argument("--n-per-class", type=int, default=None, help="Points per class (per party for voting-killer)")
    gen_parser.add_argument("--dim", type=int, default=2, help="Dimension (default: 2)")
    gen_parser.add_argument("--k", type=int, default=2, help="Parties for voting-killer (default: 2)")
    gen_parser.add_argument("--margin", type=float, default=1.0, help="Class separation (default: 1.0)")
    gen_parser.add_argument("--multiplicity", type=int, default=1, help="Copies of each circle pair (default: 1)")
    gen_parser.add_argument("--n", type=int, default=None, help="Indexing length")
    gen_parser.add_argument("--index", type=int, default=None, help="Index held by B (0-based)")
    gen_parser.add_argument("--bits", type=_bits, default=None, help="A's bits, e.g. 0110")
    gen_parser.add_argument("--out", default=None, help="Output directory (default: COMMLEARN_OUT)")

    # run
    run_parser = subparsers.add_parser("run", help="Run an experiment grid or demonstration", parents=[common])
    run_parser.add_argument("--preset", choices=PRESET_NAMES, default=None, help="Named experiment preset")
    run_parser.add_argument("--config", default=None, help="YAML file of settings")
    run_parser.add_argument("--experiment", choices=EXPERIMENTS, default=None, help="Experiment kind (default: grid)")
    run_parser.add_argument("--method", choices=METHODS, default=None, help="Run a single method")
    run_parser.add_argument("--dataset", choices=DATASETS, default=None, help="Run a single dataset")
    run_parser.add_argument("--seed", type=int, default=None, help="Single seed")
    run_parser.add_argument("--seeds", type=int, nargs="+", default=None, help="Several seeds")
    run_parser.add_argument("--epsilon", type=float, default=None, help="Error target")
    run_parser.add_argument("--k", type=int, default=None, help="Number of parties")
    run_parser.add_argument("--dim", type=int, default=None, help="Dimension")
    run_parser.add_argument("--n-per-class", type=int, default=None, help="Points per class per party")
    run_parser.add_argument("--support", choices=("maxmarg", "median"), default=None, help="Two-way support function")
    run_parser.add_argument("--trials", type=int, default=None, help="Trials per budget for demonstrations")
    run_parser.add_argument("--jobs", type=int, default=None, help="Worker processes (default: COMMLEARN_JOBS)")
    run_parser.add_argument("--out", default=None, help="Output directory (default: COMMLEARN_OUT)")
    run_parser.add_argument("--transcript", default=None, help="Directory for JSON-lines transcripts")

    # verify
    verify_parser = subparsers.add_parser("verify", help="Run seeded property suites", parents=[common])
    verify_parser.add_argument("--suite", choices=SUITE_CHOICES, default="all", help="Suite to run (default: all)")
    verify_parser.add_argument("--trials", type=int, default=50, help="Trials per suite (default: 50)")
    verify_parser.add_argument("--seed", type=int, default=None, help="Seed (default: COMMLEARN_SEED, else 0)")
    verify_parser.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser.parse_args(argv)


def cli_main(argv: list[str] | None = None) -> None:
    """Entry point for console script."""
    try:
        args = parse_args(argv)
        configure_logging(getattr(args, "verbose", 0))

        from .command_handlers.registry import registry

        code = registry.execute_command(args.command, args) if args.command else None
        if code is None:
            from .ui import show_help

            show_help()
            code = 0
    except KeyboardInterrupt:
        console.print(f"\n[{COLORS['dim']}]Interrupted[/]")
        sys.exit(130)
    except (CommLearnError, ValueError) as e:
        console.print(f"[bold {COLORS['fail']}]Error:[/] {e}")
        sys.exit(1)

    sys.exit(code)


if __name__ == "__main__":
    cli_main()
