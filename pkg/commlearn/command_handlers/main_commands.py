"""Concrete handlers for the gen, run, verify and help commands."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ..config import DEFAULT_EPSILON, DEFAULT_N_PER_CLASS, METHODS, Settings, console, layer_config, load_config_file
from .base import CommandHandler

if TYPE_CHECKING:
    from argparse import Namespace

    from ..hypotheses import Dataset

logger = logging.getLogger(__name__)

GRID_METHODS = METHODS[:5]
DEFAULT_INDEXING_N = 10


def _seed(args: Namespace, settings: Settings) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    return settings.seed if settings.seed is not None else 0


def _write_parts(out_dir: Path, stem: str, parts: dict[str, Dataset]) -> list[tuple[Path, int]]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in parts.items():
        path = out_dir / f"{stem}-{name}.csv" if name else out_dir / f"{stem}.csv"
        data.to_csv(path)
        written.append((path, len(data)))
    return written


def _bits_or_random(bits: str | None, n: int, rng: np.random.Generator) -> list[int]:
    if bits is None:
        return [int(b) for b in rng.integers(0, 2, size=n)]
    return [int(c) for c in bits]


class GenCommandHandler(CommandHandler):
    """Handler for the 'gen' command."""

    @property
    def command_name(self) -> str:
        return "gen"

    def execute(self, args: Namespace) -> int:
        """Write the requested instance, one CSV per party."""
        from ..harness.baselines import party_names
        from ..harness.generators import (
            circle_pairs,
            gen_circle_lowerbound,
            gen_indexing_instances,
            gen_separable,
            gen_voting_killer,
        )
        from ..ui import show_written

        settings = Settings.from_environment()
        seed = _seed(args, settings)
        out_dir = Path(args.out) if args.out else settings.out_dir
        rng = np.random.default_rng(seed)
        n_per_class = args.n_per_class or DEFAULT_N_PER_CLASS

        match args.kind:
            case "separable":
                parts = {"": gen_separable(n_per_class, args.dim, args.margin, seed=seed)}
            case "voting-killer":
                killer = gen_voting_killer(2 * n_per_class, seed, args.k, args.dim)
                parts = dict(zip(party_names(len(killer)), killer, strict=True))
            case "circle":
                epsilon = args.epsilon or DEFAULT_EPSILON
                pairs = circle_pairs(epsilon)
                bits = _bits_or_random(args.bits, pairs, rng)
                index = args.index if args.index is not None else int(rng.integers(pairs))
                D_A, D_B = gen_circle_lowerbound(epsilon, bits, index, seed, args.multiplicity)
                parts = {"A": D_A, "B": D_B}
            case "indexing-interval" | "indexing-rect":
                n = args.n or (len(args.bits) if args.bits else DEFAULT_INDEXING_N)
                bits = _bits_or_random(args.bits, n, rng)
                index = args.index if args.index is not None else int(rng.integers(n))
                D_A, D_B = gen_indexing_instances(args.kind.removeprefix("indexing-"), n, bits, index)
                parts = {"A": D_A, "B": D_B}
            case _:
                msg = f"Unknown kind {args.kind!r}"
                raise ValueError(msg)

        written = _write_parts(out_dir, args.kind, parts)
        logger.info("gen %s with seed %d wrote %d files", args.kind, seed, len(written))
        show_written(written)
        return 0


class RunCommandHandler(CommandHandler):
    """Handler for the 'run' command."""

    @property
    def command_name(self) -> str:
        return "run"

    def _values(self, args: Namespace, settings: Settings) -> dict[str, Any]:
        file_values = load_config_file(Path(args.config)) if args.config else {}
        seeds = args.seeds or ([args.seed] if args.seed is not None else None)
        flags = {
            "experiment": args.experiment,
            "methods": [args.method] if args.method else None,
            "datasets": [args.dataset] if args.dataset else None,
            "seeds": seeds,
            "epsilon": args.epsilon,
            "k": args.k,
            "dim": args.dim,
            "n_per_class": args.n_per_class,
            "support": args.support,
            "jobs": args.jobs,
            "out": args.out,
            "trials": args.trials,
        }
        values = layer_config(args.preset, file_values, flags)
        if "methods" not in values:
            values["methods"] = [values["support"]] if values.get("support") else list(GRID_METHODS)
        if "seeds" not in values:
            values["seeds"] = [settings.seed if settings.seed is not None else 0]
        values.setdefault("jobs", settings.jobs)
        return values

    def execute(self, args: Namespace) -> int:
        """Run a grid or a demonstration and write its CSV; nonzero when a gate is missed."""
        from ..harness.runner import ExperimentConfig, lowerbound_failures, run_experiment, run_indexing_demo, run_lowerbound_demo
        from ..ui import show_curve, show_problems, show_report

        settings = Settings.from_environment()
        values = self._values(args, settings)
        out_dir = Path(values.get("out") or settings.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        seeds = values["seeds"] if isinstance(values["seeds"], list) else [values["seeds"]]
        experiment = values.get("experiment", "grid")

        if experiment == "lowerbound":
            curve = run_lowerbound_demo(float(values.get("epsilon", DEFAULT_EPSILON)), trials=int(values.get("trials", 500)), seed=int(seeds[0]))
            path = out_dir / "lowerbound.csv"
            curve.to_csv(path)
            show_curve(curve, "One-way error against pair bits sent")
            console.print(f"[dim]Wrote {path}[/dim]")
            problems = lowerbound_failures(curve)
        elif experiment == "indexing":
            curve = run_indexing_demo(trials=int(values.get("trials", 200)), seed=int(seeds[0]))
            path = out_dir / "indexing.csv"
            curve.to_csv(path)
            show_curve(curve, "Realizability failures against index bits sent")
            console.print(f"[dim]Wrote {path}[/dim]")
            problems = []
        else:
            values["transcript_dir"] = args.transcript
            config = ExperimentConfig.from_mapping(values)
            report = run_experiment(config)
            report.to_csv(out_dir / "report.csv")
            (out_dir / "report.md").write_text(report.to_markdown())
            show_report(report)
            console.print(f"[dim]Wrote {out_dir / 'report.csv'} and {out_dir / 'report.md'}[/dim]")
            problems = report.gate_failures()

        show_problems(problems)
        return 1 if problems else 0


class VerifyCommandHandler(CommandHandler):
    """Handler for the 'verify' command."""

    @property
    def command_name(self) -> str:
        return "verify"

    def execute(self, args: Namespace) -> int:
        """Run the property suites; nonzero on any violation."""
        from ..harness.suites import run_suites
        from ..ui import show_suites

        settings = Settings.from_environment()
        results = run_suites([args.suite], args.trials, _seed(args, settings), inject_fault=args.inject_fault)
        show_suites(results)
        return 0 if all(r.passed for r in results) else 1


class HelpCommandHandler(CommandHandler):
    """Handler for the 'help' command."""

    @property
    def command_name(self) -> str:
        return "help"

    def execute(self, args: Namespace) -> int:  # noqa: ARG002
        """Execute the help command."""
        from ..ui import show_help

        show_help()
        return 0
