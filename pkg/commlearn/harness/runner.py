"""Experiment runner: method-by-dataset grids and the lower-bound demonstrations."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from ..config import DATASETS, DEFAULT_EPSILON, DEFAULT_N_PER_CLASS, METHODS
from ..errors import CommLearnError, ConfigError, NotRealizable
from ..hypotheses import Dataset, fit_zero_error
from ..twoway import k_party_two_way
from .baselines import baseline_naive, baseline_random, baseline_voting, local_accuracy
from .generators import circle_layout, circle_pairs, gen_circle_lowerbound, gen_indexing_instances, make_dataset
from .ledger import Transcript

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from .generators import IndexingKind

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("method", "dataset", "seed", "accuracy_pct", "cost_points", "cost_scalars", "rounds")
LOWER_BOUND_SLACK = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    """One grid of runs: every method on every dataset for every seed.

    Attributes:
        methods: Method names from ``config.METHODS``.
        datasets: Dataset names from ``config.DATASETS``.
        seeds: Seeds; each seeds both data generation and the method.
        epsilon: Error target of the protocols.
        k: Number of parties.
        dim: Dimension of the data.
        n_per_class: Points of each class held by each party.
        sample_c: Constant of the Random baseline's sample size.
        margin: Class separation of the generated clouds.
        jobs: Worker processes; 1 runs in-process.
        transcript_dir: If set, each run's transcript is written there as JSON lines.
    """

    methods: tuple[str, ...] = ()
    datasets: tuple[str, ...] = DATASETS
    seeds: tuple[int, ...] = (0,)
    epsilon: float = DEFAULT_EPSILON
    k: int = 2
    dim: int = 2
    n_per_class: int = DEFAULT_N_PER_CLASS
    sample_c: float = 1.0
    margin: float = 1.0
    jobs: int = 1
    transcript_dir: Path | None = None

    def __post_init__(self) -> None:
        unknown = [m for m in self.methods if m not in METHODS] + [d for d in self.datasets if d not in DATASETS]
        if unknown:
            msg = f"Unknown methods or datasets: {', '.join(unknown)}"
            raise ConfigError(msg)
        if not 0.0 < self.epsilon < 1.0:
            msg = f"epsilon must lie in (0, 1), got {self.epsilon}"
            raise ConfigError(msg)
        if self.k < 1 or self.dim < 1 or self.n_per_class < 1 or self.jobs < 1:
            msg = "k, dim, n_per_class and jobs must be positive"
            raise ConfigError(msg)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> ExperimentConfig:
        """Build a config from layered preset/file/flag values, ignoring keys it does not use."""
        kwargs: dict[str, Any] = {}
        for key in ("methods", "datasets", "seeds"):
            if values.get(key) is not None:
                raw = values[key]
                kwargs[key] = tuple(raw) if isinstance(raw, list | tuple) else (raw,)
        for key, kind in (("epsilon", float), ("k", int), ("dim", int), ("n_per_class", int), ("sample_c", float), ("margin", float), ("jobs", int)):
            if values.get(key) is not None:
                try:
                    kwargs[key] = kind(values[key])
                except (TypeError, ValueError) as exc:
                    msg = f"Bad value for {key}: {values[key]!r}"
                    raise ConfigError(msg) from exc
        if values.get("transcript_dir") is not None:
            kwargs["transcript_dir"] = Path(values["transcript_dir"])
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ReportRow:
    method: str
    dataset: str
    seed: int
    accuracy_pct: float
    cost_points: int
    cost_scalars: int
    rounds: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def csv_fields(self) -> list[str]:
        accuracy = "nan" if self.failed or math.isnan(self.accuracy_pct) else f"{self.accuracy_pct:.4f}"
        return [self.method, self.dataset, str(self.seed), accuracy, str(self.cost_points), str(self.cost_scalars), str(self.rounds)]


@dataclass(frozen=True)
class ExperimentReport:
    """Rows sorted by method, dataset and seed."""

    rows: tuple[ReportRow, ...] = ()
    epsilon: float = DEFAULT_EPSILON

    def csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(row.csv_fields() for row in self.rows)
        return buffer.getvalue()

    def to_csv(self, path: Path) -> None:
        Path(path).write_text(self.csv_text())

    def summary(self) -> dict[tuple[str, str], tuple[float, float, int]]:
        """Mean accuracy, mean point cost and failure count per (method, dataset)."""
        groups: dict[tuple[str, str], list[ReportRow]] = defaultdict(list)
        for row in self.rows:
            groups[row.method, row.dataset].append(row)
        out = {}
        for key, rows in groups.items():
            ok = [r for r in rows if not r.failed]
            accuracy = float(np.mean([r.accuracy_pct for r in ok])) if ok else math.nan
            cost = float(np.mean([r.cost_points for r in ok])) if ok else math.nan
            out[key] = (accuracy, cost, len(rows) - len(ok))
        return out

    @property
    def methods(self) -> list[str]:
        return sorted({r.method for r in self.rows}, key=_method_order)

    @property
    def datasets(self) -> list[str]:
        return sorted({r.dataset for r in self.rows})

    def to_markdown(self) -> str:
        """Method rows against accuracy/cost column pairs per dataset."""
        summary = self.summary()
        header = ["Method"]
        for name in self.datasets:
            header += [f"{name} Acc", f"{name} Cost"]
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for method in self.methods:
            cells = [method]
            for name in self.datasets:
                accuracy, cost, _ = summary.get((method, name), (math.nan, math.nan, 0))
                cells += ["n/a" if math.isnan(accuracy) else f"{accuracy:.2f}%", "n/a" if math.isnan(cost) else f"{cost:.0f}"]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def gate_failures(self) -> list[str]:
        """Rows that failed, and Median rows short of ``1 - epsilon`` accuracy."""
        problems = []
        for row in self.rows:
            if row.failed:
                problems.append(f"{row.method}/{row.dataset}/seed {row.seed}: {row.error}")
            elif row.method == "median" and row.accuracy_pct < 100.0 * (1.0 - self.epsilon) - 1e-9:
                problems.append(f"median/{row.dataset}/seed {row.seed}: accuracy {row.accuracy_pct:.2f}%")
        return problems


def _method_order(method: str) -> int:
    return METHODS.index(method) if method in METHODS else len(METHODS)


def run_method(method: str, parts: Sequence[Dataset], epsilon: float, seed: int = 0, sample_c: float = 1.0) -> tuple[float, Transcript]:
    """Run one method on one partitioned instance; returns accuracy in percent on the union and the transcript."""
    union = Dataset.concat(list(parts))
    match method:
        case "naive":
            h, transcript = baseline_naive(parts, epsilon, seed)
        case "voting":
            h, transcript = baseline_voting(parts, epsilon, seed)  # type: ignore[assignment]
        case "random":
            h, transcript = baseline_random(parts, epsilon, seed, sample_c)
        case "maxmarg" | "median":
            h, transcript = k_party_two_way(parts, epsilon, method)
        case "local":
            return local_accuracy(parts), Transcript()
        case _:
            msg = f"Unknown method {method!r}"
            raise ConfigError(msg)
    accuracy = 100.0 * float(np.mean(h.classify(union.points) == union.labels))
    return accuracy, transcript


def _run_task(task: tuple[str, str, int, ExperimentConfig]) -> ReportRow:
    method, dataset, seed, config = task
    try:
        parts = make_dataset(dataset, config.k, config.n_per_class, config.dim, seed, config.margin)
        accuracy, transcript = run_method(method, parts, config.epsilon, seed, config.sample_c)
    except (CommLearnError, ValueError) as exc:
        logger.warning("%s on %s with seed %d failed: %s", method, dataset, seed, exc)
        return ReportRow(method, dataset, seed, math.nan, 0, 0, 0, f"{type(exc).__name__}: {exc}")
    if config.transcript_dir is not None:
        config.transcript_dir.mkdir(parents=True, exist_ok=True)
        transcript.to_jsonl(config.transcript_dir / f"{method}-{dataset}-{seed}.jsonl")
    return ReportRow(method, dataset, seed, accuracy, transcript.total_points, transcript.total_scalars, transcript.rounds)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the grid; failed runs become rows with ``nan`` accuracy instead of aborting."""
    tasks = [(m, d, s, config) for m in config.methods for d in config.datasets for s in config.seeds]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows: Iterable[ReportRow] = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    ordered = sorted(rows, key=lambda r: (_method_order(r.method), r.dataset, r.seed))
    return ExperimentReport(tuple(ordered), config.epsilon)


# -- lower-bound demonstrations ---------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    budget: int
    mean: float
    bound: float = 0.0


@dataclass(frozen=True)
class Curve:
    """Mean outcome per communication budget, with the column name of the outcome."""

    points: tuple[CurvePoint, ...]
    value_name: str = "mean_error"
    trials: int = 0
    extra: dict[str, float] = field(default_factory=dict)

    def csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["budget", self.value_name, "bound"])
        writer.writerows([p.budget, f"{p.mean:.8f}", f"{p.bound:.8f}"] for p in self.points)
        return buffer.getvalue()

    def to_csv(self, path: Path) -> None:
        Path(path).write_text(self.csv_text())

    def non_increasing(self) -> bool:
        return all(b.mean <= a.mean + 1e-12 for a, b in zip(self.points, self.points[1:], strict=False))


def run_lowerbound_demo(
    epsilon: float = DEFAULT_EPSILON,
    budgets: Sequence[int] | None = None,
    trials: int = 500,
    seed: int = 0,
    multiplicity: int = 1,
) -> Curve:
    """Error of ``B``'s best response when ``A`` reveals ``m`` pair bits chosen blindly.

    Each trial draws the bits, ``B``'s pair, the order in which ``A`` would
    reveal bits and the guess ``B`` makes without information; every budget
    reuses them, so each trial's error can only drop as the budget grows.
    ``B`` tilts its tangent by the true bit when its pair was revealed and by
    its guess otherwise.
    """
    pairs = circle_pairs(epsilon)
    budgets = list(range(pairs + 1)) if budgets is None else list(budgets)
    if any(not 0 <= m <= pairs for m in budgets):
        msg = f"budgets must lie in [0, {pairs}]"
        raise ValueError(msg)
    rng = np.random.default_rng(seed)
    errors = np.zeros((trials, len(budgets)))
    for t in range(trials):
        bits = rng.integers(0, 2, size=pairs)
        b_index = int(rng.integers(pairs))
        reveal = rng.permutation(pairs)
        guess = int(rng.integers(0, 2))
        instance_seed = int(rng.integers(2**31))
        D_A, D_B = gen_circle_lowerbound(epsilon, bits, b_index, instance_seed, multiplicity)
        union = Dataset.concat([D_A, D_B])
        layout = circle_layout(epsilon, instance_seed)
        by_bit = {
            bit: float(np.mean(layout.tangent(b_index, bit).classify(union.points) != union.labels)) for bit in (0, 1)
        }
        rank = int(np.flatnonzero(reveal == b_index)[0])
        for col, m in enumerate(budgets):
            errors[t, col] = by_bit[int(bits[b_index]) if rank < m else guess]
    means = errors.mean(axis=0) if trials else np.zeros(len(budgets))
    points = tuple(
        CurvePoint(m, float(mean), (1.0 - m / pairs) * 0.5 * epsilon * (1.0 - LOWER_BOUND_SLACK))
        for m, mean in zip(budgets, means, strict=True)
    )
    return Curve(points, "mean_error", trials, {"epsilon": epsilon, "pairs": float(pairs)})


def lowerbound_failures(curve: Curve) -> list[str]:
    """Checks on a full-range circle curve: coin-flip error at budget 0, none at full budget, monotone."""
    epsilon = curve.extra.get("epsilon", DEFAULT_EPSILON)
    pairs = int(curve.extra.get("pairs", 0))
    problems = []
    by_budget = {p.budget: p.mean for p in curve.points}
    if 0 in by_budget and not 0.4 * epsilon <= by_budget[0] <= 0.6 * epsilon:  # noqa: PLR2004
        problems.append(f"mean error {by_budget[0]:.5f} at budget 0 is outside [0.4, 0.6] * epsilon")
    if pairs in by_budget and by_budget[pairs] != 0.0:
        problems.append(f"mean error {by_budget[pairs]:.5f} at full budget is not 0")
    if not curve.non_increasing():
        problems.append("error curve increases with the budget")
    return problems


def _realizable(kind: IndexingKind, D: Dataset) -> bool:
    try:
        fit_zero_error("interval" if kind == "interval" else "rectangle", D)
    except NotRealizable:
        return False
    return True


def run_indexing_demo(
    kind: IndexingKind = "interval",
    n: int = 20,
    budgets: Sequence[int] | None = None,
    trials: int = 200,
    seed: int = 0,
) -> Curve:
    """Failure rate of ``B``'s realizability decision when ``A`` reveals ``m`` bits chosen blindly.

    Revealed bits reach ``B`` as ``A``'s points; ``B`` decides by fitting on
    its data plus those points when its index was revealed and flips a coin
    otherwise.
    """
    budgets = list(range(n + 1)) if budgets is None else list(budgets)
    if any(not 0 <= m <= n for m in budgets):
        msg = f"budgets must lie in [0, {n}]"
        raise ValueError(msg)
    rng = np.random.default_rng(seed)
    failures = np.zeros((trials, len(budgets)))
    for t in range(trials):
        bits = rng.integers(0, 2, size=n)
        i = int(rng.integers(n))
        reveal = rng.permutation(n)
        coin = bool(rng.integers(0, 2))
        _, D_B = gen_indexing_instances(kind, n, bits, i)
        truth = bool(bits[i] == 0)
        rank = int(np.flatnonzero(reveal == i)[0])
        # Only bit i decides, so the first budget that reveals it stands for all larger ones.
        masked = np.zeros(n, dtype=int)
        masked[reveal[: rank + 1]] = bits[reveal[: rank + 1]]
        D_seen, _ = gen_indexing_instances(kind, n, masked, i)
        informed = _realizable(kind, Dataset.concat([D_seen, D_B]))
        for col, m in enumerate(budgets):
            decision = informed if rank < m else coin
            failures[t, col] = float(decision != truth)
    means = failures.mean(axis=0) if trials else np.zeros(len(budgets))
    points = tuple(CurvePoint(m, float(mean), (1.0 - m / n) * 0.5 * (1.0 - LOWER_BOUND_SLACK)) for m, mean in zip(budgets, means, strict=True))
    return Curve(points, "failure_rate", trials, {"n": float(n)})
