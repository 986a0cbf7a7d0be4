"""Seeded property suites behind ``commlearn verify``.

Each suite runs a batch of generated instances and checks a protocol or
geometry result against an independent oracle: linear programs for
separability, a refined rotational sweep for margins, exhaustive search for
realizability and a chi-square test for reservoir uniformity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.stats import chisquare

from ..errors import CommLearnError
from ..geometry import DirectionInterval, max_margin_separator
from ..hypotheses import AxisRect, Dataset, Interval, Threshold, brute_force_best, error_count
from ..oneway import ReservoirState, protocol_chain_exact, protocol_interval, protocol_rectangle, protocol_threshold
from ..twoway import NodeState, iterative_supports, median_round_cap, uncertain_mask
from .generators import gen_indexing_instances, gen_separable, make_dataset

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

SWEEP_DIRECTIONS = 4096
MARGIN_REL_TOL = 1e-3
RESERVOIR_ITEMS = 50
RESERVOIR_CAPACITY = 10
RESERVOIR_TOL = 0.02
STREAMS_PER_TRIAL = 100
BAND_MIN_STREAMS = 10_000
CHI_SQUARE_ALPHA = 0.01


@dataclass
class SuiteResult:
    """Outcome of one suite.

    Attributes:
        name: Suite name.
        trials: Instances run.
        records: Items checked, such as round sequences or compared points.
        violations: One line per failed check.
    """

    name: str
    trials: int
    records: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


# -- oracles ----------------------------------------------------------------


def lp_separable(positives: np.ndarray, negatives: np.ndarray) -> bool:
    """True if some ``(w, c)`` puts every positive at ``<w,p> - c >= 1`` and every negative at ``<= -1``."""
    pos = np.asarray(positives, dtype=float).reshape(-1, np.shape(positives)[-1])
    neg = np.asarray(negatives, dtype=float).reshape(-1, pos.shape[1])
    d = pos.shape[1]
    A_ub = np.vstack([np.column_stack([-pos, np.ones(len(pos))]), np.column_stack([neg, -np.ones(len(neg))])])
    b_ub = -np.ones(len(A_ub))
    result = linprog(np.zeros(d + 1), A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (d + 1), method="highs")
    return bool(result.status == 0)


def lp_misclassifiable(point: np.ndarray, label: int, known: Dataset) -> bool:
    """True if a separator of ``known`` exists that gives ``point`` the wrong label."""
    pos = known.positives
    neg = known.negatives
    if label == 1:
        neg = np.vstack([neg, point[None, :]])
    else:
        pos = np.vstack([pos, point[None, :]])
    return lp_separable(pos, neg)


def sweep_margin(positives: np.ndarray, negatives: np.ndarray, directions: int = SWEEP_DIRECTIONS) -> float:
    """Best half-gap over a uniform sweep of normals, refined around the best one."""

    def half_gap(theta: float) -> float:
        u = np.array([math.cos(theta), math.sin(theta)])
        return 0.5 * float((positives @ u).min() - (negatives @ u).max())

    thetas = np.linspace(0.0, 2.0 * math.pi, directions, endpoint=False)
    gaps = [half_gap(t) for t in thetas]
    best = int(np.argmax(gaps))
    step = 2.0 * math.pi / directions
    refined = minimize_scalar(lambda t: -half_gap(t), bounds=(thetas[best] - step, thetas[best] + step), method="bounded", options={"xatol": 1e-12})
    return max(gaps[best], -float(refined.fun))


# -- suites -----------------------------------------------------------------


def _halving(trials: int, seed: int, n_per_class: int = 250, epsilon: float = 0.05) -> SuiteResult:
    result = SuiteResult("halving", trials)
    cap = median_round_cap(epsilon)
    for t in range(trials):
        D_A, D_B = make_dataset(("data1", "data2", "data3")[t % 3], 2, n_per_class, 2, seed + t)
        union = Dataset.concat([D_A, D_B])
        try:
            h, transcript = iterative_supports(D_A, D_B, epsilon, "median")
        except CommLearnError as exc:
            result.violations.append(f"trial {t}: {type(exc).__name__}: {exc}")
            continue
        result.records += 1
        errors = error_count(h, union).misclassified_count
        if errors > epsilon * len(union):
            result.violations.append(f"trial {t}: {errors} errors exceed {epsilon * len(union):.0f}")
        if transcript.rounds > cap:
            result.violations.append(f"trial {t}: {transcript.rounds} rounds exceed {cap}")
        if transcript.halving_violations:
            result.violations.append(f"trial {t}: uncertain set failed to halve at {transcript.halving_violations} in {transcript.u_history}")
    return result


def _interval_within(inner: DirectionInterval, outer: DirectionInterval) -> bool:
    return outer.contains(inner.v_l) and outer.contains(inner.v_r) and inner.span <= outer.span + 1e-9


def _nesting(trials: int, seed: int, n_per_class: int = 60, epsilon: float = 0.05) -> SuiteResult:
    result = SuiteResult("nesting", trials)
    for t in range(trials):
        dataset = "data1" if t % 2 else "data2"
        D_A, D_B = make_dataset(dataset, 2, n_per_class, 2, seed + t)
        last: dict[str, NodeState] = {}
        problems: list[str] = []

        def watch(state: NodeState, last: dict[str, NodeState] = last, problems: list[str] = problems) -> None:
            before = last.get(state.name)
            last[state.name] = state
            if before is None:
                return
            if before.interval is not None and (state.interval is None or not _interval_within(state.interval, before.interval)):
                problems.append(f"{state.name}: direction arc grew")
            if np.any(state.uncertain & ~before.uncertain):
                problems.append(f"{state.name}: a settled point became uncertain")

        try:
            iterative_supports(D_A, D_B, epsilon, "median", observer=watch)
        except CommLearnError as exc:
            problems.append(f"{type(exc).__name__}: {exc}")
        result.records += 1
        result.violations.extend(f"trial {t}: {p}" for p in problems)
    return result


def _maxmargin(trials: int, seed: int) -> SuiteResult:
    result = SuiteResult("maxmargin", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        D = gen_separable(int(rng.integers(1, 11)), 2, float(rng.uniform(0.2, 2.0)), [math.cos(theta), math.sin(theta)], seed + t)
        found = max_margin_separator(D.positives, D.negatives)
        reference = sweep_margin(D.positives, D.negatives)
        result.records += 1
        if abs(found.margin - reference) > MARGIN_REL_TOL * reference:
            result.violations.append(f"trial {t}: margin {found.margin:.6f} vs sweep {reference:.6f}")
        if error_count(found.separator, D).misclassified_count:
            result.violations.append(f"trial {t}: max-margin separator misclassifies its input")
        distances = np.abs(found.separator.decision(found.support))
        if not np.allclose(distances, found.margin, atol=1e-9):
            result.violations.append(f"trial {t}: support points off the margin")
    return result


def _agreement(trials: int, seed: int) -> SuiteResult:
    result = SuiteResult("agreement", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        direction = [math.cos(theta), math.sin(theta)]
        pool = gen_separable(50, 2, 0.5, direction, seed + t)
        order = rng.permutation(len(pool))
        n_known = int(rng.integers(2, 41))
        known = pool.subset(np.sort(order[:n_known]))
        own = pool.subset(np.sort(order[n_known : n_known + int(rng.integers(10, 61))]))
        mask = uncertain_mask(own, known)
        oracle = np.array([lp_misclassifiable(p, int(y), known) for p, y in zip(own.points, own.labels, strict=True)])
        result.records += len(own)
        wrong = np.flatnonzero(mask != oracle)
        if len(wrong):
            result.violations.append(f"trial {t}: {len(wrong)} of {len(own)} points disagree with the LP oracle")
    return result


def _random_split(rng: np.random.Generator, D: Dataset, k: int) -> list[Dataset]:
    owner = rng.permutation(np.arange(len(D)) % k)
    return [D.subset(np.flatnonzero(owner == i)) for i in range(k)]


def _labelled(rng: np.random.Generator, family: str, dim: int) -> tuple[Dataset, Threshold | Interval | AxisRect]:
    n = int(rng.integers(4, 61))
    if family == "threshold":
        h: Threshold | Interval | AxisRect = Threshold(float(rng.uniform(0.2, 0.8)), 1)
        points = rng.uniform(0.0, 1.0, size=(n, 1))
    elif family == "interval":
        lo, hi = np.sort(rng.uniform(0.1, 0.9, size=2))
        h = Interval(float(lo), float(hi), 1)
        points = rng.uniform(0.0, 1.0, size=(n, 1))
    else:
        lo = rng.uniform(0.0, 0.5, size=dim)
        inside = int(rng.choice([1, -1]))
        h = AxisRect(lo, lo + rng.uniform(0.2, 0.5, size=dim), inside)
        points = rng.uniform(0.0, 1.0, size=(n, dim))
        if inside == -1:
            # opposite cube corners keep the positive box around the planted one
            points = np.vstack([np.zeros(dim), np.ones(dim), points])
    return Dataset(points, h.classify(points)), h


def _exact(trials: int, seed: int) -> SuiteResult:
    result = SuiteResult("exact", trials)
    rng = np.random.default_rng(seed)
    protocols: dict[str, Callable[[Dataset, Dataset], tuple[object, object]]] = {
        "threshold": protocol_threshold,
        "interval": protocol_interval,
        "rectangle": protocol_rectangle,
    }
    for t in range(trials):
        for family, protocol in protocols.items():
            dim = int(rng.integers(1, 6)) if family == "rectangle" else 1
            D, _ = _labelled(rng, family, dim)
            D_A, D_B = _random_split(rng, D, 2)
            h, transcript = protocol(D_A, D_B)
            errors = error_count(h, D).misclassified_count  # type: ignore[arg-type]
            points, scalars = transcript.total_points, transcript.total_scalars  # type: ignore[attr-defined]
            caps = {"threshold": (2, 1), "interval": (4, 0), "rectangle": (0, 4 * dim + 2)}[family]
            if errors:
                result.violations.append(f"trial {t}: {family} protocol leaves {errors} errors")
            if points > caps[0] or scalars > caps[1]:
                result.violations.append(f"trial {t}: {family} protocol sent {points} points and {scalars} scalars")

            k = 4
            h, chain = protocol_chain_exact(_random_split(rng, D, k), family)  # type: ignore[arg-type]
            if error_count(h, D).misclassified_count:
                result.violations.append(f"trial {t}: {family} chain leaves errors")
            chain_caps = (2 * k, k) if family == "threshold" else (4 * k, k) if family == "interval" else (0, (4 * dim + 2) * k)
            if chain.total_points > chain_caps[0] or chain.total_scalars > chain_caps[1]:
                result.violations.append(f"trial {t}: {family} chain sent {chain.total_points} points and {chain.total_scalars} scalars")
            result.records += 2
    return result


def _indexing(trials: int, seed: int) -> SuiteResult:
    result = SuiteResult("indexing", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        n = 1 + t % 20
        bits = rng.integers(0, 2, size=n)
        i = int(rng.integers(n))
        for kind, family in (("interval", "interval"), ("rect", "rectangle")):
            try:
                D_A, D_B = gen_indexing_instances(kind, n, bits, i)  # type: ignore[arg-type]
                _, report = brute_force_best(family, Dataset.concat([D_A, D_B]))  # type: ignore[arg-type]
            except CommLearnError as exc:
                result.violations.append(f"trial {t}: {kind}: {type(exc).__name__}: {exc}")
                continue
            result.records += 1
            if (report.misclassified_count == 0) != (bits[i] == 0):
                result.violations.append(f"trial {t}: {kind} n={n} i={i} oracle error {report.misclassified_count} with bit {bits[i]}")
            if n > 1:
                j = int(rng.choice([x for x in range(n) if x != i]))
                flipped = bits.copy()
                flipped[j] ^= 1
                F_A, F_B = gen_indexing_instances(kind, n, flipped, i)  # type: ignore[arg-type]
                _, flipped_report = brute_force_best(family, Dataset.concat([F_A, F_B]))  # type: ignore[arg-type]
                if (flipped_report.misclassified_count == 0) != (bits[i] == 0):
                    result.violations.append(f"trial {t}: {kind} flipping bit {j} changed realizability")
    return result


def _reservoir(trials: int, seed: int) -> SuiteResult:
    result = SuiteResult("reservoir", trials)
    rng = np.random.default_rng(seed)
    items = np.arange(RESERVOIR_ITEMS, dtype=float)[:, None]
    stream = Dataset(items, np.ones(RESERVOIR_ITEMS, dtype=np.int64))
    chunks = [stream.subset(np.arange(a, b)) for a, b in ((0, 7), (7, 30), (30, RESERVOIR_ITEMS))]
    counts = np.zeros(RESERVOIR_ITEMS)
    streams = STREAMS_PER_TRIAL * trials
    for _ in range(streams):
        reservoir = ReservoirState(RESERVOIR_CAPACITY, 1)
        for chunk in chunks:
            reservoir.offer(chunk, rng)
        sample = reservoir.sample
        if sample is None or len(sample) != RESERVOIR_CAPACITY or reservoir.seen_count != RESERVOIR_ITEMS:
            result.violations.append("reservoir lost track of its size or stream count")
            return result
        counts[sample.points[:, 0].astype(int)] += 1
    result.records = streams
    if streams == 0:
        return result
    frequency = counts / streams
    expected = RESERVOIR_CAPACITY / RESERVOIR_ITEMS
    worst = float(np.max(np.abs(frequency - expected)))
    # band checked from BAND_MIN_STREAMS streams on
    if streams >= BAND_MIN_STREAMS and worst > RESERVOIR_TOL:
        result.violations.append(f"inclusion frequency off by {worst:.4f}")
    p_value = float(chisquare(counts).pvalue)
    if p_value <= CHI_SQUARE_ALPHA:
        result.violations.append(f"chi-square p-value {p_value:.4g} rejects uniform inclusion")
    return result


SUITES: dict[str, Callable[[int, int], SuiteResult]] = {
    "halving": _halving,
    "nesting": _nesting,
    "maxmargin": _maxmargin,
    "agreement": _agreement,
    "exact": _exact,
    "indexing": _indexing,
    "reservoir": _reservoir,
}


def run_suites(names: Sequence[str], trials: int, seed: int = 0, *, inject_fault: bool = False) -> list[SuiteResult]:
    """Run the named suites (``all`` for every one) with ``trials`` instances each."""
    selected = list(SUITES) if "all" in names else list(dict.fromkeys(names))
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        msg = f"Unknown suites: {', '.join(unknown)}"
        raise ValueError(msg)
    results = []
    for name in selected:
        logger.info("running suite %s with %d trials", name, trials)
        results.append(SUITES[name](trials, seed))
    if inject_fault and results:
        results[0].violations.append("injected fault")
    return results

