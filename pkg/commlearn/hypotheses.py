"""Classifier families, datasets, zero-error learners and exhaustive oracles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Literal, TypeAlias, get_args

import numpy as np

from .errors import DimMismatch, EmptyInput, NotRealizable, NotSeparable, TooLarge
from .geometry import TOL, Halfplane, MaxMarginResult, max_margin_separator

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

logger = logging.getLogger(__name__)

FamilyTag: TypeAlias = Literal["threshold", "interval", "rectangle", "halfplane"]
FAMILIES: tuple[str, ...] = get_args(FamilyTag)

ONE_DIM_ORACLE_LIMIT = 500
SMALL_ORACLE_LIMIT = 60


@dataclass(frozen=True)
class LabeledPoint:
    coords: tuple[float, ...]
    label: int

    def __post_init__(self) -> None:
        if self.label not in (1, -1):
            msg = f"Label must be +1 or -1, got {self.label}"
            raise ValueError(msg)
        if not all(math.isfinite(c) for c in self.coords):
            msg = "Coordinates must be finite"
            raise ValueError(msg)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labelled points of a common dimension.

    Attributes:
        points: ``(n, d)`` float array.
        labels: ``(n,)`` integer array of +1/-1.
    """

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        labels = np.asarray(self.labels).astype(np.int64).ravel()
        if len(points) == 0:
            msg = "A dataset needs at least one point"
            raise EmptyInput(msg)
        if len(labels) != len(points):
            msg = f"{len(points)} points but {len(labels)} labels"
            raise ValueError(msg)
        if not np.all(np.isfinite(points)):
            msg = "Coordinates must be finite"
            raise ValueError(msg)
        if not np.all(np.isin(labels, (1, -1))):
            msg = "Labels must be +1 or -1"
            raise ValueError(msg)
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_points(cls, points: Sequence[LabeledPoint]) -> Dataset:
        return cls(np.array([p.coords for p in points], dtype=float), np.array([p.label for p in points]))

    @classmethod
    def concat(cls, parts: Sequence[Dataset]) -> Dataset:
        """Union of several datasets in order.

        Raises:
            DimMismatch: If the parts disagree on dimension.
        """
        dims = {p.dim for p in parts}
        if len(dims) > 1:
            msg = f"Cannot merge datasets of dimensions {sorted(dims)}"
            raise DimMismatch(msg)
        return cls(np.vstack([p.points for p in parts]), np.concatenate([p.labels for p in parts]))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[LabeledPoint]:
        for row, label in zip(self.points, self.labels, strict=True):
            yield LabeledPoint(tuple(float(c) for c in row), int(label))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def positives(self) -> np.ndarray:
        return self.points[self.labels == 1]

    @property
    def negatives(self) -> np.ndarray:
        return self.points[self.labels == -1]

    @property
    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels == 1) and np.any(self.labels == -1))

    def subset(self, index: np.ndarray) -> Dataset:
        return Dataset(self.points[index], self.labels[index])

    def to_csv(self, path: Path) -> None:
        """Write ``x1..xd,label`` rows with 17 significant digits."""
        header = ",".join([*(f"x{j + 1}" for j in range(self.dim)), "label"])
        table = np.column_stack([self.points, self.labels.astype(float)])
        fmt = ["%.17g"] * self.dim + ["%+d"]
        np.savetxt(Path(path), table, fmt=fmt, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path: Path) -> Dataset:
        with Path(path).open() as f:
            header = f.readline().strip().split(",")
        if not header or header[-1] != "label":
            msg = f"{path}: expected a header ending in 'label'"
            raise ValueError(msg)
        table = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        return cls(table[:, :-1], table[:, -1].astype(np.int64))


@dataclass(frozen=True)
class Threshold:
    """1D threshold; polarity +1 labels ``x < t`` positive, -1 labels ``x > t`` positive."""

    t: float
    polarity: int = 1

    dim = 1

    def classify(self, points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1)
        return np.where(self.polarity * (self.t - x) > 0, 1, -1)


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` labelled ``inside_label``; ``empty`` labels everything outside."""

    lo: float
    hi: float
    inside_label: int = 1
    empty: bool = False

    dim = 1

    def __post_init__(self) -> None:
        if not self.empty and self.lo > self.hi:
            msg = f"Interval bounds out of order: {self.lo} > {self.hi}"
            raise ValueError(msg)

    @classmethod
    def nothing(cls, inside_label: int = 1) -> Interval:
        return cls(0.0, 0.0, inside_label, empty=True)

    def classify(self, points: np.ndarray) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1)
        inside = np.zeros(len(x), dtype=bool) if self.empty else (x >= self.lo) & (x <= self.hi)
        return np.where(inside, self.inside_label, -self.inside_label)


@dataclass(frozen=True, eq=False)
class AxisRect:
    """Closed axis-aligned box labelled ``inside_label``; ``empty`` is the no-box sentinel."""

    mins: np.ndarray
    maxs: np.ndarray
    inside_label: int = 1
    empty: bool = False

    def __post_init__(self) -> None:
        mins = np.asarray(self.mins, dtype=float).ravel()
        maxs = np.asarray(self.maxs, dtype=float).ravel()
        if len(mins) != len(maxs):
            msg = "Box bounds disagree on dimension"
            raise ValueError(msg)
        if not self.empty and np.any(mins > maxs):
            msg = "Box has mins above maxs"
            raise ValueError(msg)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @classmethod
    def nothing(cls, dim: int, inside_label: int = 1) -> AxisRect:
        return cls(np.zeros(dim), np.zeros(dim), inside_label, empty=True)

    @classmethod
    def bounding(cls, points: np.ndarray, inside_label: int = 1) -> AxisRect:
        return cls(points.min(axis=0), points.max(axis=0), inside_label)

    @property
    def dim(self) -> int:
        return len(self.mins)

    def merge(self, other: AxisRect) -> AxisRect:
        """Smallest box containing both boxes; the sentinel is the identity."""
        if self.empty:
            return other
        if other.empty:
            return self
        return AxisRect(np.minimum(self.mins, other.mins), np.maximum(self.maxs, other.maxs), self.inside_label)

    def contains_box(self, other: AxisRect) -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        return bool(np.all(self.mins <= other.mins) and np.all(other.maxs <= self.maxs))

    def classify(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        inside = np.zeros(len(pts), dtype=bool) if self.empty else np.all((pts >= self.mins) & (pts <= self.maxs), axis=1)
        return np.where(inside, self.inside_label, -self.inside_label)


Hypothesis: TypeAlias = Threshold | Interval | AxisRect | Halfplane


@dataclass(frozen=True)
class ErrorReport:
    misclassified_count: int
    total: int

    @property
    def epsilon_fraction(self) -> float:
        return self.misclassified_count / self.total if self.total else 0.0

    @property
    def accuracy_pct(self) -> float:
        return 100.0 * (1.0 - self.epsilon_fraction)


@dataclass(frozen=True)
class SampleSizeSpec:
    """Size of an epsilon-net sample, ``ceil(c * (nu/eps) * ln(nu/eps))`` and at least 1."""

    nu: int
    epsilon: float
    constant_c: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            msg = f"epsilon must lie in (0, 1), got {self.epsilon}"
            raise ValueError(msg)
        if self.nu < 1 or self.constant_c <= 0:
            msg = "nu must be positive and c strictly positive"
            raise ValueError(msg)

    @property
    def size(self) -> int:
        ratio = self.nu / self.epsilon
        return max(1, math.ceil(self.constant_c * ratio * math.log(ratio)))


def vc_dimension(family: FamilyTag, dim: int) -> int:
    """VC dimension of ``family`` over ``R^dim``."""
    match family:
        case "threshold":
            return 1
        case "interval":
            return 2
        case "rectangle":
            return 2 * dim
        case "halfplane":
            return dim + 1
    msg = f"Unknown family {family!r}"
    raise ValueError(msg)


def hypothesis_dim(h: Hypothesis) -> int:
    return int(h.dim)


def error_count(h: Hypothesis, D: Dataset) -> ErrorReport:
    """Exact number of points of ``D`` that ``h`` misclassifies.

    Raises:
        DimMismatch: If ``h`` and ``D`` disagree on dimension.
    """
    if hypothesis_dim(h) != D.dim:
        msg = f"Hypothesis has dimension {hypothesis_dim(h)} but data has {D.dim}"
        raise DimMismatch(msg)
    wrong = int(np.count_nonzero(h.classify(D.points) != D.labels))
    return ErrorReport(wrong, len(D))


# -- zero-error fitting ---------------------------------------------------


def constant_halfplane(label: int, dim: int) -> Halfplane:
    """Halfplane labelling all of ``R^dim`` with ``label``."""
    normal = np.zeros(dim)
    normal[0] = 1.0
    return Halfplane(normal, -math.inf if label == 1 else math.inf)


def _fit_threshold(D: Dataset, polarity: int | None = None) -> Threshold:
    x = D.points[:, 0]
    pos, neg = x[D.labels == 1], x[D.labels == -1]
    orientations = (1, -1) if polarity is None else (polarity,)
    if len(pos) == 0:
        p = orientations[0]
        return Threshold(float(neg.min()) - 1.0 if p == 1 else float(neg.max()) + 1.0, p)
    if len(neg) == 0:
        p = orientations[0]
        return Threshold(float(pos.max()) + 1.0 if p == 1 else float(pos.min()) - 1.0, p)
    if 1 in orientations and pos.max() < neg.min():
        return Threshold(0.5 * float(pos.max() + neg.min()), 1)
    if -1 in orientations and neg.max() < pos.min():
        return Threshold(0.5 * float(neg.max() + pos.min()), -1)
    msg = "No zero-error threshold exists"
    raise NotRealizable(msg)


def _fit_interval(D: Dataset, *, minimal: bool, inside_label: int | None) -> Interval:
    x = D.points[:, 0]
    for label in (1, -1) if inside_label is None else (inside_label,):
        inside, outside = x[D.labels == label], x[D.labels == -label]
        if len(inside) == 0:
            return Interval.nothing(label)
        lo, hi = float(inside.min()), float(inside.max())
        if np.any((outside >= lo) & (outside <= hi)):
            continue
        if not minimal:
            below, above = outside[outside < lo], outside[outside > hi]
            lo = 0.5 * (lo + float(below.max())) if len(below) else -math.inf
            hi = 0.5 * (hi + float(above.min())) if len(above) else math.inf
        return Interval(lo, hi, label)
    msg = "No zero-error interval exists"
    raise NotRealizable(msg)


def _fit_rectangle(D: Dataset, inside_label: int | None) -> AxisRect:
    for label in (1, -1) if inside_label is None else (inside_label,):
        inside = D.points[D.labels == label]
        if len(inside) == 0:
            return AxisRect.nothing(D.dim, label)
        box = AxisRect.bounding(inside, label)
        if error_count(box, D).misclassified_count == 0:
            return box
    msg = "No zero-error axis-aligned rectangle exists"
    raise NotRealizable(msg)


def max_margin_nd(positives: np.ndarray, negatives: np.ndarray, *, max_iter: int = 10_000, rel_tol: float = 1e-7) -> MaxMarginResult:
    """Approximate max-margin separator in any dimension.

    Runs Gilbert's nearest-point iteration on the difference of the two hulls,
    then places the offset midway between the class extremes along the found
    normal so the result has zero training error.

    Raises:
        NotSeparable: If the hulls meet.
    """
    pos = np.asarray(positives, dtype=float)
    neg = np.asarray(negatives, dtype=float)
    a, b = pos.mean(axis=0), neg.mean(axis=0)
    for _ in range(max_iter):
        z = a - b
        zz = float(z @ z)
        if zz <= TOL * TOL:
            msg = "Class hulls intersect"
            raise NotSeparable(msg)
        sp = pos[int(np.argmin(pos @ z))]
        sn = neg[int(np.argmax(neg @ z))]
        s = sp - sn
        if zz - float(z @ s) <= rel_tol * zz:
            break
        step = z - s
        t = min(1.0, max(0.0, float(z @ step) / float(step @ step)))
        a = a + t * (sp - a)
        b = b + t * (sn - b)
    else:
        logger.debug("Gilbert iteration stopped at the cap of %d steps", max_iter)

    normal = (a - b) / float(np.linalg.norm(a - b))
    pos_proj, neg_proj = pos @ normal, neg @ normal
    gap = float(pos_proj.min() - neg_proj.max())
    if gap <= TOL:
        msg = "Class hulls touch or intersect"
        raise NotSeparable(msg)
    support = np.array([pos[int(np.argmin(pos_proj))], neg[int(np.argmax(neg_proj))]])
    separator = Halfplane(normal, 0.5 * float(pos_proj.min() + neg_proj.max()))
    return MaxMarginResult(separator, support, np.array([1, -1]), 0.5 * gap)


def max_margin(positives: np.ndarray, negatives: np.ndarray) -> MaxMarginResult:
    """Exact planar max-margin separator, or the Gilbert approximation when d > 2."""
    if np.asarray(positives).shape[1] == 2:  # noqa: PLR2004
        return max_margin_separator(positives, negatives)
    return max_margin_nd(positives, negatives)


def _fit_halfplane(D: Dataset) -> Halfplane:
    if not D.has_both_classes:
        return constant_halfplane(int(D.labels[0]), D.dim)
    if D.dim == 1:
        threshold = _fit_threshold(D)
        return Halfplane(np.array([-float(threshold.polarity)]), -threshold.polarity * threshold.t)
    try:
        return max_margin(D.positives, D.negatives).separator
    except NotSeparable as exc:
        raise NotRealizable(str(exc)) from exc


def fit_zero_error(
    family: FamilyTag,
    D: Dataset,
    *,
    minimal: bool = False,
    inside_label: int | None = None,
    polarity: int | None = None,
) -> Hypothesis:
    """Return a hypothesis of ``family`` with zero error on ``D``.

    Args:
        family: Classifier family to fit.
        D: Training data.
        minimal: For intervals, return the tightest interval around the inside
            class instead of extending halfway to the nearest outside points.
        inside_label: For intervals and rectangles, fix the inside label
            instead of trying +1 first and then -1.
        polarity: For thresholds, fix the orientation instead of trying both.

    Raises:
        NotRealizable: If no zero-error hypothesis exists.
    """
    match family:
        case "threshold":
            if D.dim != 1:
                msg = f"Thresholds need 1D data, got d={D.dim}"
                raise DimMismatch(msg)
            return _fit_threshold(D, polarity)
        case "interval":
            if D.dim != 1:
                msg = f"Intervals need 1D data, got d={D.dim}"
                raise DimMismatch(msg)
            return _fit_interval(D, minimal=minimal, inside_label=inside_label)
        case "rectangle":
            return _fit_rectangle(D, inside_label)
        case "halfplane":
            return _fit_halfplane(D)
    msg = f"Unknown family {family!r}"
    raise ValueError(msg)


# -- exhaustive oracles -----------------------------------------------------


def _cuts(sorted_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Valid split positions of sorted values and the cut value at each.

    Position ``i`` puts the first ``i`` values below the cut. Splitting
    between equal values is not allowed.
    """
    n = len(sorted_values)
    positions = [0, *(i for i in range(1, n) if sorted_values[i - 1] < sorted_values[i]), n]
    values = []
    for i in positions:
        if i == 0:
            values.append(float(sorted_values[0]) - 1.0)
        elif i == n:
            values.append(float(sorted_values[-1]) + 1.0)
        else:
            values.append(0.5 * float(sorted_values[i - 1] + sorted_values[i]))
    return np.array(positions), np.array(values)


def _best_threshold(D: Dataset) -> Threshold:
    order = np.argsort(D.points[:, 0], kind="stable")
    xs, ys = D.points[order, 0], D.labels[order]
    positions, values = _cuts(xs)
    pos_below = np.concatenate([[0], np.cumsum(ys == 1)])[positions]
    neg_below = np.concatenate([[0], np.cumsum(ys == -1)])[positions]
    n_pos, n_neg = int(np.sum(ys == 1)), int(np.sum(ys == -1))
    below_positive = neg_below + (n_pos - pos_below)
    above_positive = pos_below + (n_neg - neg_below)
    i, j = int(np.argmin(below_positive)), int(np.argmin(above_positive))
    if below_positive[i] <= above_positive[j]:
        return Threshold(float(values[i]), 1)
    return Threshold(float(values[j]), -1)


def _best_interval(D: Dataset) -> Interval:
    order = np.argsort(D.points[:, 0], kind="stable")
    xs, ys = D.points[order, 0], D.labels[order]
    positions, values = _cuts(xs)
    best: tuple[int, Interval] | None = None
    for label in (1, -1):
        inside_before = np.concatenate([[0], np.cumsum(ys == label)])[positions]
        outside_before = np.concatenate([[0], np.cumsum(ys == -label)])[positions]
        total_inside = int(np.sum(ys == label))
        # errors[i, j] for the interval covering sorted values in [i, j)
        errors = (outside_before[None, :] - outside_before[:, None]) + total_inside - (inside_before[None, :] - inside_before[:, None])
        errors = np.where(np.triu(np.ones_like(errors, dtype=bool), k=1), errors, total_inside)
        i, j = np.unravel_index(int(np.argmin(errors)), errors.shape)
        err = int(errors[i, j])
        candidate = Interval.nothing(label) if err == total_inside else Interval(float(values[i]), float(values[j]), label)
        if best is None or err < best[0]:
            best = (err, candidate)
    assert best is not None  # noqa: S101
    return best[1]


def _kadane(values: np.ndarray, weights: np.ndarray) -> tuple[float, tuple[float, float] | None]:
    keys, inverse = np.unique(values, return_inverse=True)
    grouped = np.zeros(len(keys))
    np.add.at(grouped, inverse, weights)
    best, span = 0.0, None
    running, start = 0.0, 0
    for k, w in enumerate(grouped):
        if running <= 0.0:
            running, start = w, k
        else:
            running += w
        if running > best:
            best, span = running, (float(keys[start]), float(keys[k]))
    return best, span


def _best_box(points: np.ndarray, weights: np.ndarray, axis: int) -> tuple[float, list[tuple[float, float]] | None]:
    if len(points) == 0:
        return 0.0, None
    if axis == points.shape[1] - 1:
        gain, span = _kadane(points[:, axis], weights)
        return gain, None if span is None else [span]
    keys = np.unique(points[:, axis])
    best, box = 0.0, None
    for i in range(len(keys)):
        for j in range(i, len(keys)):
            mask = (points[:, axis] >= keys[i]) & (points[:, axis] <= keys[j])
            if weights[mask].clip(min=0).sum() <= best:
                continue
            gain, rest = _best_box(points[mask], weights[mask], axis + 1)
            if rest is not None and gain > best:
                best, box = gain, [(float(keys[i]), float(keys[j])), *rest]
    return best, box


def _best_rectangle(D: Dataset) -> AxisRect:
    n_keys = max(len(np.unique(D.points[:, j])) for j in range(D.dim))
    if n_keys ** (2 * (D.dim - 1)) * len(D) > 20_000_000:
        msg = f"Rectangle oracle would scan too many boxes for n={len(D)}, d={D.dim}"
        raise TooLarge(msg)
    best: tuple[float, AxisRect] | None = None
    for label in (1, -1):
        weights = np.where(D.labels == label, 1.0, -1.0)
        gain, box = _best_box(D.points, weights, 0)
        total_inside = float(np.sum(D.labels == label))
        err = total_inside - gain
        rect = AxisRect.nothing(D.dim, label) if box is None else AxisRect(np.array([b[0] for b in box]), np.array([b[1] for b in box]), label)
        if best is None or err < best[0]:
            best = (err, rect)
    assert best is not None  # noqa: S101
    return best[1]


def _best_halfplane(D: Dataset) -> Halfplane:
    if D.dim != 2:  # noqa: PLR2004
        msg = f"Halfplane oracle handles the plane only, got d={D.dim}"
        raise TooLarge(msg)
    pts, ys = D.points, D.labels
    n = len(pts)
    i, j = np.triu_indices(n, k=1)
    diffs = pts[j] - pts[i]
    keep = np.any(diffs != 0.0, axis=1)
    base = np.arctan2(diffs[keep, 0], -diffs[keep, 1])
    angles = np.concatenate([base + delta for delta in (0.0, 1e-7, -1e-7, np.pi, np.pi + 1e-7, np.pi - 1e-7)])
    angles = np.concatenate([angles, [0.0]])
    normals = np.column_stack([np.cos(angles), np.sin(angles)])

    proj = normals @ pts.T
    order = np.argsort(proj, axis=1, kind="stable")
    sorted_proj = np.take_along_axis(proj, order, axis=1)
    sorted_pos = ys[order] == 1
    pos_below = np.concatenate([np.zeros((len(angles), 1), dtype=int), np.cumsum(sorted_pos, axis=1)], axis=1)
    neg_below = np.arange(n + 1)[None, :] - pos_below
    n_neg = int(np.sum(ys == -1))
    # positives above the cut, negatives below
    errors = pos_below + (n_neg - neg_below)
    valid = np.ones_like(errors, dtype=bool)
    valid[:, 1:n] = sorted_proj[:, 1:] > sorted_proj[:, :-1]
    errors = np.where(valid, errors, n + 1)

    row, split = np.unravel_index(int(np.argmin(errors)), errors.shape)
    if split == 0:
        offset = float(sorted_proj[row, 0]) - 1.0
    elif split == n:
        offset = float(sorted_proj[row, -1]) + 1.0
    else:
        offset = 0.5 * float(sorted_proj[row, split - 1] + sorted_proj[row, split])
    return Halfplane(normals[row], offset)


def brute_force_best(family: FamilyTag, D: Dataset) -> tuple[Hypothesis, ErrorReport]:
    """Exhaustively find a minimum-error hypothesis on a small instance.

    Raises:
        TooLarge: If the instance exceeds the oracle's size limits.
    """
    limit = ONE_DIM_ORACLE_LIMIT if family in ("threshold", "interval") else SMALL_ORACLE_LIMIT
    if len(D) > limit:
        msg = f"{family} oracle accepts at most {limit} points, got {len(D)}"
        raise TooLarge(msg)
    match family:
        case "threshold":
            h: Hypothesis = _best_threshold(D)
        case "interval":
            h = _best_interval(D)
        case "rectangle":
            h = _best_rectangle(D)
        case "halfplane":
            h = _best_halfplane(D)
        case _:
            msg = f"Unknown family {family!r}"
            raise ValueError(msg)
    return h, error_count(h, D)


def epsilon_net_sample(D: Dataset, spec: SampleSizeSpec, rng_seed: int | np.random.SeedSequence | np.random.Generator) -> Dataset:
    """Uniform sample without replacement of ``min(|D|, spec.size)`` points, in original order."""
    size = min(len(D), spec.size)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    index = np.sort(rng.choice(len(D), size=size, replace=False))
    return D.subset(index)
