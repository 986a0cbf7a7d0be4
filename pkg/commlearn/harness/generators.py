"""Dataset, partition and lower-bound instance generators.

Every generator is deterministic in its seed. Instances whose shape matters
to an experiment (the voting-killer and the indexing constructions) check
themselves before they are returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, TypeAlias, get_args

import numpy as np

from ..errors import ConstructionFailed, NotRealizable
from ..geometry import Halfplane
from ..hypotheses import Dataset, error_count, fit_zero_error
from .baselines import voting_accuracy

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

PartitionStrategy: TypeAlias = Literal["random", "by-region", "voting-killer"]
PARTITION_STRATEGIES: tuple[str, ...] = get_args(PartitionStrategy)

IndexingKind: TypeAlias = Literal["interval", "rect"]

# Named experiment datasets and the partition each one uses.
DATASET_STRATEGIES: dict[str, PartitionStrategy] = {
    "data1": "random",
    "data2": "by-region",
    "data3": "voting-killer",
}

MAX_RESEEDS = 100
VOTING_ACCURACY_GATE = 60.0

# Voting-killer boxes: A-type classes sit above/below the x-axis close to the
# vertical separator, B-type classes far apart in the opposite orientation.
_A_GAP = 0.05
_A_LIFT = 2.0
_B_SPAN = (20.0, 60.0)
_EXTRA_SPREAD = 0.25

# Circle construction, relative to the radius.
_PAIR_HALF_ANGLE = math.sqrt(1.2e-3)
_PAIR_RADIAL = 1e-3
_QUERY_RADIAL = 2.5e-4


def _rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(seed)


def _unit(direction: Sequence[float] | np.ndarray | None, d: int) -> np.ndarray:
    if direction is None:
        u = np.zeros(d)
        u[0] = 1.0
        return u
    u = np.asarray(direction, dtype=float)
    if u.shape != (d,) or not np.linalg.norm(u) > 0:
        msg = f"direction must be a non-zero vector of length {d}"
        raise ValueError(msg)
    return u / np.linalg.norm(u)


def _tangent(u: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to ``u``."""
    if len(u) == 1:
        return np.ones(1)
    e = np.zeros(len(u))
    e[int(np.argmin(np.abs(u)))] = 1.0
    t = e - (e @ u) * u
    return t / np.linalg.norm(t)


def gen_separable(
    n_per_class: int,
    d: int = 2,
    margin: float = 1.0,
    direction: Sequence[float] | np.ndarray | None = None,
    seed: int | np.random.SeedSequence = 0,
) -> Dataset:
    """Two unit-variance clouds folded apart along ``direction``.

    Each point's coordinate along ``direction`` is replaced by its absolute
    value plus ``margin / 2`` (positives) or the negation of that (negatives),
    so the classes are at least ``margin`` apart along ``direction``.
    Positives come first, then negatives.
    """
    if margin <= 0:
        msg = f"margin must be positive, got {margin}"
        raise ValueError(msg)
    if n_per_class < 1:
        msg = f"n_per_class must be positive, got {n_per_class}"
        raise ValueError(msg)
    rng = _rng(seed)
    u = _unit(direction, d)
    clouds = []
    for sign in (1.0, -1.0):
        cloud = rng.standard_normal((n_per_class, d))
        along = cloud @ u
        cloud += (sign * (np.abs(along) + 0.5 * margin) - along)[:, None] * u
        clouds.append(cloud)
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return Dataset(np.vstack(clouds), labels)


@dataclass(frozen=True)
class PartitionSpec:
    """How a dataset is split among ``k`` parties.

    Attributes:
        strategy: ``random`` deals each class out uniformly; ``by-region``
            gives each party a contiguous slab of each class across the
            separating direction; ``voting-killer`` builds a dedicated
            instance instead of splitting one.
        k: Number of parties.
        seed: Seed of the split.
    """

    strategy: PartitionStrategy
    k: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in PARTITION_STRATEGIES:
            msg = f"Unknown partition strategy {self.strategy!r}"
            raise ValueError(msg)
        if self.k < 1:
            msg = f"k must be positive, got {self.k}"
            raise ValueError(msg)


def partition(D: Dataset, spec: PartitionSpec, direction: Sequence[float] | np.ndarray | None = None) -> list[Dataset]:
    """Split ``D`` into ``spec.k`` disjoint parts covering it.

    Each class is dealt out separately so every part gets a near-equal share
    of each class.

    Raises:
        ValueError: For the ``voting-killer`` strategy, or when a part would be empty.
    """
    if spec.strategy == "voting-killer":
        msg = "voting-killer instances are built by gen_voting_killer, not by splitting a dataset"
        raise ValueError(msg)
    if len(D) < spec.k:
        msg = f"Cannot split {len(D)} points among {spec.k} parties"
        raise ValueError(msg)
    rng = _rng(spec.seed)
    slab_axis = _tangent(_unit(direction, D.dim))
    chunks: list[list[np.ndarray]] = [[] for _ in range(spec.k)]
    for label in (1, -1):
        index = np.flatnonzero(D.labels == label)
        if spec.strategy == "random":
            index = rng.permutation(index)
        else:
            index = index[np.argsort(D.points[index] @ slab_axis, kind="stable")]
        for i, chunk in enumerate(np.array_split(index, spec.k)):
            chunks[i].append(chunk)
    parts = []
    for i, pieces in enumerate(chunks):
        index = np.sort(np.concatenate(pieces))
        if len(index) == 0:
            msg = f"Party {i + 1} would receive no points"
            raise ValueError(msg)
        parts.append(D.subset(index))
    return parts


# -- voting-killer ---------------------------------------------------------


def _box(rng: np.random.Generator, n: int, x: tuple[float, float], y: tuple[float, float], dim: int) -> np.ndarray:
    rows = np.column_stack([rng.uniform(*x, size=n), rng.uniform(*y, size=n)])
    if dim > 2:  # noqa: PLR2004
        rows = np.column_stack([rows, rng.uniform(-_EXTRA_SPREAD, _EXTRA_SPREAD, size=(n, dim - 2))])
    return rows


def _voting_killer_part(rng: np.random.Generator, n_per_class: int, a_type: bool, dim: int) -> Dataset:
    if a_type:
        pos = _box(rng, n_per_class, (_A_GAP, _A_GAP + 1.0), (_A_LIFT, _A_LIFT + 1.0), dim)
        neg = _box(rng, n_per_class, (-_A_GAP - 1.0, -_A_GAP), (-_A_LIFT - 1.0, -_A_LIFT), dim)
    else:
        lo, hi = _B_SPAN
        pos = _box(rng, n_per_class, (1.0, 2.0), (-hi, -lo), dim)
        neg = _box(rng, n_per_class, (-2.0, -1.0), (lo, hi), dim)
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return Dataset(np.vstack([pos, neg]), labels)


def gen_voting_killer(
    n_per_node: int,
    seed: int = 0,
    k: int = 2,
    dim: int = 2,
) -> tuple[Dataset, ...]:
    """Parts whose union is split by ``x = 0`` but whose local separators are not.

    Even-indexed parties hold classes stacked along ``+y`` just either side of
    the vertical line; odd-indexed parties hold classes stacked along ``-y``
    far from it. Each local max-margin separator is nearly horizontal, and the
    narrow-margin one is the more confident on far points, so confidence
    voting gets roughly half the union wrong.

    Raises:
        ValueError: If ``n_per_node`` is odd or ``k`` is odd.
        ConstructionFailed: If no seed in ``MAX_RESEEDS`` attempts passes the
            separability and voting checks.
    """
    if n_per_node < 2 or n_per_node % 2:  # noqa: PLR2004
        msg = f"n_per_node must be even and at least 2, got {n_per_node}"
        raise ValueError(msg)
    if k < 2 or k % 2:  # noqa: PLR2004
        msg = f"The voting-killer needs an even number of parties, got k={k}"
        raise ValueError(msg)
    axis = np.zeros(dim)
    axis[0] = 1.0
    for attempt in range(MAX_RESEEDS):
        rng = _rng(np.random.SeedSequence([seed, attempt]))
        parts = tuple(_voting_killer_part(rng, n_per_node // 2, i % 2 == 0, dim) for i in range(k))
        union = Dataset.concat(parts)
        if error_count(Halfplane(axis, 0.0), union).misclassified_count:
            continue
        accuracy = voting_accuracy(parts)
        if accuracy <= VOTING_ACCURACY_GATE:
            if attempt:
                logger.info("voting-killer accepted after %d re-seeds", attempt)
            return parts
        logger.debug("voting-killer attempt %d: voting accuracy %.1f%%", attempt, accuracy)
    msg = f"No voting-killer instance found in {MAX_RESEEDS} attempts from seed {seed}"
    raise ConstructionFailed(msg)


def make_dataset(name: str, k: int = 2, n_per_class: int = 250, dim: int = 2, seed: int = 0, margin: float = 1.0) -> list[Dataset]:
    """Build one of the named experiment datasets, already split into ``k`` parts.

    ``n_per_class`` is per party, so each party holds ``2 * n_per_class`` points.
    """
    try:
        strategy = DATASET_STRATEGIES[name]
    except KeyError:
        msg = f"Unknown dataset {name!r}; choose from {', '.join(DATASET_STRATEGIES)}"
        raise ValueError(msg) from None
    if strategy == "voting-killer":
        return list(gen_voting_killer(2 * n_per_class, seed=seed, k=k, dim=dim))
    root = np.random.SeedSequence(seed)
    data_seed, split_seed = root.spawn(2)
    D = gen_separable(k * n_per_class, dim, margin, seed=data_seed)
    split = int(split_seed.generate_state(1)[0])
    return partition(D, PartitionSpec(strategy, k, split))


# -- lower-bound constructions ----------------------------------------------


def circle_pairs(epsilon: float) -> int:
    """Number of negative pairs, ``1 / (2 * epsilon)``, which must be a whole number."""
    if not 0.0 < epsilon < 0.5:  # noqa: PLR2004
        msg = f"epsilon must lie in (0, 0.5), got {epsilon}"
        raise ValueError(msg)
    pairs = round(1.0 / (2.0 * epsilon))
    if abs(pairs - 1.0 / (2.0 * epsilon)) > 1e-9 * pairs:
        msg = f"1/(2*epsilon) must be an integer, got {1.0 / (2.0 * epsilon)}"
        raise ValueError(msg)
    return pairs


@dataclass(frozen=True)
class CircleLayout:
    """Angles and radius of a circle instance; pair ``j`` is centred at ``angles[j]``."""

    angles: np.ndarray
    radius: float

    def tangent(self, j: int, bit: int) -> Halfplane:
        """Tangent at pair ``j`` tilted towards its inside point, assuming ``bit``.

        Bit 0 puts the counterclockwise point inside, so the normal turns
        counterclockwise by the pair's half-angle; bit 1 turns it the other way.
        """
        tilt = _PAIR_HALF_ANGLE if bit == 0 else -_PAIR_HALF_ANGLE
        theta = float(self.angles[j]) + tilt
        query = (1.0 - _QUERY_RADIAL) * math.cos(tilt)
        inside = 1.0 - _PAIR_RADIAL
        return Halfplane(np.array([math.cos(theta), math.sin(theta)]), 0.5 * (query + inside) * self.radius)


def circle_layout(epsilon: float, seed: int = 0, radius: float = 1.0) -> CircleLayout:
    """Pair centres evenly spaced at ``2*pi/(pairs+1)``, rotated by a seeded angle."""
    pairs = circle_pairs(epsilon)
    start = float(_rng(seed).uniform(0.0, 2.0 * math.pi))
    angles = start + 2.0 * math.pi * np.arange(1, pairs + 1) / (pairs + 1)
    return CircleLayout(angles, radius)


def _polar(angle: float, r: float) -> tuple[float, float]:
    return r * math.cos(angle), r * math.sin(angle)


def gen_circle_lowerbound(
    epsilon: float,
    case_bits: Sequence[int],
    b_index: int,
    seed: int = 0,
    multiplicity: int = 1,
    radius: float = 1.0,
) -> tuple[Dataset, Dataset]:
    """Negative pairs around a circle for ``A`` and one query positive for ``B``.

    Bit 0 puts a pair's counterclockwise point just inside the circle and
    its clockwise point just outside; bit 1 swaps them. ``B``'s positive sits
    just inside the circle midway between the points of pair ``b_index``.
    Every point is repeated ``multiplicity`` times.

    Raises:
        ConstructionFailed: If the tangent for the true bit errs, or the
            wrong-bit tangent does not err on exactly the outside point.
    """
    layout = circle_layout(epsilon, seed, radius)
    pairs = len(layout.angles)
    bits = [int(b) for b in case_bits]
    if len(bits) != pairs or any(b not in (0, 1) for b in bits):
        msg = f"case_bits must hold {pairs} zeros or ones"
        raise ValueError(msg)
    if not 0 <= b_index < pairs:
        msg = f"b_index must lie in [0, {pairs}), got {b_index}"
        raise ValueError(msg)
    if multiplicity < 1:
        msg = f"multiplicity must be positive, got {multiplicity}"
        raise ValueError(msg)

    inner, outer = radius * (1.0 - _PAIR_RADIAL), radius * (1.0 + _PAIR_RADIAL)
    rows = []
    for centre, bit in zip(layout.angles, bits, strict=True):
        ccw_r, cw_r = (inner, outer) if bit == 0 else (outer, inner)
        rows.append(_polar(centre + _PAIR_HALF_ANGLE, ccw_r))
        rows.append(_polar(centre - _PAIR_HALF_ANGLE, cw_r))
    a_points = np.repeat(np.array(rows), multiplicity, axis=0)
    b_points = np.repeat(np.array([_polar(float(layout.angles[b_index]), radius * (1.0 - _QUERY_RADIAL))]), multiplicity, axis=0)
    D_A = Dataset(a_points, -np.ones(len(a_points), dtype=np.int64))
    D_B = Dataset(b_points, np.ones(len(b_points), dtype=np.int64))

    union = Dataset.concat([D_A, D_B])
    right = error_count(layout.tangent(b_index, bits[b_index]), union).misclassified_count
    wrong = error_count(layout.tangent(b_index, 1 - bits[b_index]), union).misclassified_count
    if right != 0 or wrong != multiplicity:
        msg = f"Circle construction check failed: tangent errors {right} and {wrong}"
        raise ConstructionFailed(msg)
    return D_A, D_B


def _indexing_position(i: int) -> int:
    return 2 * (i + 1)


def gen_indexing_instances(kind: IndexingKind, n: int, bits: Sequence[int], i: int) -> tuple[Dataset, Dataset]:
    """Realizability instances that encode ``bits[i]``.

    ``interval``: ``A`` holds negatives at the even positions ``2(j+1)`` of
    its set bits plus an anchor negative at 0; ``B`` holds positives at
    ``2i+1`` and ``2i+3`` and negatives at every other odd position up to
    ``2n+1``. ``rect``: both share a positive anchor ``(2n+2, 0)`` and a
    negative anchor ``(0, 2n+2)``; ``A`` adds diagonal negatives at
    ``(2(j+1), 2(j+1))`` for its set bits and ``B`` a positive at
    ``(2i+1, 2i+3)``. A zero-error classifier exists iff ``bits[i] == 0``.

    Raises:
        ConstructionFailed: If the realizability check disagrees with ``bits[i]``.
    """
    bit_list = [int(b) for b in bits]
    if n < 1 or len(bit_list) != n or any(b not in (0, 1) for b in bit_list):
        msg = f"bits must hold {n} zeros or ones"
        raise ValueError(msg)
    if not 0 <= i < n:
        msg = f"index must lie in [0, {n}), got {i}"
        raise ValueError(msg)
    set_positions = [_indexing_position(j) for j, b in enumerate(bit_list) if b]

    match kind:
        case "interval":
            a_points = np.array([0.0, *set_positions])[:, None]
            D_A = Dataset(a_points, -np.ones(len(a_points), dtype=np.int64))
            odd = np.arange(1, 2 * n + 2, 2, dtype=float)
            b_labels = np.where((odd == 2 * i + 1) | (odd == 2 * i + 3), 1, -1)
            D_B = Dataset(odd[:, None], b_labels)
            family = "interval"
        case "rect":
            anchors = np.array([[2.0 * n + 2.0, 0.0], [0.0, 2.0 * n + 2.0]])
            diagonal = np.array([[p, p] for p in set_positions], dtype=float).reshape(-1, 2)
            D_A = Dataset(np.vstack([anchors, diagonal]), np.array([1, -1] + [-1] * len(diagonal)))
            D_B = Dataset(np.vstack([anchors, [[2.0 * i + 1.0, 2.0 * i + 3.0]]]), np.array([1, -1, 1]))
            family = "rectangle"
        case _:
            msg = f"Unknown indexing kind {kind!r}"
            raise ValueError(msg)

    try:
        fit_zero_error(family, Dataset.concat([D_A, D_B]))
        realizable = True
    except NotRealizable:
        realizable = False
    if realizable != (bit_list[i] == 0):
        msg = f"{kind} indexing instance realizability {realizable} disagrees with bit {bit_list[i]}"
        raise ConstructionFailed(msg)
    return D_A, D_B
