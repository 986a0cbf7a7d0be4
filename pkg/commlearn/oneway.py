"""One-way protocols: data flows only forward, from each party to the next.

Two-party protocols name the parties ``A`` and ``B``; chains name them
``P1 .. Pk``. Every protocol returns the final hypothesis together with the
transcript of what was sent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import NotRealizable
from .harness.ledger import MessageKind, Transcript
from .hypotheses import AxisRect, Dataset, Hypothesis, Interval, Threshold, epsilon_net_sample, error_count, fit_zero_error

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .hypotheses import FamilyTag, SampleSizeSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainTopology:
    """Parties ``P1 .. Pk`` where ``P_i`` may only send to ``P_{i+1}``."""

    k: int
    order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.k < 1:
            msg = f"A chain needs at least one party, got k={self.k}"
            raise ValueError(msg)
        if not self.order:
            object.__setattr__(self, "order", tuple(f"P{i + 1}" for i in range(self.k)))
        if len(self.order) != self.k or len(set(self.order)) != self.k:
            msg = "Chain order must name each party exactly once"
            raise ValueError(msg)

    def hop(self, i: int) -> tuple[str, str]:
        """Sender and receiver of the message leaving position ``i``."""
        return self.order[i], self.order[i + 1]

    def respected_by(self, transcript: Transcript) -> bool:
        return transcript.respects_order(self.order)


@dataclass
class ReservoirState:
    """Uniform sample of capacity ``capacity`` over every point streamed so far.

    Attributes:
        seen_count: Number of points streamed in, the ``m_i`` forwarded along a chain.
    """

    capacity: int
    dim: int
    seen_count: int = 0
    _points: list[np.ndarray] = field(default_factory=list)
    _labels: list[int] = field(default_factory=list)

    def offer(self, data: Dataset, rng: np.random.Generator) -> None:
        """Stream ``data`` through the reservoir (Algorithm R)."""
        for point, label in zip(data.points, data.labels, strict=True):
            self.seen_count += 1
            if len(self._points) < self.capacity:
                self._points.append(point)
                self._labels.append(int(label))
                continue
            slot = int(rng.integers(0, self.seen_count))
            if slot < self.capacity:
                self._points[slot] = point
                self._labels[slot] = int(label)

    def __len__(self) -> int:
        return len(self._points)

    @property
    def sample(self) -> Dataset | None:
        if not self._points:
            return None
        return Dataset(np.array(self._points), np.array(self._labels))


def _union(*parts: Dataset | None) -> Dataset:
    return Dataset.concat([p for p in parts if p is not None])


def _points_of(values: Sequence[float], labels: Sequence[int]) -> Dataset | None:
    if not values:
        return None
    return Dataset(np.array(values, dtype=float).reshape(-1, 1), np.array(labels))


# -- thresholds -----------------------------------------------------------


def _threshold_summary(D: Dataset, polarity: int) -> Dataset | None:
    """Extreme points that pin down every threshold consistent with ``D``."""
    x = D.points[:, 0]
    pos, neg = x[D.labels == 1], x[D.labels == -1]
    values: list[float] = []
    labels: list[int] = []
    if len(pos):
        values.append(float(pos.max() if polarity == 1 else pos.min()))
        labels.append(1)
    if len(neg):
        values.append(float(neg.min() if polarity == 1 else neg.max()))
        labels.append(-1)
    return _points_of(values, labels)


def _negotiated_polarity(D: Dataset) -> int:
    """Orientation implied by a party's data, +1 when it has only one class."""
    if not D.has_both_classes:
        return 1
    x = D.points[:, 0]
    return 1 if x[D.labels == 1].max() < x[D.labels == -1].min() else -1


def _one_class_summary(D: Dataset) -> Dataset:
    x = D.points[:, 0]
    label = int(D.labels[0])
    values = sorted({float(x.min()), float(x.max())})
    return _points_of(values, [label] * len(values))  # type: ignore[return-value]


def protocol_threshold(D_A: Dataset, D_B: Dataset, *, polarity: int | None = 1) -> tuple[Threshold, Transcript]:
    """A sends its largest positive and smallest negative; B fits on the union.

    With ``polarity=None`` the orientation is negotiated: A sends its own
    orientation as a scalar, and a one-class A sends both extremes of its class
    so B can fit either orientation.

    Raises:
        NotRealizable: If no consistent threshold exists.
    """
    transcript = Transcript()
    if polarity is None:
        sent_polarity = _negotiated_polarity(D_A)
        summary = _threshold_summary(D_A, sent_polarity) if D_A.has_both_classes else _one_class_summary(D_A)
        fit_polarity = sent_polarity if D_A.has_both_classes else None
    else:
        sent_polarity = polarity
        summary = _threshold_summary(D_A, polarity)
        fit_polarity = polarity
    transcript.record(1, "A", "B", MessageKind.SUMMARY, None if summary is None else summary.points, [float(sent_polarity)])
    h = fit_zero_error("threshold", _union(D_B, summary), polarity=fit_polarity)
    transcript.rounds = 1
    return h, transcript  # type: ignore[return-value]


# -- intervals ------------------------------------------------------------


def _interval_summary(D: Dataset) -> Dataset | None:
    """The two boundary pairs of D's positive span, or None when D has no positives."""
    x = D.points[:, 0]
    pos, neg = x[D.labels == 1], x[D.labels == -1]
    if len(pos) == 0:
        return None
    lo, hi = float(pos.min()), float(pos.max())
    below, above = neg[neg < lo], neg[neg > hi]
    values, labels = [lo], [1]
    if len(below):
        values.append(float(below.max()))
        labels.append(-1)
    if hi != lo:
        values.append(hi)
        labels.append(1)
    if len(above):
        values.append(float(above.min()))
        labels.append(-1)
    return _points_of(values, labels)


def protocol_interval(D_A: Dataset, D_B: Dataset) -> tuple[Interval, Transcript]:
    """A sends the boundary pairs around its positives; B fits on the union.

    When A has no positives it sends nothing and B returns the smallest
    interval around its own positives.

    Raises:
        NotRealizable: If no consistent interval exists.
    """
    transcript = Transcript()
    summary = _interval_summary(D_A)
    transcript.record(1, "A", "B", MessageKind.SUMMARY, None if summary is None else summary.points)
    h = fit_zero_error("interval", _union(D_B, summary), minimal=summary is None, inside_label=1)
    transcript.rounds = 1
    return h, transcript  # type: ignore[return-value]


# -- axis-aligned rectangles ----------------------------------------------


def _class_boxes(D: Dataset) -> tuple[AxisRect, AxisRect]:
    boxes = []
    for label in (1, -1):
        members = D.points[D.labels == label]
        boxes.append(AxisRect.bounding(members, label) if len(members) else AxisRect.nothing(D.dim, label))
    return boxes[0], boxes[1]


def _box_scalars(pos_box: AxisRect, neg_box: AxisRect) -> list[float]:
    """Both boxes as ``2 * 2d`` bounds followed by one empty flag per class."""
    values: list[float] = []
    for box in (pos_box, neg_box):
        values.extend(box.mins.tolist())
        values.extend(box.maxs.tolist())
    values.extend([float(pos_box.empty), float(neg_box.empty)])
    return values


def _covers_a_face(box: AxisRect, other: AxisRect) -> bool:
    """Whether ``box`` contains a whole face of ``other``.

    Every face of a bounding box holds at least one of the points it was
    built from, so such a box contains a point of the other class.
    """
    if box.empty or other.empty:
        return False
    spans = (box.mins <= other.mins) & (other.maxs <= box.maxs)
    for j in range(box.dim):
        rest = np.delete(spans, j)
        if not np.all(rest):
            continue
        if box.mins[j] <= other.mins[j] <= box.maxs[j] or box.mins[j] <= other.maxs[j] <= box.maxs[j]:
            return True
    return False


def _choose_inside(pos_box: AxisRect, neg_box: AxisRect, local: Dataset) -> AxisRect:
    """Pick the inside class from the merged boxes.

    A class is ruled out as inside when its box holds one of the receiver's
    points of the other class or covers a face of the other class's box.
    Neither test ever rules out a consistent choice. When both survive the
    positive box is kept; a box that contains the other never survives, so the
    smaller box always wins.

    Raises:
        NotRealizable: If both classes are ruled out.
    """
    if pos_box.empty:
        return pos_box
    if neg_box.empty:
        return neg_box
    local_pos = local.points[local.labels == 1]
    local_neg = local.points[local.labels == -1]
    pos_ok = not _covers_a_face(pos_box, neg_box) and not np.any(pos_box.classify(local_neg) == 1)
    neg_ok = not _covers_a_face(neg_box, pos_box) and not np.any(neg_box.classify(local_pos) == -1)
    if pos_ok:
        return pos_box
    if neg_ok:
        logger.debug("rectangle: negatives inside %s..%s", neg_box.mins, neg_box.maxs)
        return neg_box
    msg = "Neither class box can be the inside of a consistent rectangle"
    raise NotRealizable(msg)


def protocol_rectangle(D_A: Dataset, D_B: Dataset, d: int | None = None) -> tuple[AxisRect, Transcript]:
    """A sends the bounding boxes of both its classes; B merges them with its own.

    Raises:
        NotRealizable: If the merged boxes do not give a zero-error rectangle on B's data.
    """
    dim = d if d is not None else D_A.dim
    transcript = Transcript()
    a_pos, a_neg = _class_boxes(D_A)
    transcript.record(1, "A", "B", MessageKind.SUMMARY, None, _box_scalars(a_pos, a_neg))
    b_pos, b_neg = _class_boxes(D_B)
    h = _choose_inside(a_pos.merge(b_pos), a_neg.merge(b_neg), D_B)
    if h.dim != dim:
        msg = f"Rectangle protocol asked for d={dim} but data has d={h.dim}"
        raise NotRealizable(msg)
    if error_count(h, D_B).misclassified_count:
        msg = "Merged boxes misclassify local points"
        raise NotRealizable(msg)
    transcript.rounds = 1
    return h, transcript


# -- sampling -------------------------------------------------------------


def protocol_sampling_two_party(
    D_A: Dataset,
    D_B: Dataset,
    family: FamilyTag,
    spec: SampleSizeSpec,
    seed: int | np.random.SeedSequence,
) -> tuple[Hypothesis, Transcript]:
    """A sends a uniform epsilon-net sample; B fits zero error on the union.

    Raises:
        NotRealizable: If B's fit fails.
    """
    transcript = Transcript()
    sample = epsilon_net_sample(D_A, spec, seed)
    transcript.record(1, "A", "B", MessageKind.SAMPLE, sample.points)
    h = fit_zero_error(family, _union(D_B, sample))
    transcript.rounds = 1
    return h, transcript


def protocol_chain_sampling(
    parts: Sequence[Dataset],
    family: FamilyTag,
    spec: SampleSizeSpec,
    seed: int | np.random.SeedSequence,
) -> tuple[Hypothesis, Transcript]:
    """Forward a reservoir sample and its stream count along the chain.

    Each party streams its own data into the reservoir it received and passes
    the reservoir on; the last party fits on the reservoir plus its own data.

    Raises:
        NotRealizable: If the last party's fit fails.
    """
    chain = ChainTopology(len(parts))
    transcript = Transcript()
    if chain.k == 1:
        return fit_zero_error(family, parts[0]), transcript
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in root.spawn(chain.k)]
    reservoir = ReservoirState(capacity=spec.size, dim=parts[0].dim)
    for i, part in enumerate(parts[:-1]):
        reservoir.offer(part, rngs[i])
        sender, receiver = chain.hop(i)
        sample = reservoir.sample
        transcript.record(i + 1, sender, receiver, MessageKind.SAMPLE, None if sample is None else sample.points, [float(reservoir.seen_count)])
        logger.debug("%s forwards %d sampled points out of %d seen", sender, len(reservoir), reservoir.seen_count)
    h = fit_zero_error(family, _union(parts[-1], reservoir.sample))
    transcript.rounds = chain.k - 1
    return h, transcript


# -- exact chains ---------------------------------------------------------


def protocol_chain_exact(parts: Sequence[Dataset], family: FamilyTag) -> tuple[Hypothesis, Transcript]:
    """Pass a refined constraint summary along the chain; the last party fits.

    Thresholds forward the current extreme pair, intervals the boundary pairs
    of all positives seen plus a flag recording whether a party without
    positives had to drop its negatives, and rectangles the merged class boxes.

    Raises:
        NotRealizable: If the final fit fails.
        ValueError: For families without an exact chain protocol.
    """
    chain = ChainTopology(len(parts))
    transcript = Transcript()
    if chain.k == 1:
        return fit_zero_error(family, parts[0]), transcript

    match family:
        case "threshold":
            summary: Dataset | None = None
            for i, part in enumerate(parts[:-1]):
                summary = _threshold_summary(_union(part, summary), 1)
                sender, receiver = chain.hop(i)
                transcript.record(i + 1, sender, receiver, MessageKind.SUMMARY, None if summary is None else summary.points, [1.0])
            h: Hypothesis = fit_zero_error("threshold", _union(parts[-1], summary), polarity=1)
        case "interval":
            summary = None
            dropped = False
            for i, part in enumerate(parts[:-1]):
                merged = _union(part, summary)
                summary = _interval_summary(merged)
                dropped = dropped or summary is None
                sender, receiver = chain.hop(i)
                transcript.record(i + 1, sender, receiver, MessageKind.SUMMARY, None if summary is None else summary.points, [float(dropped)])
            h = fit_zero_error("interval", _union(parts[-1], summary), minimal=dropped, inside_label=1)
        case "rectangle":
            pos_box, neg_box = _class_boxes(parts[0])
            for i in range(chain.k - 1):
                if i > 0:
                    own_pos, own_neg = _class_boxes(parts[i])
                    pos_box, neg_box = pos_box.merge(own_pos), neg_box.merge(own_neg)
                sender, receiver = chain.hop(i)
                transcript.record(i + 1, sender, receiver, MessageKind.SUMMARY, None, _box_scalars(pos_box, neg_box))
            last_pos, last_neg = _class_boxes(parts[-1])
            h = _choose_inside(pos_box.merge(last_pos), neg_box.merge(last_neg), parts[-1])
            if error_count(h, parts[-1]).misclassified_count:
                msg = "Merged boxes misclassify the last party's points"
                raise NotRealizable(msg)
        case _:
            msg = f"No exact chain protocol for {family!r}"
            raise ValueError(msg)
    transcript.rounds = chain.k - 1
    return h, transcript


def local_fit(D: Dataset, family: FamilyTag) -> tuple[Hypothesis, Transcript]:
    """Fit on one party's data alone; nothing is sent."""
    return fit_zero_error(family, D), Transcript()
