"""Two-way protocols for linear separators.

Parties take turns proposing a separator direction with a small support set.
The receiver either accepts a parallel classifier inside the proposal's margin
band (when it has at most ``epsilon`` local error) or names the side of the
proposed direction where every consistent separator must lie and sends back
its own proposal. Each party keeps an arc of still-possible normal directions
and the set of its points whose label some consistent separator could still
get wrong; the Median support picks directions that halve that set.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Literal, TypeAlias

import numpy as np

from .errors import (
    AmbiguousWitness,
    EmptyFeasible,
    EpochCapExceeded,
    InvalidChord,
    NoUncertainPoints,
    NotSeparable,
    RoundCapExceeded,
)
from .geometry import (
    TOL,
    ConvexPolygon,
    Direction,
    DirectionInterval,
    Halfplane,
    Side,
    convex_hull,
    feasible_interval,
    interleaved_median,
    interval_side,
    max_margin_separator,
    project_to_boundary,
)
from .harness.ledger import MessageKind, Transcript
from .hypotheses import Dataset, LabeledPoint, constant_halfplane, fit_zero_error, max_margin_nd

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

SupportFn: TypeAlias = Literal["median", "maxmarg"]
SUPPORT_FNS: tuple[SupportFn, ...] = ("median", "maxmarg")

GRID_CANDIDATES = 32
MAX_WITNESSES = 8


def median_round_cap(epsilon: float) -> int:
    return math.ceil(math.log2(1.0 / epsilon)) + 4


def maxmarg_round_cap(epsilon: float) -> int:
    return 10 * math.ceil(math.log2(1.0 / epsilon))


# -- messages -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupportMessage:
    """A proposed direction with its support set.

    Attributes:
        sender: Proposing party.
        normal: Unit normal of the proposed separators, pointing at the positives.
        band: Offsets ``(lo, hi)`` between the sender's known extremes along
            ``normal``; every offset strictly inside gives zero error on what
            the sender knows.
        points: Support points, two to three rows.
        labels: Their labels.
        interval: The sender's current arc of directions, when it tracks one.
        fallback: Median proposal whose direction is not the median edge.
    """

    sender: str
    normal: np.ndarray
    band: tuple[float, float]
    points: np.ndarray
    labels: np.ndarray
    interval: DirectionInterval | None = None
    fallback: bool = False

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def v(self) -> Direction:
        return Direction.from_vector(self.normal)

    @property
    def margin(self) -> float:
        return 0.5 * (self.band[1] - self.band[0])

    @property
    def separator(self) -> Halfplane:
        return Halfplane(self.normal, 0.5 * (self.band[0] + self.band[1]))

    def scalars(self) -> list[float]:
        """Non-point payload: direction, band and (when tracked) the interval ends."""
        values = [self.v.theta] if self.dim == 2 else self.normal.tolist()  # noqa: PLR2004
        values.extend(self.band)
        if self.interval is not None:
            values.extend([self.interval.v_l.theta, self.interval.v_r.theta])
        return values

    def as_dataset(self) -> Dataset:
        return Dataset(self.points, self.labels)


@dataclass(frozen=True, eq=False)
class Terminate:
    """Acceptance of a parallel classifier.

    Attributes:
        h: The accepted classifier.
        offset_range: Offsets along the proposal normal, around ``h``, whose
            local error stays within budget.
        error: Local misclassifications of ``h``.
        low_point: Local negative pinning the lower end of the range, if any.
        high_point: Local positive pinning the upper end of the range, if any.
    """

    h: Halfplane
    offset_range: tuple[float, float]
    error: int
    low_point: np.ndarray | None = None
    high_point: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Rotate:
    """Rejection naming the side of the proposal that survives, plus a counter-proposal.

    ``sign`` is +1 for ``(v_l, v)`` and -1 for ``(v, v_r)``; 0 when no
    direction arc is tracked.
    """

    sign: int
    counter: SupportMessage
    witness: tuple[np.ndarray, np.ndarray] | None = None


Reply: TypeAlias = Terminate | Rotate


# -- node state -----------------------------------------------------------


def _empty_rows(dim: int) -> np.ndarray:
    return np.zeros((0, dim))


@dataclass(frozen=True, eq=False)
class NodeState:
    """One party's protocol memory.

    Attributes:
        name: Party id used in transcripts.
        own: The party's data.
        received_points: Every support point received so far (W).
        received_labels: Their labels.
        sent_points: Every support point this party has sent.
        sent_labels: Their labels.
        interval: Surviving arc of normal directions; None in d > 2 or
            before the party knows points of both classes.
        uncertain: Mask over ``own`` of points some consistent separator could
            still misclassify.
        pending: The party's outstanding proposal.
    """

    name: str
    own: Dataset
    received_points: np.ndarray
    received_labels: np.ndarray
    sent_points: np.ndarray
    sent_labels: np.ndarray
    interval: DirectionInterval | None
    uncertain: np.ndarray
    pending: SupportMessage | None = None

    @property
    def dim(self) -> int:
        return self.own.dim

    @property
    def known_points(self) -> np.ndarray:
        return np.vstack([self.sent_points, self.received_points])

    @property
    def known_labels(self) -> np.ndarray:
        return np.concatenate([self.sent_labels, self.received_labels])

    @property
    def received(self) -> Dataset | None:
        if len(self.received_points) == 0:
            return None
        return Dataset(self.received_points, self.received_labels)

    @property
    def knowledge(self) -> Dataset:
        """Own data together with everything received."""
        received = self.received
        return self.own if received is None else Dataset.concat([self.own, received])

    @property
    def can_propose(self) -> bool:
        return self.knowledge.has_both_classes

    @property
    def uncertain_count(self) -> int:
        return int(np.count_nonzero(self.uncertain))

    @property
    def uncertain_points(self) -> list[LabeledPoint]:
        return list(self.own.subset(np.flatnonzero(self.uncertain))) if self.uncertain_count else []

    def _sota_hull(self, label: int) -> ConvexPolygon | None:
        members = self.own.points[(self.own.labels == label) & ~self.uncertain]
        return convex_hull(members) if len(members) else None

    @property
    def sota_pos(self) -> ConvexPolygon | None:
        """Hull of own positives no consistent separator can misclassify."""
        return self._sota_hull(1)

    @property
    def sota_neg(self) -> ConvexPolygon | None:
        return self._sota_hull(-1)

    def boundary_pair(self, label: int) -> tuple[np.ndarray, np.ndarray] | None:
        """Vertices of the own ``label`` hull extreme toward the two arc ends.

        Their chord cuts the part of the hull that can still face a separator
        off from the rest.
        """
        members = self.own.points[self.own.labels == label]
        if self.interval is None or len(members) == 0:
            return None
        toward_l, toward_r = self.interval.v_l.unit, self.interval.v_r.unit
        if label == 1:
            toward_l, toward_r = -toward_l, -toward_r
        return _boundary_pair(convex_hull(members).vertices, toward_l, toward_r)


def _unique_rows(points: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(points) == 0:
        return points, labels
    table = np.column_stack([points, labels])
    _, index = np.unique(table, axis=0, return_index=True)
    index = np.sort(index)
    return points[index], labels[index]


def initial_state(name: str, own: Dataset) -> NodeState:
    """State before any exchange: every point uncertain, arc from own data alone."""
    interval = None
    if own.dim == 2 and own.has_both_classes:  # noqa: PLR2004
        try:
            interval = feasible_interval(own.positives, own.negatives)
        except NotSeparable as exc:
            raise EmptyFeasible(str(exc)) from exc
    return NodeState(
        name=name,
        own=own,
        received_points=_empty_rows(own.dim),
        received_labels=np.zeros(0, dtype=np.int64),
        sent_points=_empty_rows(own.dim),
        sent_labels=np.zeros(0, dtype=np.int64),
        interval=interval,
        uncertain=np.ones(len(own), dtype=bool) if own.dim == 2 else np.zeros(len(own), dtype=bool),  # noqa: PLR2004
    )


# -- sets of uncertainty --------------------------------------------------


def _misclassifiable(
    points: np.ndarray,
    labels: np.ndarray,
    known_points: np.ndarray,
    known_labels: np.ndarray,
    interval: DirectionInterval | None,
) -> np.ndarray:
    """Mask of points some separator consistent with the known points can get wrong.

    A negative ``q`` can be labelled positive iff some direction ``u`` in the
    arc has ``<u, a - b> > 0`` for every known positive ``a`` and negative
    ``b`` and also ``<u, q - b> > 0`` for every known negative ``b``; positives
    are symmetric.
    """
    kp = known_points[known_labels == 1]
    kn = known_points[known_labels == -1]
    pairs = (kp[:, None, :] - kn[None, :, :]).reshape(-1, 2)
    out = np.zeros(len(points), dtype=bool)
    for label in (1, -1):
        index = np.flatnonzero(labels == label)
        if len(index) == 0:
            continue
        q = points[index]
        per = q[:, None, :] - kn[None, :, :] if label == -1 else kp[None, :, :] - q[:, None, :]
        if interval is not None:
            out[index] = _feasible_in_interval(interval, pairs, per)
        else:
            out[index] = [_feasible_on_circle(np.vstack([pairs, row])) for row in per]
    return out


def _feasible_in_interval(interval: DirectionInterval, pairs: np.ndarray, per: np.ndarray) -> np.ndarray:
    lo, hi = 0.0, interval.span
    if len(pairs):
        a, b = interval.arcs(pairs)
        lo = max(lo, float(a.max()))
        hi = min(hi, float(b.min()))
    lows = np.full(per.shape[0], lo)
    highs = np.full(per.shape[0], hi)
    if per.shape[1]:
        a, b = interval.arcs(per)
        lows = np.maximum(lows, a.max(axis=1))
        highs = np.minimum(highs, b.min(axis=1))
    return highs - lows > TOL


def _feasible_on_circle(constraints: np.ndarray) -> bool:
    nonzero = constraints[np.any(constraints != 0.0, axis=1)]
    if len(nonzero) < len(constraints):
        return False
    if len(constraints) == 0:
        return True
    start = DirectionInterval.half_circle(Direction.from_vector(constraints[0]))
    return start.window(constraints) is not None


def uncertain_mask(own: Dataset, known: Dataset | None, interval: DirectionInterval | None = None) -> np.ndarray:
    """Mask over ``own`` of points outside the sets of total agreement."""
    if own.dim != 2:  # noqa: PLR2004
        msg = f"Agreement sets are planar, got d={own.dim}"
        raise ValueError(msg)
    if known is None:
        return np.ones(len(own), dtype=bool)
    return _misclassifiable(own.points, own.labels, known.points, known.labels, interval)


def agreement_sets(
    W: Dataset | None,
    own: Dataset,
    interval: DirectionInterval | None = None,
) -> tuple[list[LabeledPoint], list[LabeledPoint]]:
    """Split ``own`` into points every separator consistent with ``W`` labels right, and the rest.

    Raises:
        NotSeparable: If ``W`` itself is not separable.
    """
    if W is not None and W.has_both_classes:
        feasible_interval(W.positives, W.negatives)
    mask = uncertain_mask(own, W, interval)
    sota = list(own.subset(np.flatnonzero(~mask))) if np.any(~mask) else []
    sou = list(own.subset(np.flatnonzero(mask))) if np.any(mask) else []
    return sota, sou


def _refresh(state: NodeState) -> NodeState:
    if state.dim != 2:  # noqa: PLR2004
        return state
    uncertain = state.uncertain.copy()
    index = np.flatnonzero(uncertain)
    if len(index) and len(state.known_points):
        uncertain[index] = _misclassifiable(
            state.own.points[index], state.own.labels[index], state.known_points, state.known_labels, state.interval
        )
    return replace(state, uncertain=uncertain)


def _intersect(a: DirectionInterval | None, b: DirectionInterval | None) -> DirectionInterval | None:
    if a is None:
        return b
    if b is None:
        return a
    both = a.intersect(b)
    if both is None:
        msg = "Direction arcs no longer overlap"
        raise EmptyFeasible(msg)
    return both


def absorb(state: NodeState, msg: SupportMessage) -> NodeState:
    """Take in a proposal's support points and arc.

    Raises:
        EmptyFeasible: If the combined constraints leave no direction.
    """
    points, labels = _unique_rows(np.vstack([state.received_points, msg.points]), np.concatenate([state.received_labels, msg.labels]))
    state = replace(state, received_points=points, received_labels=labels)
    if state.dim != 2:  # noqa: PLR2004
        return state
    interval = _intersect(state.interval, msg.interval)
    knowledge = state.knowledge
    if knowledge.has_both_classes:
        try:
            interval = _intersect(interval, feasible_interval(knowledge.positives, knowledge.negatives))
        except NotSeparable as exc:
            raise EmptyFeasible(str(exc)) from exc
    return _refresh(replace(state, interval=interval))


# -- proposals ------------------------------------------------------------


def _band(knowledge: Dataset, normal: np.ndarray) -> tuple[float, float]:
    return float((knowledge.negatives @ normal).max()), float((knowledge.positives @ normal).min())


def _extremes(points: np.ndarray, normal: np.ndarray, *, top: bool) -> np.ndarray:
    """Up to two points attaining the extreme projection, the ends of a flat edge."""
    values = points @ normal
    best = float(values.max() if top else values.min())
    hit = points[np.abs(values - best) <= 1e-9 * (1.0 + abs(best))]
    if len(hit) <= 2 or len(normal) != 2:  # noqa: PLR2004
        return hit[:2]
    tangent = hit @ np.array([-normal[1], normal[0]])
    return hit[[int(np.argmin(tangent)), int(np.argmax(tangent))]]


def _support_set(state: NodeState, normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Known points touching the band: the top negatives and the bottom positives along ``normal``."""
    knowledge = state.knowledge
    top = _extremes(knowledge.negatives, normal, top=True)
    bottom = _extremes(knowledge.positives, normal, top=False)
    if len(top) == 2 and len(bottom) == 2:  # noqa: PLR2004
        bottom = bottom[:1]
    return np.vstack([top, bottom]), np.array([-1] * len(top) + [1] * len(bottom))


def _message(state: NodeState, normal: np.ndarray, points: np.ndarray, labels: np.ndarray) -> SupportMessage:
    return SupportMessage(state.name, normal, _band(state.knowledge, normal), points, labels, state.interval)


def _predicted_uncertain(state: NodeState, v: Direction, points: np.ndarray, labels: np.ndarray) -> tuple[int, int]:
    """Uncertain counts left after sending ``points`` if the reply keeps either side of ``v``."""
    assert state.interval is not None  # noqa: S101
    index = np.flatnonzero(state.uncertain)
    known_points = np.vstack([state.known_points, points])
    known_labels = np.concatenate([state.known_labels, labels])
    counts = []
    for side in (Side.LEFT_OF_V, Side.RIGHT_OF_V):
        sub = state.interval.side(v, side)
        mask = _misclassifiable(state.own.points[index], state.own.labels[index], known_points, known_labels, sub)
        counts.append(int(np.count_nonzero(mask)))
    return counts[0], counts[1]


def _boundary_pair(hull_vertices: np.ndarray, first: np.ndarray, second: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return hull_vertices[int(np.argmax(hull_vertices @ first))], hull_vertices[int(np.argmax(hull_vertices @ second))]


def _median_direction(state: NodeState) -> Direction:
    """Weighted-median hull-edge normal over the uncertain points of both classes.

    Raises:
        NoUncertainPoints: If no uncertain point lands on an eligible edge.
    """
    interval = state.interval
    assert interval is not None  # noqa: S101
    uncertain = state.own.subset(np.flatnonzero(state.uncertain))
    neg_edges: list[tuple[Direction, float]] = []
    pos_edges: list[tuple[Direction, float]] = []
    for label, edges in ((-1, neg_edges), (1, pos_edges)):
        members = state.own.points[state.own.labels == label]
        targets = uncertain.points[uncertain.labels == label]
        if len(members) < 3 or len(targets) == 0:  # noqa: PLR2004
            continue
        hull = convex_hull(members)
        if hull.degenerate:
            continue
        pair = state.boundary_pair(label)
        assert pair is not None  # noqa: S101
        try:
            projected = project_to_boundary(hull, pair, targets)
        except InvalidChord:
            continue
        for edge, count in projected:
            normal = hull.edge_normal(edge)
            mapped = normal.opposite() if label == 1 else normal
            if interval.contains(mapped, strict=True):
                edges.append((normal, float(count)))
    return interleaved_median(neg_edges, pos_edges, interval).direction


def _candidate_directions(state: NodeState) -> list[Direction]:
    interval = state.interval
    assert interval is not None  # noqa: S101
    out: list[Direction] = []
    for label in (-1, 1):
        members = state.own.points[state.own.labels == label]
        if len(members) < 3:  # noqa: PLR2004
            continue
        hull = convex_hull(members)
        for edge in range(len(hull) if not hull.degenerate else 0):
            normal = hull.edge_normal(edge)
            mapped = normal.opposite() if label == 1 else normal
            if interval.contains(mapped, strict=True):
                out.append(mapped)
    out.extend(interval.at(interval.span * (j + 0.5) / GRID_CANDIDATES) for j in range(GRID_CANDIDATES))
    return out


def _proposal_at(state: NodeState, v: Direction) -> SupportMessage | None:
    points, labels = _support_set(state, v.unit)
    msg = _message(state, v.unit, points, labels)
    if msg.band[1] - msg.band[0] <= TOL:
        return None
    return msg


def support_median(state: NodeState) -> SupportMessage:
    """Propose the direction that splits the uncertain points in half.

    The first candidate is the interleaved weighted-median hull edge. If the
    reply to it could leave more than half of the uncertain points uncertain,
    every eligible hull-edge normal and an even grid over the arc are scored
    and the most balanced one wins (earliest on ties). A proposal found that
    way is marked ``fallback``.

    Raises:
        NoUncertainPoints: If no point is uncertain.
        NotSeparable: If the party cannot propose at all.
    """
    if state.interval is None or not state.can_propose:
        msg = f"{state.name} cannot propose: no arc of separating directions"
        raise NotSeparable(msg)
    total = state.uncertain_count
    if total == 0:
        msg = f"{state.name} has no uncertain points"
        raise NoUncertainPoints(msg)
    need = -(-total // 2)

    first: Direction | None
    try:
        first = _median_direction(state)
    except NoUncertainPoints:
        first = None

    best: tuple[int, int, SupportMessage] | None = None
    candidates = ([first] if first is not None else []) + _candidate_directions(state)
    for rank, v in enumerate(candidates):
        proposal = _proposal_at(state, v)
        if proposal is None:
            continue
        score = max(_predicted_uncertain(state, v, proposal.points, proposal.labels))
        if best is None or score < best[0]:
            best = (score, rank, proposal)
        if rank == 0 and first is not None and score <= need:
            break
    if best is None:
        proposal = _proposal_at(state, state.interval.bisector())
        if proposal is None:
            msg = f"{state.name} has no direction with a positive margin"
            raise EmptyFeasible(msg)
        logger.info("%s: no candidate direction has a margin, proposing the arc bisector", state.name)
        return replace(proposal, fallback=True)
    score, rank, proposal = best
    if score > need:
        logger.debug("%s: best split leaves %d of %d uncertain", state.name, score, total)
    if first is None or rank > 0:
        logger.info("%s: median edge does not halve %d uncertain points, scanned candidates instead", state.name, total)
        return replace(proposal, fallback=True)
    return proposal


def support_maxmarg(state: NodeState) -> SupportMessage:
    """Propose the max-margin separator of own data plus everything received.

    Raises:
        NotSeparable: If that data is not separable.
    """
    knowledge = state.knowledge
    if not knowledge.has_both_classes:
        msg = f"{state.name} cannot propose: it knows points of one class only"
        raise NotSeparable(msg)
    if state.dim == 2:  # noqa: PLR2004
        result = max_margin_separator(knowledge.positives, knowledge.negatives)
    else:
        result = max_margin_nd(knowledge.positives, knowledge.negatives)
    normal = result.separator.normal
    return _message(state, normal, result.support, result.support_labels)


def _bisector_proposal(state: NodeState) -> SupportMessage:
    assert state.interval is not None  # noqa: S101
    proposal = _proposal_at(state, state.interval.bisector())
    if proposal is None:
        return support_maxmarg(state)
    return proposal


def propose(state: NodeState, support_fn: SupportFn) -> tuple[SupportMessage, NodeState]:
    """Build the next proposal and record its support points as sent."""
    if support_fn == "median" and state.dim == 2:  # noqa: PLR2004
        try:
            msg = support_median(state)
        except NoUncertainPoints:
            msg = replace(_bisector_proposal(state), fallback=True)
    else:
        msg = support_maxmarg(state)
    sent_points, sent_labels = _unique_rows(np.vstack([state.sent_points, msg.points]), np.concatenate([state.sent_labels, msg.labels]))
    state = replace(state, sent_points=sent_points, sent_labels=sent_labels, pending=msg)
    return msg, _refresh(state)


# -- responding -----------------------------------------------------------


@dataclass(frozen=True)
class _OffsetSearch:
    offset: float
    error: int
    run: tuple[float, float]
    low_value: float | None
    high_value: float | None


def _best_offset(proj: np.ndarray, labels: np.ndarray, band: tuple[float, float], budget: float) -> _OffsetSearch:
    """Offset in the band minimising local error; ties go to the one nearest the band centre."""
    lo, hi = band
    pos = np.sort(proj[labels == 1])
    neg = np.sort(proj[labels == -1])
    inner = np.unique(proj[(proj > lo) & (proj < hi)])
    edges = np.concatenate([[lo], inner, [hi]])
    cands = 0.5 * (edges[:-1] + edges[1:])
    errs = np.searchsorted(pos, cands, side="left") + (len(neg) - np.searchsorted(neg, cands, side="right"))
    centre = 0.5 * (lo + hi)
    best = int(np.lexsort((np.abs(cands - centre), errs))[0])
    first = last = best
    if errs[best] <= budget:
        while first > 0 and errs[first - 1] <= budget:
            first -= 1
        while last < len(cands) - 1 and errs[last + 1] <= budget:
            last += 1
    low_value = float(edges[first]) if first > 0 else None
    high_value = float(edges[last + 1]) if last < len(cands) - 1 else None
    return _OffsetSearch(float(cands[best]), int(errs[best]), (float(edges[first]), float(edges[last + 1])), low_value, high_value)


def _point_at(points: np.ndarray, proj: np.ndarray, value: float | None) -> np.ndarray | None:
    if value is None or len(points) == 0:
        return None
    return points[int(np.argmin(np.abs(proj - value)))]


def _witnesses(own: Dataset, msg: SupportMessage, normal: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Inverted cross-class pairs, deepest first."""
    pos = np.vstack([own.positives, msg.points[msg.labels == 1]])
    neg = np.vstack([own.negatives, msg.points[msg.labels == -1]])
    pos = pos[np.argsort(pos @ normal, kind="stable")][:MAX_WITNESSES]
    neg = neg[np.argsort(-(neg @ normal), kind="stable")][:MAX_WITNESSES]
    pairs = [(float(y @ normal - s @ normal), i, j) for i, s in enumerate(pos) for j, y in enumerate(neg) if s @ normal <= y @ normal]
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    return [(pos[i], neg[j]) for _, i, j in pairs[:MAX_WITNESSES]]


def _rotation_side(
    interval: DirectionInterval,
    reference: DirectionInterval,
    v: Direction,
    witnesses: Sequence[tuple[np.ndarray, np.ndarray]],
) -> tuple[Side, tuple[np.ndarray, np.ndarray]]:
    for rank, (s, y) in enumerate(witnesses):
        try:
            if interval.contains(v, strict=True):
                side = interval_side((s, y), v, interval)
            else:
                kept = interval.cut(s - y)
                if kept is None:
                    msg = "Witness leaves no feasible direction"
                    raise EmptyFeasible(msg)
                side = Side.LEFT_OF_V if reference.offset(kept.bisector()) < reference.offset(v) else Side.RIGHT_OF_V
        except AmbiguousWitness:
            logger.info("Witness %d is ambiguous for direction %.6f; trying the next deepest", rank, v.theta)
            continue
        if rank:
            logger.info("Used witness %d after %d ambiguous ones", rank, rank)
        return side, (s, y)
    msg = "Every witness pair is ambiguous"
    raise AmbiguousWitness(msg)


def respond(state: NodeState, msg: SupportMessage, epsilon: float, support_fn: SupportFn = "median") -> tuple[Reply, NodeState]:
    """Answer a proposal, returning the reply and the responder's next state.

    Raises:
        EmptyFeasible: If the data turns out not to be separable.
    """
    state = absorb(state, msg)
    proj = state.own.points @ msg.normal
    search = _best_offset(proj, state.own.labels, msg.band, epsilon * len(state.own))
    if search.error <= epsilon * len(state.own):
        reply = Terminate(
            Halfplane(msg.normal, search.offset),
            search.run,
            search.error,
            _point_at(state.own.negatives, state.own.negatives @ msg.normal, search.low_value),
            _point_at(state.own.positives, state.own.positives @ msg.normal, search.high_value),
        )
        return reply, state

    sign = 0
    witness = None
    if state.interval is not None and msg.dim == 2:  # noqa: PLR2004
        side, witness = _rotation_side(state.interval, msg.interval or state.interval, msg.v, _witnesses(state.own, msg, msg.normal))
        sign = int(side)
        if state.interval.contains(msg.v, strict=True):
            state = _refresh(replace(state, interval=state.interval.side(msg.v, side)))
    counter, state = propose(state, support_fn)
    return Rotate(sign, counter, witness), state


def update_state(state: NodeState, reply: Reply) -> NodeState:
    """Apply a reply to the proposer's state.

    A rotation cuts the arc to the named side of the pending proposal and
    takes in the counter-proposal; the uncertain set is recomputed.
    """
    pending = state.pending
    state = replace(state, pending=None)
    if not isinstance(reply, Rotate):
        return state
    if state.interval is not None and pending is not None and reply.sign and state.interval.contains(pending.v, strict=True):
        state = replace(state, interval=state.interval.side(pending.v, Side(reply.sign)))
    return absorb(state, reply.counter)


# -- drivers --------------------------------------------------------------


def _note_fallback(transcript: Transcript, round_: int, msg: SupportMessage) -> None:
    if msg.fallback and transcript.median_fallbacks[-1:] != [round_]:
        transcript.median_fallbacks.append(round_)


def _record_proposal(transcript: Transcript, round_: int, msg: SupportMessage, receiver: str) -> None:
    transcript.record(round_, msg.sender, receiver, MessageKind.SUPPORT, msg.points, msg.scalars())
    _note_fallback(transcript, round_, msg)


def _record_rotate(transcript: Transcript, round_: int, reply: Rotate, sender: str, receiver: str) -> None:
    transcript.record(round_, sender, receiver, MessageKind.ROTATE, reply.counter.points, [float(reply.sign), *reply.counter.scalars()])
    _note_fallback(transcript, round_, reply.counter)


def _seed_one_class(states: list[NodeState], transcript: Transcript) -> list[NodeState]:
    """Let a one-class party hand one point to a party of the other class."""
    giver = states[0]
    label = int(giver.own.labels[0])
    for i, other in enumerate(states[1:], start=1):
        if np.any(other.own.labels != label):
            point = giver.own.points[:1]
            transcript.record(0, giver.name, other.name, MessageKind.WITNESS, point)
            seeded = SupportMessage(giver.name, np.eye(giver.dim)[0], (-math.inf, math.inf), point, np.array([label]))
            states[i] = absorb(other, seeded)
            states[0] = replace(giver, sent_points=point, sent_labels=np.array([label]))
            return states
    return states


def iterative_supports(
    D_A: Dataset,
    D_B: Dataset,
    epsilon: float,
    support_fn: SupportFn = "median",
    max_rounds: int | None = None,
    observer: Callable[[NodeState], None] | None = None,
) -> tuple[Halfplane, Transcript]:
    """Run the alternating proposal protocol between ``A`` and ``B``.

    The first party that knows both classes proposes. Rounds count that
    party's proposals. With Median, exceeding the round cap is an error; with
    MaxMarg the protocol stops at the cap, marks the transcript ``capped`` and
    returns the last proposal's separator. ``observer`` sees every new party
    state.

    Raises:
        RoundCapExceeded: If Median needs more than ``max_rounds`` rounds.
    """
    transcript = Transcript()
    union = Dataset.concat([D_A, D_B])
    if not union.has_both_classes:
        return constant_halfplane(int(union.labels[0]), union.dim), transcript
    if support_fn == "median" and union.dim != 2:  # noqa: PLR2004
        msg_text = f"Median support is planar only, got d={union.dim}"
        raise ValueError(msg_text)
    if max_rounds is None:
        max_rounds = median_round_cap(epsilon) if support_fn == "median" else maxmarg_round_cap(epsilon)

    states = [initial_state("A", D_A), initial_state("B", D_B)]
    if not (states[0].can_propose or states[1].can_propose):
        states = _seed_one_class(states, transcript)
    first = 0 if states[0].can_propose else 1
    proposer, responder = states[first], states[1 - first]
    notify = observer or (lambda _state: None)
    notify(proposer)
    notify(responder)

    transcript.record_u(proposer.uncertain_count, proposer.name)
    msg, proposer = propose(proposer, support_fn)
    notify(proposer)
    round_no = 1
    _record_proposal(transcript, round_no, msg, responder.name)
    logger.debug("round %d: %s proposes theta=%s", round_no, proposer.name, msg.scalars()[0])

    while True:
        transcript.record_u(responder.uncertain_count, responder.name)
        reply, responder = respond(responder, msg, epsilon, support_fn)
        notify(responder)
        if isinstance(reply, Terminate):
            transcript.record(round_no, responder.name, proposer.name, MessageKind.TERMINATE, None, [reply.h.offset])
            transcript.rounds = round_no
            return reply.h, transcript
        _record_rotate(transcript, round_no, reply, responder.name, proposer.name)
        proposer = update_state(proposer, reply)
        notify(proposer)
        proposer, responder = responder, proposer
        msg = reply.counter
        if proposer.name == states[first].name:
            round_no += 1
            logger.debug("round %d: %s proposes", round_no, proposer.name)
        if round_no > max_rounds:
            transcript.rounds = max_rounds
            if support_fn == "median":
                error = f"Median protocol exceeded {max_rounds} rounds"
                raise RoundCapExceeded(error)
            logger.warning("MaxMarg stopped at the round cap of %d", max_rounds)
            transcript.capped = True
            return msg.separator, transcript


@dataclass
class _Epoch:
    coordinator: int
    ranges: dict[int, Terminate] = field(default_factory=dict)
    rotated: bool = False


def k_party_two_way(
    parts: Sequence[Dataset],
    epsilon: float,
    support_fn: SupportFn = "median",
    max_epochs: int | None = None,
) -> tuple[Halfplane, Transcript]:
    """Coordinator epochs over ``k`` parties.

    Each epoch one party, chosen round-robin among those that can propose,
    plays one proposal round with every other party in turn and proposes again
    after each rotation. An epoch in which every party accepts the same
    proposal ends the protocol if their offset ranges meet; otherwise the two
    parties bounding the empty intersection each send the point pinning their
    bound, and the coordinator cuts its arc with that inverted pair.

    Raises:
        EpochCapExceeded: If no epoch ends in agreement within ``max_epochs``.
    """
    k = len(parts)
    transcript = Transcript()
    if k == 1:
        return fit_zero_error("halfplane", parts[0]), transcript  # type: ignore[return-value]
    if k == 2:  # noqa: PLR2004
        return iterative_supports(parts[0], parts[1], epsilon, support_fn)
    union = Dataset.concat(list(parts))
    if not union.has_both_classes:
        return constant_halfplane(int(union.labels[0]), union.dim), transcript
    if max_epochs is None:
        max_epochs = 4 * k * median_round_cap(epsilon)

    states = [initial_state(f"P{i + 1}", part) for i, part in enumerate(parts)]
    if not any(s.can_propose for s in states):
        states = _seed_one_class(states, transcript)

    for epoch_no in range(1, max_epochs + 1):
        transcript.epochs = epoch_no
        proposers = [i for i, s in enumerate(states) if s.can_propose]
        epoch = _Epoch(proposers[(epoch_no - 1) % len(proposers)])
        c = epoch.coordinator
        transcript.record_u(states[c].uncertain_count, states[c].name)
        msg, states[c] = propose(states[c], support_fn)
        for j in range(k):
            if j == c:
                continue
            _record_proposal(transcript, epoch_no, msg, states[j].name)
            reply, states[j] = respond(states[j], msg, epsilon, support_fn)
            if isinstance(reply, Terminate):
                transcript.record(epoch_no, states[j].name, states[c].name, MessageKind.TERMINATE, None, [reply.h.offset])
                epoch.ranges[j] = reply
                continue
            _record_rotate(transcript, epoch_no, reply, states[j].name, states[c].name)
            epoch.rotated = True
            epoch.ranges.clear()
            states[c] = update_state(states[c], reply)
            transcript.record_u(states[c].uncertain_count, states[c].name)
            msg, states[c] = propose(states[c], support_fn)
        if epoch.rotated:
            continue

        lo = max([msg.band[0], *(t.offset_range[0] for t in epoch.ranges.values())])
        hi = min([msg.band[1], *(t.offset_range[1] for t in epoch.ranges.values())])
        if hi > lo:
            transcript.rounds = epoch_no
            return Halfplane(msg.normal, 0.5 * (lo + hi)), transcript
        states[c] = _exchange_witnesses(states[c], msg, epoch, transcript, epoch_no, states)

    msg = f"No agreement after {max_epochs} epochs"
    raise EpochCapExceeded(msg)


def _exchange_witnesses(
    coordinator: NodeState,
    msg: SupportMessage,
    epoch: _Epoch,
    transcript: Transcript,
    epoch_no: int,
    states: Sequence[NodeState],
) -> NodeState:
    """Cut the coordinator's arc with the pair bounding an empty range intersection."""
    a = max(epoch.ranges, key=lambda j: epoch.ranges[j].offset_range[0])
    b = min(epoch.ranges, key=lambda j: epoch.ranges[j].offset_range[1])
    y = epoch.ranges[a].low_point
    s = epoch.ranges[b].high_point
    if y is None or s is None:
        msg_text = "Offset ranges disagree without a pinning point"
        raise EmptyFeasible(msg_text)
    transcript.record(epoch_no, states[a].name, coordinator.name, MessageKind.WITNESS, y[None, :])
    transcript.record(epoch_no, states[b].name, coordinator.name, MessageKind.WITNESS, s[None, :])
    interval = coordinator.interval
    if interval is not None:
        interval = interval.cut(s - y)
        if interval is None:
            text = "Witness pair leaves the coordinator no direction"
            raise EmptyFeasible(text)
    witness_msg = SupportMessage(coordinator.name, msg.normal, msg.band, np.vstack([y, s]), np.array([-1, 1]), interval)
    return absorb(replace(coordinator, interval=interval, pending=None), witness_msg)
