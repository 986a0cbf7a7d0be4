"""Planar geometry used by the two-way protocols.

Covers convex hulls, max-margin separators between separable hulls, boundary
projection with weighted medians, and arithmetic on arcs of unit directions.

Directions are angles on the circle. A ``DirectionInterval`` is the arc swept
clockwise from ``v_l`` to ``v_r``; positions inside it are measured as the
clockwise angle ``phi`` from ``v_l``, so ``phi`` runs from 0 to ``span``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING, Literal

import numpy as np

from .errors import AmbiguousWitness, EmptyFeasible, EmptyInput, InvalidChord, NoUncertainPoints, NotSeparable

if TYPE_CHECKING:
    from collections.abc import Sequence

TOL = 1e-12
TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def as_points(points: object, dim: int = 2) -> np.ndarray:
    """Coerce ``points`` into a finite ``(n, dim)`` float array."""
    arr = np.asarray(points, dtype=float)
    arr = arr.reshape(0, dim) if arr.size == 0 else arr.reshape(-1, dim)
    if not np.all(np.isfinite(arr)):
        msg = "Coordinates must be finite"
        raise ValueError(msg)
    return arr


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Z component of the cross product of planar vectors (broadcasts)."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _turn(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


@dataclass(frozen=True)
class Direction:
    """A unit direction stored as an angle in ``[0, 2*pi)``."""

    theta: float

    def __post_init__(self) -> None:
        theta = float(self.theta) % TWO_PI
        if theta >= TWO_PI:
            theta = 0.0
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_vector(cls, vector: Sequence[float] | np.ndarray) -> Direction:
        """Direction of a non-zero planar vector."""
        x, y = float(vector[0]), float(vector[1])
        if x == 0.0 and y == 0.0:
            msg = "Zero vector has no direction"
            raise ValueError(msg)
        return cls(math.atan2(y, x))

    @property
    def unit(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def rotated(self, angle: float) -> Direction:
        """Rotate counterclockwise by ``angle`` radians."""
        return Direction(self.theta + angle)

    def opposite(self) -> Direction:
        return Direction(self.theta + math.pi)


class Side(IntEnum):
    """Sub-interval selected by a rotation witness.

    ``LEFT_OF_V`` is ``(v_l, v)``, the counterclockwise part of the interval;
    ``RIGHT_OF_V`` is ``(v, v_r)``.
    """

    LEFT_OF_V = 1
    RIGHT_OF_V = -1


@dataclass(frozen=True)
class DirectionInterval:
    """Closed arc of directions traversed clockwise from ``v_l`` to ``v_r``."""

    v_l: Direction
    v_r: Direction

    @classmethod
    def half_circle(cls, center: Direction) -> DirectionInterval:
        """Closed half-circle of directions within a quarter turn of ``center``."""
        return cls(center.rotated(HALF_PI), center.rotated(-HALF_PI))

    @property
    def span(self) -> float:
        return (self.v_l.theta - self.v_r.theta) % TWO_PI

    def offset(self, direction: Direction) -> float:
        """Clockwise angle from ``v_l`` to ``direction``, in ``[-TOL, 2*pi - TOL)``."""
        phi = (self.v_l.theta - direction.theta) % TWO_PI
        if phi > TWO_PI - 1e-9:
            phi -= TWO_PI
        return phi

    def contains(self, direction: Direction, *, strict: bool = False) -> bool:
        phi = self.offset(direction)
        if strict:
            return TOL < phi < self.span - TOL
        return -1e-9 <= phi <= self.span + 1e-9

    def at(self, phi: float) -> Direction:
        """Direction at clockwise angle ``phi`` from ``v_l``."""
        return Direction(self.v_l.theta - phi)

    def sub(self, lo: float, hi: float) -> DirectionInterval:
        """Sub-arc between clockwise offsets ``lo <= hi``."""
        return DirectionInterval(self.at(lo), self.at(hi))

    def bisector(self) -> Direction:
        return self.at(0.5 * self.span)

    def split(self, v: Direction) -> tuple[DirectionInterval, DirectionInterval]:
        """Split at ``v`` into ``(v_l, v)`` and ``(v, v_r)``."""
        phi = min(max(self.offset(v), 0.0), self.span)
        return self.sub(0.0, phi), self.sub(phi, self.span)

    def side(self, v: Direction, side: Side) -> DirectionInterval:
        left, right = self.split(v)
        return left if side is Side.LEFT_OF_V else right

    def arcs(self, constraints: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Open feasible arc of each constraint ``<u, w> > 0`` in offset coordinates.

        Returns arrays ``(a, b)`` shaped like ``constraints[..., 0]``; the
        directions satisfying a constraint inside this interval are exactly the
        offsets in ``(a, b)``. Zero vectors are infeasible and yield ``a = inf``.
        """
        w = np.asarray(constraints, dtype=float)
        alpha = np.arctan2(w[..., 1], w[..., 0])
        psi = np.mod(self.v_l.theta - alpha, TWO_PI)
        a = np.where(psi > 1.5 * math.pi, psi - 2.5 * math.pi, psi - HALF_PI)
        zero = (w[..., 0] == 0.0) & (w[..., 1] == 0.0)
        a = np.where(zero, np.inf, a)
        b = np.where(zero, -np.inf, a + math.pi)
        return a, b

    def window(self, constraints: np.ndarray) -> tuple[float, float] | None:
        """Offsets ``[lo, hi]`` of directions satisfying every constraint, or None."""
        w = np.asarray(constraints, dtype=float).reshape(-1, 2)
        lo, hi = 0.0, self.span
        if len(w):
            a, b = self.arcs(w)
            lo = max(lo, float(a.max()))
            hi = min(hi, float(b.min()))
        if hi - lo <= TOL:
            return None
        return lo, hi

    def cut(self, constraints: np.ndarray) -> DirectionInterval | None:
        """Closure of the directions in this interval satisfying all constraints."""
        bounds = self.window(constraints)
        return None if bounds is None else self.sub(*bounds)

    def intersect(self, other: DirectionInterval) -> DirectionInterval | None:
        start = (self.v_l.theta - other.v_l.theta) % TWO_PI
        best: tuple[float, float] | None = None
        for shifted in (start - TWO_PI, start):
            lo = max(0.0, shifted)
            hi = min(self.span, shifted + other.span)
            if hi - lo > TOL and (best is None or hi - lo > best[1] - best[0]):
                best = (lo, hi)
        return None if best is None else self.sub(*best)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Counterclockwise convex polygon; fewer than three vertices is degenerate."""

    vertices: np.ndarray

    @property
    def degenerate(self) -> bool:
        return len(self.vertices) < 3

    def __len__(self) -> int:
        return len(self.vertices)

    def edge(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        m = len(self.vertices)
        return self.vertices[index % m], self.vertices[(index + 1) % m]

    def edge_normal(self, index: int) -> Direction:
        """Outward normal of edge ``index`` (from vertex ``index`` to ``index + 1``)."""
        start, end = self.edge(index)
        e = end - start
        return Direction.from_vector((e[1], -e[0]))

    def vertex_index(self, point: Sequence[float] | np.ndarray) -> int | None:
        hits = np.flatnonzero(np.all(np.abs(self.vertices - np.asarray(point, dtype=float)) <= 1e-12, axis=1))
        return int(hits[0]) if len(hits) else None

    def extreme_vertex(self, direction: np.ndarray) -> int:
        """Index of the first vertex maximising ``<direction, p>``."""
        return int(np.argmax(self.vertices @ np.asarray(direction, dtype=float)))

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Mask of points inside or on the boundary."""
        pts = as_points(points)
        v = self.vertices
        if len(v) == 1:
            return np.all(np.abs(pts - v[0]) <= tol, axis=1)
        if len(v) == 2:
            d = v[1] - v[0]
            rel = pts - v[0]
            t = (rel @ d) / float(d @ d)
            off = np.abs(cross2(np.broadcast_to(d, rel.shape), rel)) / math.hypot(*d)
            return (off <= tol) & (t >= -tol) & (t <= 1 + tol)
        inside = np.ones(len(pts), dtype=bool)
        for i in range(len(v)):
            a, b = self.edge(i)
            e = b - a
            dist = cross2(np.broadcast_to(e, pts.shape), pts - a) / math.hypot(*e)
            inside &= dist >= -tol
        return inside


def convex_hull(points: Sequence[Sequence[float]] | np.ndarray) -> ConvexPolygon:
    """Monotone-chain hull, counterclockwise with collinear vertices removed.

    Raises:
        EmptyInput: If ``points`` is empty.
    """
    pts = as_points(points)
    if len(pts) == 0:
        msg = "Cannot build the hull of zero points"
        raise EmptyInput(msg)
    uniq = np.unique(pts, axis=0)
    if len(uniq) <= 2:
        return ConvexPolygon(uniq)

    lower: list[np.ndarray] = []
    for p in uniq:
        while len(lower) >= 2 and _turn(lower[-2], lower[-1], p) <= TOL:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in uniq[::-1]:
        while len(upper) >= 2 and _turn(upper[-2], upper[-1], p) <= TOL:
            upper.pop()
        upper.append(p)
    return ConvexPolygon(np.array(lower[:-1] + upper[:-1]))


@dataclass(frozen=True, eq=False)
class Halfplane:
    """Linear classifier ``sign(<normal, p> - offset)``; the positive side is +1.

    The normal is stored with unit length. An infinite offset gives a constant
    classifier.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self) -> None:
        normal = np.asarray(self.normal, dtype=float).ravel()
        norm = float(np.linalg.norm(normal))
        if not np.all(np.isfinite(normal)) or norm == 0.0:
            msg = "Halfplane normal must be finite and non-zero"
            raise ValueError(msg)
        if math.isnan(self.offset):
            msg = "Halfplane offset must not be NaN"
            raise ValueError(msg)
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_direction(cls, direction: Direction, offset: float) -> Halfplane:
        return cls(direction.unit, offset)

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def direction(self) -> Direction:
        if self.dim != 2:  # noqa: PLR2004
            msg = f"Direction is only defined in the plane, not for d={self.dim}"
            raise ValueError(msg)
        return Direction.from_vector(self.normal)

    def decision(self, points: np.ndarray) -> np.ndarray:
        return as_points(points, self.dim) @ self.normal - self.offset

    def classify(self, points: np.ndarray) -> np.ndarray:
        return np.where(self.decision(points) > 0, 1, -1)


@dataclass(frozen=True, eq=False)
class MaxMarginResult:
    separator: Halfplane
    support: np.ndarray
    support_labels: np.ndarray
    margin: float


def _closest_on_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    d = b - a
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, float((p - a) @ d) / dd))
    return a + t * d, t


def _features(hull: ConvexPolygon) -> list[tuple[int, int]]:
    m = len(hull)
    if m == 1:
        return [(0, 0)]
    if m == 2:  # noqa: PLR2004
        return [(0, 1)]
    return [(i, (i + 1) % m) for i in range(m)]


def max_margin_separator(positives: np.ndarray, negatives: np.ndarray) -> MaxMarginResult:
    """Perpendicular bisector of the shortest segment between the two class hulls.

    Raises:
        EmptyInput: If either class is empty.
        NotSeparable: If the hulls touch or intersect.
    """
    pos = as_points(positives)
    neg = as_points(negatives)
    if len(pos) == 0 or len(neg) == 0:
        msg = "Max-margin separation needs points of both classes"
        raise EmptyInput(msg)
    hull_pos = convex_hull(pos)
    hull_neg = convex_hull(neg)

    best: tuple[float, np.ndarray, np.ndarray, list[np.ndarray], list[int]] | None = None
    for src, dst, src_label in ((hull_pos, hull_neg, 1), (hull_neg, hull_pos, -1)):
        for vertex in src.vertices:
            for i, j in _features(dst):
                a, b = dst.vertices[i], dst.vertices[j]
                q, t = _closest_on_segment(vertex, a, b)
                dist = float(np.linalg.norm(vertex - q))
                if best is not None and dist >= best[0] - 1e-15:
                    continue
                if 0.0 < t < 1.0:
                    other, other_labels = [a, b], [-src_label, -src_label]
                else:
                    other, other_labels = [q], [-src_label]
                near_pos, near_neg = (vertex, q) if src_label == 1 else (q, vertex)
                best = (dist, near_pos, near_neg, [vertex, *other], [src_label, *other_labels])

    assert best is not None  # noqa: S101
    dist, near_pos, near_neg, support, labels = best
    if dist <= TOL:
        msg = "Class hulls touch or intersect"
        raise NotSeparable(msg)
    normal = (near_pos - near_neg) / dist
    min_pos = float((hull_pos.vertices @ normal).min())
    max_neg = float((hull_neg.vertices @ normal).max())
    gap = min_pos - max_neg
    if gap <= TOL or not math.isclose(gap, dist, rel_tol=1e-9, abs_tol=1e-9):
        msg = "Class hulls touch or intersect"
        raise NotSeparable(msg)
    separator = Halfplane(normal, 0.5 * (min_pos + max_neg))
    return MaxMarginResult(separator, np.array(support), np.array(labels), 0.5 * gap)


def feasible_interval(positives: np.ndarray, negatives: np.ndarray) -> DirectionInterval:
    """Closure of the normals of every halfplane separating the two classes.

    Raises:
        NotSeparable: If no separating direction exists.
    """
    pos = convex_hull(positives).vertices
    neg = convex_hull(negatives).vertices
    pairs = (pos[:, None, :] - neg[None, :, :]).reshape(-1, 2)
    if np.any(np.all(pairs == 0.0, axis=1)):
        msg = "A point carries both labels"
        raise NotSeparable(msg)
    start = DirectionInterval.half_circle(Direction.from_vector(pairs[0]))
    interval = start.cut(pairs)
    if interval is None:
        msg = "No direction separates the classes"
        raise NotSeparable(msg)
    return interval


def project_to_boundary(
    hull: ConvexPolygon,
    chord: tuple[np.ndarray, np.ndarray],
    points: np.ndarray,
) -> list[tuple[int, int]]:
    """Count where points land when pushed along the chord normal onto the far arc.

    The arc is the boundary walked counterclockwise from ``p_r`` to ``p_l`` and
    the push direction is the left normal of ``p_r - p_l``. Only arc edges that
    face the push direction can receive points; they are reported in clockwise
    order starting next to ``p_l``, zero counts included. A point landing on a
    shared vertex goes to the later edge in that order, and points outside the
    arc's extent are clamped to the end edges.

    Raises:
        InvalidChord: If the chord endpoints are not distinct hull vertices.
    """
    p_l, p_r = (np.asarray(p, dtype=float) for p in chord)
    i_l = hull.vertex_index(p_l)
    i_r = hull.vertex_index(p_r)
    if hull.degenerate or i_l is None or i_r is None or i_l == i_r:
        msg = "Chord endpoints must be two distinct vertices of a proper polygon"
        raise InvalidChord(msg)

    m = len(hull)
    d = p_r - p_l
    along = d / float(np.linalg.norm(d))
    push = np.array([-along[1], along[0]])
    scan = [(i_l - 1 - t) % m for t in range((i_l - i_r) % m)]
    facing = [e for e in scan if float(hull.edge_normal(e).unit @ push) > TOL]
    if not facing:
        return []

    # Clockwise traversal of a facing edge runs from vertex e + 1 to vertex e.
    breaks = [float(hull.vertices[(facing[0] + 1) % m] @ along)]
    breaks.extend(float(hull.vertices[e] @ along) for e in facing)

    counts = [0] * len(facing)
    pts = as_points(points)
    for s in pts @ along:
        slot = bisect_right(breaks, float(s)) - 1
        counts[min(max(slot, 0), len(facing) - 1)] += 1
    return list(zip(facing, counts, strict=True))


def weighted_median_edge(weights: Sequence[tuple[int, float]]) -> int:
    """First edge whose cumulative weight reaches half the total, rounded up.

    Raises:
        NoUncertainPoints: If the total weight is zero.
    """
    total = sum(w for _, w in weights)
    if total <= 0:
        msg = "Weighted median of zero total weight"
        raise NoUncertainPoints(msg)
    need = math.ceil(total / 2)
    running = 0.0
    for edge, w in weights:
        running += w
        if running >= need:
            return edge
    return weights[-1][0]


@dataclass(frozen=True)
class MedianChoice:
    source: Literal["pos", "neg"]
    index: int
    direction: Direction


def interleaved_median(
    neg_edges: Sequence[tuple[Direction, float]],
    pos_edges: Sequence[tuple[Direction, float]],
    interval: DirectionInterval | None = None,
) -> MedianChoice:
    """Weighted median over negative-hull normals merged with antipodal positive-hull normals.

    Directions are scanned clockwise, starting at ``interval.v_l`` when an
    interval is given (entries outside it are dropped) and from angle
    ``2*pi`` downward otherwise.

    Raises:
        NoUncertainPoints: If the merged weight is zero.
    """
    entries: list[tuple[float, int, Literal["pos", "neg"], int, Direction, float]] = []
    for order, (source, edges) in enumerate((("neg", neg_edges), ("pos", pos_edges))):
        for index, (direction, weight) in enumerate(edges):
            mapped = direction.opposite() if source == "pos" else direction
            if interval is not None:
                if not interval.contains(mapped):
                    continue
                key = interval.offset(mapped)
            else:
                key = -mapped.theta
            entries.append((key, order, source, index, mapped, weight))  # type: ignore[arg-type]
    entries.sort(key=lambda e: (e[0], e[1], e[3]))

    total = sum(e[5] for e in entries)
    if total <= 0:
        msg = "Interleaved median of zero total weight"
        raise NoUncertainPoints(msg)
    need = math.ceil(total / 2)
    running = 0.0
    for _, _, source, index, direction, weight in entries:
        running += weight
        if running >= need:
            return MedianChoice(source, index, direction)
    _, _, source, index, direction, _ = entries[-1]
    return MedianChoice(source, index, direction)


def interval_side(
    feasible_constraint: tuple[np.ndarray, np.ndarray],
    v: Direction,
    interval: DirectionInterval | None,
) -> Side:
    """Which side of ``v`` keeps the normals ``u`` with ``<u, s - y> > 0``.

    When ``v`` lies outside ``interval`` (or there is none) the side is read
    off the orientation of ``s - y`` relative to ``v``.

    Raises:
        AmbiguousWitness: If both sides stay feasible.
        EmptyFeasible: If neither side does.
    """
    s, y = (np.asarray(p, dtype=float) for p in feasible_constraint)
    w = s - y
    if interval is None or not interval.contains(v):
        turn = float(cross2(v.unit, w))
        if abs(turn) <= TOL:
            msg = "Witness is parallel to the proposed direction"
            raise AmbiguousWitness(msg)
        return Side.LEFT_OF_V if turn > 0 else Side.RIGHT_OF_V

    left, right = interval.split(v)
    left_ok = left.window(w) is not None
    right_ok = right.window(w) is not None
    if left_ok and right_ok:
        msg = "Witness leaves both sub-intervals feasible"
        raise AmbiguousWitness(msg)
    if not (left_ok or right_ok):
        msg = "Witness leaves no feasible direction"
        raise EmptyFeasible(msg)
    return Side.LEFT_OF_V if left_ok else Side.RIGHT_OF_V
