"""Tests for hulls, max-margin separators and direction arithmetic."""

import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from commlearn.errors import AmbiguousWitness, EmptyInput, InvalidChord, NoUncertainPoints, NotSeparable
from commlearn.geometry import (
    Direction,
    DirectionInterval,
    Halfplane,
    Side,
    convex_hull,
    cross2,
    feasible_interval,
    interleaved_median,
    interval_side,
    max_margin_separator,
    project_to_boundary,
    weighted_median_edge,
)
from commlearn.harness.generators import gen_separable
from commlearn.harness.suites import MARGIN_REL_TOL, sweep_margin


@st.composite
def integer_clouds(draw: st.DrawFn, max_size: int = 30) -> np.ndarray:
    coords = draw(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=1, max_size=max_size))
    return np.array(coords, dtype=float)


class TestDirection:
    """Angles are kept in [0, 2*pi)."""

    def test_negative_angle_wraps(self) -> None:
        assert Direction(-0.5).theta == pytest.approx(2 * math.pi - 0.5)

    def test_large_angle_wraps(self) -> None:
        assert Direction(7.0).theta == pytest.approx(7.0 - 2 * math.pi)

    def test_unit_has_norm_one(self) -> None:
        assert np.linalg.norm(Direction(1.234).unit) == pytest.approx(1.0, abs=1e-12)

    def test_zero_vector_has_no_direction(self) -> None:
        with pytest.raises(ValueError, match="Zero vector"):
            Direction.from_vector((0.0, 0.0))


class TestDirectionInterval:
    """Arcs run clockwise from v_l to v_r."""

    def test_half_circle_span(self) -> None:
        arc = DirectionInterval.half_circle(Direction(0.0))
        assert arc.span == pytest.approx(math.pi)
        assert arc.contains(Direction(0.0))
        assert arc.contains(arc.v_l)
        assert arc.contains(arc.v_r)
        assert not arc.contains(Direction(math.pi))

    def test_split_is_nested(self) -> None:
        arc = DirectionInterval(Direction(1.0), Direction(-1.0))
        left, right = arc.split(Direction(0.2))
        assert left.span + right.span == pytest.approx(arc.span)
        assert left.contains(Direction(0.5))
        assert right.contains(Direction(-0.5))

    def test_cut_keeps_feasible_directions(self) -> None:
        arc = DirectionInterval.half_circle(Direction(0.0))
        kept = arc.cut(np.array([[0.0, 1.0]]))
        assert kept is not None
        assert kept.contains(Direction(0.5))
        assert not kept.contains(Direction(-0.5), strict=True)

    def test_disjoint_intersection_is_none(self) -> None:
        a = DirectionInterval(Direction(0.5), Direction(0.1))
        b = DirectionInterval(Direction(3.5), Direction(3.1))
        assert a.intersect(b) is None


class TestConvexHull:
    """Monotone-chain hull."""

    def test_interior_point_dropped(self) -> None:
        hull = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
        assert len(hull) == 4
        assert not hull.degenerate
        assert not np.any(np.all(hull.vertices == [0.5, 0.5], axis=1))

    def test_single_point_is_degenerate(self) -> None:
        hull = convex_hull([(0.0, 0.0)])
        assert len(hull) == 1
        assert hull.degenerate

    def test_collinear_points_give_segment(self) -> None:
        hull = convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])
        assert len(hull) == 2
        assert hull.degenerate

    def test_empty_input(self) -> None:
        with pytest.raises(EmptyInput):
            convex_hull([])

    @given(integer_clouds())
    def test_contains_every_input(self, points: np.ndarray) -> None:
        hull = convex_hull(points)
        assert np.all(hull.contains(points))

    @given(integer_clouds())
    def test_idempotent(self, points: np.ndarray) -> None:
        hull = convex_hull(points)
        again = convex_hull(hull.vertices)
        np.testing.assert_array_equal(again.vertices, hull.vertices)

    @given(integer_clouds())
    def test_strictly_convex_counterclockwise(self, points: np.ndarray) -> None:
        hull = convex_hull(points)
        if hull.degenerate:
            return
        v = hull.vertices
        edges = np.roll(v, -1, axis=0) - v
        turns = cross2(edges, np.roll(edges, -1, axis=0))
        assert np.all(turns > 0)

    @given(integer_clouds(max_size=12))
    def test_vertices_are_exactly_the_extreme_inputs(self, points: np.ndarray) -> None:
        hull = convex_hull(points)
        unique = np.unique(points, axis=0)
        for i, p in enumerate(unique):
            others = np.delete(unique, i, axis=0)
            extreme = len(others) == 0 or not convex_hull(others).contains(p[None, :])[0]
            is_vertex = hull.vertex_index(p) is not None
            assert extreme == is_vertex


class TestMaxMarginSeparator:
    """Perpendicular bisector of the closest pair between hulls."""

    def test_two_points(self) -> None:
        result = max_margin_separator(np.array([[0.0, 0.0]]), np.array([[2.0, 0.0]]))
        assert result.margin == pytest.approx(1.0)
        assert result.separator.decision(np.array([[1.0, 5.0]]))[0] == pytest.approx(0.0, abs=1e-12)
        assert result.separator.classify(np.array([[0.0, 0.0], [2.0, 0.0]])).tolist() == [1, -1]
        assert len(result.support) == 2

    def test_point_to_edge(self) -> None:
        result = max_margin_separator(np.array([[0.0, 0.0], [0.0, 2.0]]), np.array([[2.0, 1.0]]))
        assert result.margin == pytest.approx(1.0)
        assert result.separator.decision(np.array([[1.0, -3.0]]))[0] == pytest.approx(0.0, abs=1e-12)
        assert len(result.support) == 3

    def test_support_points_sit_on_the_margin(self) -> None:
        D = gen_separable(10, margin=0.8, direction=[1.0, 2.0], seed=3)
        result = max_margin_separator(D.positives, D.negatives)
        distances = np.abs(result.separator.decision(result.support))
        np.testing.assert_allclose(distances, result.margin, atol=1e-9)
        assert np.all(np.abs(result.separator.decision(D.points)) >= result.margin - 1e-9)

    def test_overlapping_hulls(self) -> None:
        with pytest.raises(NotSeparable):
            max_margin_separator(np.array([[0.0, 0.0], [2.0, 2.0]]), np.array([[2.0, 0.0], [0.0, 2.0]]))

    def test_empty_class(self) -> None:
        with pytest.raises(EmptyInput):
            max_margin_separator(np.zeros((0, 2)), np.array([[1.0, 1.0]]))

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 10_000), st.floats(0.0, 2 * math.pi), st.integers(1, 10))
    def test_matches_rotational_sweep(self, seed: int, theta: float, n: int) -> None:
        D = gen_separable(n, margin=1.0, direction=[math.cos(theta), math.sin(theta)], seed=seed)
        found = max_margin_separator(D.positives, D.negatives).margin
        reference = sweep_margin(D.positives, D.negatives)
        assert found >= reference - 1e-12
        assert found - reference <= MARGIN_REL_TOL * reference


class TestFeasibleInterval:
    """Normals of every separating halfplane."""

    def test_contains_max_margin_normal(self) -> None:
        D = gen_separable(15, margin=0.5, seed=11)
        arc = feasible_interval(D.positives, D.negatives)
        normal = max_margin_separator(D.positives, D.negatives).separator.direction
        assert arc.contains(normal, strict=True)

    def test_shared_point(self) -> None:
        with pytest.raises(NotSeparable):
            feasible_interval(np.array([[0.0, 0.0]]), np.array([[0.0, 0.0]]))


class TestProjectToBoundary:
    """Pushing points across a chord onto the far hull edges."""

    @pytest.fixture
    def square(self):
        return convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])

    def test_three_points_land_on_top_edge(self, square) -> None:
        points = np.array([[0.2, -1.0], [0.5, -2.0], [0.8, -0.5]])
        weights = project_to_boundary(square, (np.array([0.0, 0.0]), np.array([1.0, 0.0])), points)
        top = next(i for i in range(4) if set(map(tuple, square.edge(i))) == {(1.0, 1.0), (0.0, 1.0)})
        assert weights == [(top, 3)]

    def test_no_points_zero_weights(self, square) -> None:
        weights = project_to_boundary(square, (np.array([0.0, 0.0]), np.array([1.0, 0.0])), np.zeros((0, 2)))
        assert all(count == 0 for _, count in weights)

    def test_counts_are_conserved(self) -> None:
        rng = np.random.default_rng(5)
        hull = convex_hull(rng.normal(size=(40, 2)))
        p_l, p_r = hull.vertices[0], hull.vertices[len(hull) // 2]
        points = rng.normal(size=(100, 2))
        weights = project_to_boundary(hull, (p_l, p_r), points)
        assert sum(count for _, count in weights) == 100

    def test_chord_off_the_hull(self, square) -> None:
        with pytest.raises(InvalidChord):
            project_to_boundary(square, (np.array([0.5, 0.5]), np.array([1.0, 0.0])), np.zeros((0, 2)))


class TestWeightedMedianEdge:
    """First cumulative crossing of half the weight."""

    @pytest.mark.parametrize(
        ("weights", "expected"),
        [
            ([3, 5, 2], 1),
            ([1], 0),
            ([2, 2, 2, 2], 1),
        ],
    )
    def test_examples(self, weights: list[int], expected: int) -> None:
        assert weighted_median_edge(list(enumerate(weights))) == expected

    def test_zero_weight(self) -> None:
        with pytest.raises(NoUncertainPoints):
            weighted_median_edge([(0, 0), (1, 0)])


class TestInterleavedMedian:
    """Median over negative normals merged with antipodal positive normals."""

    def test_negatives_only_matches_edge_median(self) -> None:
        neg = [(Direction(3.0), 3.0), (Direction(2.0), 5.0), (Direction(1.0), 2.0)]
        choice = interleaved_median(neg, [])
        assert choice.source == "neg"
        assert choice.index == 1

    def test_two_element_merge(self) -> None:
        choice = interleaved_median([(Direction(0.1), 1.0)], [(Direction(math.pi + 0.2), 1.0)])
        assert choice.source == "pos"
        assert choice.direction.theta == pytest.approx(0.2)

    def test_zero_weight(self) -> None:
        with pytest.raises(NoUncertainPoints):
            interleaved_median([(Direction(0.1), 0.0)], [])

    @given(st.lists(st.tuples(st.floats(0.0, 6.28), st.integers(0, 5)), min_size=1, max_size=20))
    def test_each_side_carries_half(self, entries: list[tuple[float, int]]) -> None:
        total = sum(w for _, w in entries)
        if total == 0:
            return
        edges = [(Direction(theta), float(w)) for theta, w in entries]
        choice = interleaved_median(edges, [])
        chosen = choice.direction.theta
        ahead = sum(w for theta, w in entries if Direction(theta).theta > chosen)
        behind = sum(w for theta, w in entries if Direction(theta).theta < chosen)
        at = total - ahead - behind
        assert ahead + at >= total // 2
        assert behind + at >= total // 2


class TestIntervalSide:
    """Which side of a rejected direction survives a witness pair."""

    def test_perpendicular_witness(self) -> None:
        theta0 = 1.0
        arc = DirectionInterval(Direction(theta0 + 1.0), Direction(theta0 - 1.0))
        s = Direction(theta0 + math.pi / 2).unit
        side = interval_side((s, np.zeros(2)), Direction(theta0), arc)
        assert side is Side.LEFT_OF_V
        assert arc.side(Direction(theta0), side).contains(Direction(theta0 + 0.5))

    def test_aligned_witness_is_ambiguous(self) -> None:
        arc = DirectionInterval(Direction(2.0), Direction(0.0))
        with pytest.raises(AmbiguousWitness):
            interval_side((Direction(1.0).unit, np.zeros(2)), Direction(1.0), arc)

    @settings(deadline=None, max_examples=50)
    @given(st.floats(0.0, 2 * math.pi), st.floats(0.05, 0.6), st.integers(0, 1000))
    def test_keeps_planted_normal(self, planted: float, gap: float, seed: int) -> None:
        rng = np.random.default_rng(seed)
        h = Halfplane(Direction(planted).unit, 0.0)
        arc = DirectionInterval(Direction(planted + 1.0), Direction(planted - 1.0))
        v = Direction(planted + gap * (1 if seed % 2 else -1))
        # A positive and a negative that the rejected direction orders wrongly.
        s = y = None
        for _ in range(1000):
            a, b = rng.normal(size=(2, 2)) * 3
            if h.classify(a[None, :])[0] == h.classify(b[None, :])[0]:
                continue
            pos, neg = (a, b) if h.classify(a[None, :])[0] == 1 else (b, a)
            if v.unit @ pos < v.unit @ neg:
                s, y = pos, neg
                break
        if s is None:
            return
        side = interval_side((s, y), v, arc)
        assert arc.side(v, side).contains(Direction(planted))
