"""Tests for the two-way support protocols and their uncertainty sets."""

from dataclasses import replace

import numpy as np
import pytest

from commlearn.harness.generators import make_dataset
from commlearn.harness.ledger import MessageKind
from commlearn.harness.suites import lp_misclassifiable
from commlearn.hypotheses import Dataset, error_count
from commlearn.twoway import (
    NodeState,
    SupportMessage,
    agreement_sets,
    initial_state,
    iterative_supports,
    k_party_two_way,
    median_round_cap,
    propose,
    respond,
    uncertain_mask,
    update_state,
)


def plane(pos: list[tuple[float, float]], neg: list[tuple[float, float]]) -> Dataset:
    return Dataset(np.array(pos + neg, dtype=float).reshape(-1, 2), np.array([1] * len(pos) + [-1] * len(neg)))


@pytest.fixture
def triangle_state() -> NodeState:
    return initial_state("A", plane([(0, 1), (2, 1), (1, 3)], [(0, -1), (2, -1), (1, -3)]))


class TestRoundCap:
    def test_cap_at_five_percent(self) -> None:
        assert median_round_cap(0.05) == 9

    def test_cap_grows_as_epsilon_shrinks(self) -> None:
        assert median_round_cap(0.001) > median_round_cap(0.1)


class TestIterativeSupports:
    """The alternating A/B protocol."""

    def test_immediate_acceptance(self) -> None:
        D_A = plane([(0, 1), (1, 1)], [(0, -1), (1, -1)])
        D_B = plane([(0, 5), (1, 6)], [])
        h, transcript = iterative_supports(D_A, D_B, 0.05)
        assert transcript.rounds == 1
        assert [m.kind for m in transcript] == [MessageKind.SUPPORT, MessageKind.TERMINATE]
        assert transcript.total_points == transcript.messages[0].points
        assert error_count(h, Dataset.concat([D_A, D_B])).misclassified_count == 0

    @pytest.mark.parametrize("dataset", ["data1", "data2"])
    def test_median_within_budget(self, dataset: str) -> None:
        epsilon = 0.05
        D_A, D_B = make_dataset(dataset, 2, 40, seed=2)
        h, transcript = iterative_supports(D_A, D_B, epsilon, "median")
        union = Dataset.concat([D_A, D_B])
        assert error_count(h, union).misclassified_count <= epsilon * len(union)
        assert transcript.rounds <= median_round_cap(epsilon)
        assert transcript.total_points < len(union)

    def test_maxmarg_within_budget(self, square_split: tuple[Dataset, Dataset]) -> None:
        D_A, D_B = square_split
        h, _ = iterative_supports(D_A, D_B, 0.05, "maxmarg")
        assert error_count(h, Dataset.concat([D_A, D_B])).misclassified_count == 0

    def test_maxmarg_in_three_dims(self) -> None:
        epsilon = 0.05
        D_A, D_B = make_dataset("data1", 2, 30, dim=3, seed=1)
        h, _ = iterative_supports(D_A, D_B, epsilon, "maxmarg")
        union = Dataset.concat([D_A, D_B])
        assert error_count(h, union).misclassified_count <= epsilon * len(union)

    def test_median_needs_the_plane(self) -> None:
        D_A, D_B = make_dataset("data1", 2, 10, dim=3, seed=1)
        with pytest.raises(ValueError, match="planar"):
            iterative_supports(D_A, D_B, 0.05, "median")

    def test_one_class_union(self) -> None:
        D_A = plane([(0, 1)], [])
        D_B = plane([(3, 3), (4, 4)], [])
        h, transcript = iterative_supports(D_A, D_B, 0.05)
        assert len(transcript) == 0
        assert error_count(h, Dataset.concat([D_A, D_B])).misclassified_count == 0

    def test_opposite_one_class_parties_seed_a_witness(self) -> None:
        D_A = plane([(0, 1), (1, 2)], [])
        D_B = plane([], [(0, -1), (1, -2)])
        h, transcript = iterative_supports(D_A, D_B, 0.05)
        assert transcript.messages[0].kind is MessageKind.WITNESS
        assert transcript.messages[0].round == 0
        assert error_count(h, Dataset.concat([D_A, D_B])).misclassified_count == 0

    def test_observer_sees_states(self, square_split: tuple[Dataset, Dataset]) -> None:
        seen: list[NodeState] = []
        iterative_supports(*square_split, 0.05, observer=seen.append)
        assert {s.name for s in seen} == {"A", "B"}


class TestKPartyTwoWay:
    """Coordinator epochs over k parties."""

    def test_two_parties_match_the_pair_protocol(self) -> None:
        D_A, D_B = make_dataset("data1", 2, 30, seed=4)
        h_pair, t_pair = iterative_supports(D_A, D_B, 0.05)
        h_k, t_k = k_party_two_way([D_A, D_B], 0.05)
        np.testing.assert_allclose(h_k.normal, h_pair.normal)
        assert h_k.offset == pytest.approx(h_pair.offset)
        assert t_k.total_points == t_pair.total_points

    def test_three_parties(self) -> None:
        epsilon = 0.05
        parts = make_dataset("data1", 3, 30, seed=6)
        h, transcript = k_party_two_way(parts, epsilon)
        union = Dataset.concat(parts)
        assert error_count(h, union).misclassified_count <= epsilon * len(union)
        assert transcript.epochs >= 1

    def test_single_party(self) -> None:
        parts = make_dataset("data1", 1, 20, seed=0)
        h, transcript = k_party_two_way(parts, 0.05)
        assert len(transcript) == 0
        assert error_count(h, parts[0]).misclassified_count == 0


class TestUncertainty:
    """Sets of total agreement and of uncertainty."""

    @pytest.fixture
    def known(self) -> Dataset:
        return plane([(0, 1), (2, 1), (1, 3)], [(0, -1), (2, -1)])

    @pytest.fixture
    def own(self) -> Dataset:
        return plane([(1, 2), (1, 10), (5, 0)], [])

    def test_mask(self, known: Dataset, own: Dataset) -> None:
        assert uncertain_mask(own, known).tolist() == [False, False, True]

    def test_mask_matches_linear_program(self, known: Dataset, own: Dataset) -> None:
        expected = [lp_misclassifiable(p, int(y), known) for p, y in zip(own.points, own.labels, strict=True)]
        assert uncertain_mask(own, known).tolist() == expected

    def test_nothing_known(self, own: Dataset) -> None:
        assert uncertain_mask(own, None).all()

    def test_agreement_sets_partition_own(self, known: Dataset, own: Dataset) -> None:
        sota, sou = agreement_sets(known, own)
        assert len(sota) == 2
        assert len(sou) == 1
        assert sou[0].coords == (5.0, 0.0)

    def test_mask_is_planar_only(self) -> None:
        own = Dataset(np.zeros((1, 3)), np.array([1]))
        with pytest.raises(ValueError, match="planar"):
            uncertain_mask(own, None)


class TestStateMachine:
    """propose / respond / update_state step by step."""

    def test_first_exchange(self) -> None:
        D_A, D_B = make_dataset("data2", 2, 40, seed=3)
        a = initial_state("A", D_A)
        b = initial_state("B", D_B)
        assert a.uncertain_count == len(D_A)
        msg, a = propose(a, "median")
        assert isinstance(msg, SupportMessage)
        assert 2 <= len(msg.points) <= 3
        assert a.pending is msg
        assert len(msg.scalars()) == 5
        reply, b = respond(b, msg, 0.05, "median")
        a = update_state(a, reply)
        assert a.pending is None
        assert a.uncertain_count <= len(D_A)

    def test_median_fallback_is_flagged(self, triangle_state: NodeState) -> None:
        """Verify a proposal with nothing uncertain is marked as a fallback."""
        settled = replace(triangle_state, uncertain=np.zeros(len(triangle_state.own), dtype=bool))
        msg, _ = propose(settled, "median")
        assert msg.fallback is True

    def test_fallback_rounds_in_transcript(self) -> None:
        D_A, D_B = make_dataset("data2", 2, 40, seed=2)
        _, transcript = iterative_supports(D_A, D_B, 0.05, "median")
        assert transcript.median_fallbacks == sorted(set(transcript.median_fallbacks))
        assert all(1 <= r <= transcript.rounds for r in transcript.median_fallbacks)


class TestNodeStateGeometry:
    """Hulls of settled points and the boundary pair facing the arc."""

    def test_sota_hulls_start_empty(self, triangle_state: NodeState) -> None:
        assert triangle_state.sota_pos is None
        assert triangle_state.sota_neg is None

    def test_sota_hull_of_settled_points(self, triangle_state: NodeState) -> None:
        state = replace(triangle_state, uncertain=np.array([False, False, True, True, False, False]))
        assert state.sota_pos is not None
        assert {tuple(v) for v in state.sota_pos.vertices.tolist()} == {(0.0, 1.0), (2.0, 1.0)}
        assert state.sota_neg is not None
        assert {tuple(v) for v in state.sota_neg.vertices.tolist()} == {(2.0, -1.0), (1.0, -3.0)}

    def test_boundary_pair_on_own_hull(self, triangle_state: NodeState) -> None:
        pair = triangle_state.boundary_pair(-1)
        assert pair is not None
        negatives = {tuple(p) for p in triangle_state.own.negatives.tolist()}
        assert {tuple(p) for p in (pair[0].tolist(), pair[1].tolist())} <= negatives

    def test_no_boundary_pair_without_an_arc(self) -> None:
        state = initial_state("A", plane([(0, 1), (2, 1)], []))
        assert state.interval is None
        assert state.boundary_pair(1) is None


@pytest.mark.timeout(600)
@pytest.mark.parametrize("dataset", ["data1", "data2", "data3"])
def test_median_halves_at_full_size(dataset: str) -> None:
    """Verify Median halves every uncertain set and stays within the round cap."""
    epsilon = 0.05
    D_A, D_B = make_dataset(dataset, 2, 250, seed=0)
    _, transcript = iterative_supports(D_A, D_B, epsilon, "median")
    assert transcript.halving_violations == []
    assert transcript.rounds <= median_round_cap(epsilon)
