"""Tests for the Naive, Voting, Random and Local baselines."""

import math

import numpy as np
import pytest

from commlearn.geometry import Halfplane
from commlearn.harness.baselines import (
    LocalModel,
    VotingClassifier,
    baseline_naive,
    baseline_random,
    baseline_voting,
    local_accuracy,
    party_names,
    random_sample_size,
)
from commlearn.harness.generators import gen_voting_killer, make_dataset
from commlearn.harness.ledger import MessageKind
from commlearn.hypotheses import Dataset, error_count


def test_party_names() -> None:
    assert party_names(2) == ["A", "B"]
    assert party_names(3) == ["P1", "P2", "P3"]


class TestNaive:
    def test_ships_everything(self) -> None:
        D_A, D_B = make_dataset("data1", 2, 25, seed=0)
        h, transcript = baseline_naive([D_A, D_B])
        assert transcript.total_points == len(D_A)
        assert [m.kind for m in transcript] == [MessageKind.BULK]
        assert error_count(h, Dataset.concat([D_A, D_B])).misclassified_count == 0

    def test_k_parties_send_to_the_last(self) -> None:
        parts = make_dataset("data1", 4, 10, seed=1)
        _, transcript = baseline_naive(parts)
        assert {m.receiver for m in transcript} == {"P4"}
        assert transcript.total_points == sum(len(p) for p in parts[:-1])


class TestVoting:
    def test_fails_on_the_voting_killer(self) -> None:
        parts = gen_voting_killer(100, seed=0)
        classifier, transcript = baseline_voting(parts)
        union = Dataset.concat(list(parts))
        accuracy = 100.0 * float(np.mean(classifier.classify(union.points) == union.labels))
        assert accuracy <= 60.0
        assert transcript.total_points == len(parts[0])
        assert transcript.total_scalars == 4

    def test_one_class_model_votes_without_confidence(self) -> None:
        model = LocalModel.fit(Dataset(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([1, 1])))
        assert math.isinf(model.margin)
        labels, confidence = model.votes(np.array([[5.0, 5.0]]))
        assert labels.tolist() == [1]
        assert confidence.tolist() == [0.0]

    def test_tie_goes_to_the_more_confident_side(self) -> None:
        sure = LocalModel(Halfplane(np.array([1.0, 0.0]), 0.0), 1.0)
        unsure = LocalModel(Halfplane(np.array([-1.0, 0.0]), 0.0), 10.0)
        classifier = VotingClassifier((sure, unsure))
        assert classifier.classify(np.array([[2.0, 0.0], [-2.0, 0.0]])).tolist() == [1, -1]

    def test_majority_wins(self) -> None:
        up = LocalModel(Halfplane(np.array([0.0, 1.0]), 0.0), 1.0)
        down = LocalModel(Halfplane(np.array([0.0, -1.0]), 0.0), 0.01)
        classifier = VotingClassifier((up, up, down))
        assert classifier.classify(np.array([[0.0, 1.0]])).tolist() == [1]


class TestRandom:
    def test_sample_size(self) -> None:
        assert random_sample_size(2, 0.05).size == 148

    def test_large_sample_matches_naive(self) -> None:
        parts = make_dataset("data1", 2, 30, seed=2)
        h_naive, t_naive = baseline_naive(parts)
        h_random, t_random = baseline_random(parts, 0.05, seed=0, constant_c=100.0)
        assert t_random.total_points == t_naive.total_points
        np.testing.assert_allclose(h_random.normal, h_naive.normal)
        assert h_random.offset == pytest.approx(h_naive.offset)

    def test_seeded(self) -> None:
        parts = make_dataset("data1", 3, 200, seed=3)
        _, first = baseline_random(parts, 0.1, seed=9)
        _, second = baseline_random(parts, 0.1, seed=9)
        assert [m.digest for m in first] == [m.digest for m in second]
        assert all(m.points == random_sample_size(2, 0.1).size for m in first)


def test_local_accuracy_is_a_percentage() -> None:
    parts = make_dataset("data2", 2, 50, seed=0)
    accuracy = local_accuracy(parts)
    assert 0.0 <= accuracy <= 100.0
