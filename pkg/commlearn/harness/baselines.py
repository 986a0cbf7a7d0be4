"""Reference methods the protocols are compared against.

Every baseline routes its traffic to a fixed coordinator, the last party.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..errors import NotRealizable, NotSeparable
from ..geometry import Halfplane
from ..hypotheses import Dataset, SampleSizeSpec, constant_halfplane, epsilon_net_sample, fit_zero_error, max_margin
from .ledger import MessageKind, Transcript

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)


def party_names(k: int) -> list[str]:
    """``A``/``B`` for two parties, ``P1..Pk`` otherwise."""
    return ["A", "B"] if k == 2 else [f"P{i + 1}" for i in range(k)]  # noqa: PLR2004


@dataclass(frozen=True)
class LocalModel:
    """A party's max-margin separator and its margin.

    A party holding one class gets a constant separator and votes with zero
    confidence.
    """

    separator: Halfplane
    margin: float

    @classmethod
    def fit(cls, part: Dataset) -> LocalModel:
        """Raises NotRealizable if the part is not linearly separable."""
        if not part.has_both_classes:
            return cls(constant_halfplane(int(part.labels[0]), part.dim), math.inf)
        try:
            result = max_margin(part.positives, part.negatives)
        except NotSeparable as exc:
            raise NotRealizable(str(exc)) from exc
        return cls(result.separator, result.margin)

    @property
    def scalars(self) -> list[float]:
        return [*self.separator.normal.tolist(), self.separator.offset, self.margin]

    def votes(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predicted labels and confidences ``|signed distance| / margin``."""
        labels = self.separator.classify(points)
        if not math.isfinite(self.margin) or self.margin <= 0:
            return labels, np.zeros(len(labels))
        return labels, np.abs(self.separator.decision(points)) / self.margin


@dataclass(frozen=True)
class VotingClassifier:
    """Majority vote of local models; ties go to the side with the most confident voter."""

    models: tuple[LocalModel, ...]

    @property
    def dim(self) -> int:
        return self.models[0].separator.dim

    def classify(self, points: np.ndarray) -> np.ndarray:
        labels, confidence = zip(*(m.votes(points) for m in self.models), strict=True)
        votes = np.vstack(labels)
        conf = np.vstack(confidence)
        balance = np.sum(votes, axis=0)
        pos_conf = np.max(np.where(votes == 1, conf, -np.inf), axis=0)
        neg_conf = np.max(np.where(votes == -1, conf, -np.inf), axis=0)
        tie_break = np.where(pos_conf >= neg_conf, 1, -1)
        return np.where(balance > 0, 1, np.where(balance < 0, -1, tie_break)).astype(np.int64)


def _accuracy_pct(classifier: Halfplane | VotingClassifier, D: Dataset) -> float:
    return 100.0 * float(np.mean(classifier.classify(D.points) == D.labels))


def voting_accuracy(parts: Sequence[Dataset]) -> float:
    """Accuracy in percent of confidence voting over local models on the union."""
    classifier = VotingClassifier(tuple(LocalModel.fit(p) for p in parts))
    return _accuracy_pct(classifier, Dataset.concat(list(parts)))


def baseline_naive(parts: Sequence[Dataset], epsilon: float = 0.05, seed: int = 0) -> tuple[Halfplane, Transcript]:  # noqa: ARG001
    """Every party ships its whole dataset to the coordinator, which fits on the union.

    Raises:
        NotRealizable: If the union is not separable.
    """
    names = party_names(len(parts))
    transcript = Transcript()
    for name, part in zip(names[:-1], parts[:-1], strict=True):
        transcript.record(1, name, names[-1], MessageKind.BULK, part.points)
    h = fit_zero_error("halfplane", Dataset.concat(list(parts)))
    transcript.rounds = 1
    return h, transcript  # type: ignore[return-value]


def baseline_voting(parts: Sequence[Dataset], epsilon: float = 0.05, seed: int = 0) -> tuple[VotingClassifier, Transcript]:  # noqa: ARG001
    """Each party fits locally and ships its model and its data to the coordinator.

    The coordinator labels every point of the union by confidence voting, so
    the data travels as well as the models.

    Raises:
        NotRealizable: If some party's own data is not separable.
    """
    names = party_names(len(parts))
    transcript = Transcript()
    models = tuple(LocalModel.fit(p) for p in parts)
    for name, part, model in zip(names[:-1], parts[:-1], models[:-1], strict=True):
        transcript.record(1, name, names[-1], MessageKind.MODEL, None, model.scalars)
        transcript.record(1, name, names[-1], MessageKind.BULK, part.points)
    transcript.rounds = 1
    return VotingClassifier(models), transcript


def random_sample_size(dim: int, epsilon: float, constant_c: float = 1.0) -> SampleSizeSpec:
    """Sample of ``c * (d / eps) * ln(d / eps)`` points."""
    return SampleSizeSpec(dim, epsilon, constant_c)


def baseline_random(
    parts: Sequence[Dataset],
    epsilon: float = 0.05,
    seed: int | np.random.SeedSequence = 0,
    constant_c: float = 1.0,
) -> tuple[Halfplane, Transcript]:
    """Every party sends a uniform sample; the coordinator fits on its data plus the samples.

    Raises:
        NotRealizable: If the coordinator's fit fails.
    """
    names = party_names(len(parts))
    transcript = Transcript()
    spec = random_sample_size(parts[0].dim, epsilon, constant_c)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    received = [parts[-1]]
    for name, part, child in zip(names[:-1], parts[:-1], root.spawn(len(parts) - 1), strict=True):
        sample = epsilon_net_sample(part, spec, child)
        transcript.record(1, name, names[-1], MessageKind.SAMPLE, sample.points)
        received.append(sample)
    logger.debug("random baseline: %d-point samples to %s", spec.size, names[-1])
    h = fit_zero_error("halfplane", Dataset.concat(received))
    transcript.rounds = 1
    return h, transcript  # type: ignore[return-value]


def local_accuracy(parts: Sequence[Dataset]) -> float:
    """Mean accuracy in percent of each party's own zero-error fit on the union; nothing is sent.

    Raises:
        NotRealizable: If some party's own data is not separable.
    """
    union = Dataset.concat(list(parts))
    scores = [_accuracy_pct(fit_zero_error("halfplane", p), union) for p in parts]  # type: ignore[arg-type]
    return float(np.mean(scores))
