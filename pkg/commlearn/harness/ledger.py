"""Message records and the append-only transcript every protocol writes to."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence


class MessageKind(StrEnum):
    SUMMARY = "summary"  # exact one-way constraint summaries
    SAMPLE = "sample"  # epsilon-net or reservoir samples
    SUPPORT = "support"  # two-way proposals
    ROTATE = "rotate"
    TERMINATE = "terminate"
    WITNESS = "witness"
    BULK = "bulk"  # whole datasets shipped by the baselines
    MODEL = "model"  # local classifiers shipped for voting


def payload_digest(points: np.ndarray | None, scalars: Sequence[float]) -> str:
    """Short content hash of a message payload."""
    h = hashlib.sha256()
    if points is not None and len(points):
        h.update(np.ascontiguousarray(points, dtype=float).tobytes())
    h.update(np.asarray(list(scalars), dtype=float).tobytes())
    return h.hexdigest()[:12]


@dataclass(frozen=True)
class Message:
    """One directed exchange and its cost.

    ``points`` counts labelled points in the payload; ``scalars`` counts every
    other real or flag sent alongside them.
    """

    round: int
    sender: str
    receiver: str
    kind: MessageKind
    points: int
    scalars: int
    digest: str

    def to_record(self) -> dict[str, object]:
        return {
            "round": self.round,
            "from": self.sender,
            "to": self.receiver,
            "kind": str(self.kind),
            "points": self.points,
            "scalars": self.scalars,
            "digest": self.digest,
        }


@dataclass
class Transcript:
    """Append-only message log with the statistics the protocols report.

    Attributes:
        rounds: Rounds completed by a two-way protocol.
        epochs: Coordinator epochs completed by the k-party protocol.
        u_history: Uncertain-set sizes, one entry per proposal.
        halving_violations: Rounds where the uncertain set did not halve.
        capped: True when a protocol stopped at its round cap.
        median_fallbacks: Rounds whose Median proposal did not come from the
            median edge.
    """

    _messages: list[Message] = field(default_factory=list)
    rounds: int = 0
    epochs: int = 0
    u_history: list[int] = field(default_factory=list)
    halving_violations: list[int] = field(default_factory=list)
    capped: bool = False
    median_fallbacks: list[int] = field(default_factory=list)
    _last_u: dict[str, int] = field(default_factory=dict, repr=False)

    def record(
        self,
        round_: int,
        sender: str,
        receiver: str,
        kind: MessageKind,
        points: np.ndarray | None = None,
        scalars: Sequence[float] = (),
    ) -> Message:
        """Append one message; ``points`` is the raw point payload (rows)."""
        n_points = 0 if points is None else len(points)
        message = Message(round_, sender, receiver, kind, n_points, len(scalars), payload_digest(points, scalars))
        self._messages.append(message)
        return message

    def absorb(self, other: Transcript, round_offset: int = 0) -> None:
        """Append another transcript's messages, shifting their rounds."""
        for m in other:
            self._messages.append(Message(m.round + round_offset, m.sender, m.receiver, m.kind, m.points, m.scalars, m.digest))

    def __iter__(self) -> Iterator[Message]:
        return iter(self._messages)

    def __len__(self) -> int:
        return len(self._messages)

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    @property
    def total_points(self) -> int:
        return sum(m.points for m in self._messages)

    @property
    def total_scalars(self) -> int:
        return sum(m.scalars for m in self._messages)

    def totals(self) -> dict[tuple[str, str], tuple[int, int]]:
        """Point and scalar totals per directed (sender, receiver) pair."""
        acc: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])
        for m in self._messages:
            acc[m.sender, m.receiver][0] += m.points
            acc[m.sender, m.receiver][1] += m.scalars
        return {pair: (p, s) for pair, (p, s) in acc.items()}

    def respects_order(self, order: Sequence[str]) -> bool:
        """True if every message goes from a party to its successor in ``order``."""
        position = {name: i for i, name in enumerate(order)}
        return all(position.get(m.receiver, -1) == position.get(m.sender, -2) + 1 for m in self._messages)

    def record_u(self, size: int, party: str = "") -> None:
        """Log a party's uncertain-set size and flag a proposal that failed to halve it."""
        before = self._last_u.get(party)
        if before is not None and size > -(-before // 2):
            self.halving_violations.append(len(self.u_history))
        self._last_u[party] = size
        self.u_history.append(size)

    def to_jsonl(self, path: Path) -> None:
        """Write one JSON object per message."""
        lines: Iterable[str] = (json.dumps(m.to_record()) for m in self._messages)
        Path(path).write_text("".join(f"{line}\n" for line in lines))
