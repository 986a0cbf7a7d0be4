"""Tests for message accounting."""

import json
from pathlib import Path

import numpy as np

from commlearn.harness.ledger import MessageKind, Transcript, payload_digest


def two_hop() -> Transcript:
    transcript = Transcript()
    transcript.record(1, "P1", "P2", MessageKind.SUMMARY, np.zeros((2, 1)), [1.0])
    transcript.record(2, "P2", "P3", MessageKind.SUMMARY, np.ones((3, 1)), [1.0, 0.0])
    return transcript


class TestTranscript:
    """Append-only log and its totals."""

    def test_totals(self) -> None:
        transcript = two_hop()
        assert len(transcript) == 2
        assert transcript.total_points == 5
        assert transcript.total_scalars == 3
        assert transcript.totals() == {("P1", "P2"): (2, 1), ("P2", "P3"): (3, 2)}

    def test_order(self) -> None:
        transcript = two_hop()
        assert transcript.respects_order(["P1", "P2", "P3"])
        assert not transcript.respects_order(["P2", "P1", "P3"])
        transcript.record(3, "P3", "P1", MessageKind.SUMMARY)
        assert not transcript.respects_order(["P1", "P2", "P3"])

    def test_halving_violations(self) -> None:
        transcript = Transcript()
        transcript.record_u(10, "A")
        transcript.record_u(5, "A")
        transcript.record_u(7, "B")
        transcript.record_u(3, "A")
        assert transcript.halving_violations == []
        transcript.record_u(2, "A")
        transcript.record_u(5, "B")
        assert transcript.halving_violations == [5]
        assert transcript.u_history == [10, 5, 7, 3, 2, 5]

    def test_jsonl(self, tmp_path: Path) -> None:
        path = tmp_path / "t.jsonl"
        two_hop().to_jsonl(path)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(records) == 2
        assert set(records[0]) == {"round", "from", "to", "kind", "points", "scalars", "digest"}
        assert records[1]["kind"] == "summary"
        assert records[1]["points"] == 3

    def test_absorb_shifts_rounds(self) -> None:
        transcript = Transcript()
        transcript.record(1, "A", "B", MessageKind.WITNESS, np.zeros((1, 2)))
        transcript.absorb(two_hop(), round_offset=4)
        assert [m.round for m in transcript] == [1, 5, 6]
        assert transcript.total_points == 6


class TestPayloadDigest:
    def test_depends_on_content(self) -> None:
        a = payload_digest(np.zeros((1, 2)), [1.0])
        assert a == payload_digest(np.zeros((1, 2)), [1.0])
        assert a != payload_digest(np.ones((1, 2)), [1.0])
        assert len(a) == 12
