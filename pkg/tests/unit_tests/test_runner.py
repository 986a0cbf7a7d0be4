"""Tests for experiment grids, reports and the lower-bound demonstrations."""

import json
from pathlib import Path

import pytest

from commlearn.errors import ConfigError
from commlearn.harness.runner import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    lowerbound_failures,
    run_experiment,
    run_indexing_demo,
    run_lowerbound_demo,
    run_method,
)
from commlearn.harness.generators import make_dataset


class TestExperimentConfig:
    """Validation and layering from plain mappings."""

    def test_unknown_method(self) -> None:
        with pytest.raises(ConfigError, match="bogus"):
            ExperimentConfig(methods=("bogus",))

    @pytest.mark.parametrize("epsilon", [0.0, 1.0, -0.1])
    def test_bad_epsilon(self, epsilon: float) -> None:
        with pytest.raises(ConfigError, match="epsilon"):
            ExperimentConfig(epsilon=epsilon)

    def test_nonpositive_sizes(self) -> None:
        with pytest.raises(ConfigError, match="positive"):
            ExperimentConfig(k=0)

    def test_from_mapping(self, tmp_path: Path) -> None:
        config = ExperimentConfig.from_mapping(
            {"methods": ["naive"], "datasets": "data1", "seeds": [1, 2], "epsilon": "0.1", "k": 3, "unused": True, "transcript_dir": str(tmp_path)}
        )
        assert config.methods == ("naive",)
        assert config.datasets == ("data1",)
        assert config.seeds == (1, 2)
        assert config.epsilon == 0.1
        assert config.k == 3
        assert config.transcript_dir == tmp_path

    def test_from_mapping_bad_number(self) -> None:
        with pytest.raises(ConfigError, match="Bad value for k"):
            ExperimentConfig.from_mapping({"k": "three"})


class TestRunMethod:
    def test_unknown_method(self) -> None:
        with pytest.raises(ConfigError):
            run_method("telepathy", make_dataset("data1", 2, 5), 0.05)

    def test_local_sends_nothing(self) -> None:
        accuracy, transcript = run_method("local", make_dataset("data1", 2, 20), 0.05)
        assert 0.0 <= accuracy <= 100.0
        assert len(transcript) == 0


class TestRunExperiment:
    """Grids, failure rows and report formats."""

    def test_rows_per_seed(self) -> None:
        report = run_experiment(ExperimentConfig(methods=("naive",), datasets=("data1",), seeds=(1, 2), n_per_class=10))
        assert [r.seed for r in report.rows] == [1, 2]
        assert all(r.accuracy_pct == 100.0 for r in report.rows)
        assert all(r.cost_points == 20 for r in report.rows)

    def test_empty_grid(self) -> None:
        report = run_experiment(ExperimentConfig(methods=(), datasets=("data1",)))
        assert report.rows == ()
        assert report.csv_text() == ",".join(CSV_COLUMNS) + "\n"

    def test_csv_is_reproducible(self) -> None:
        config = ExperimentConfig(methods=("naive", "random", "median"), datasets=("data1",), seeds=(3,), n_per_class=20)
        first = run_experiment(config).csv_text()
        assert first == run_experiment(config).csv_text()
        lines = first.splitlines()
        assert lines[0] == "method,dataset,seed,accuracy_pct,cost_points,cost_scalars,rounds"
        assert [line.split(",")[0] for line in lines[1:]] == ["naive", "random", "median"]

    def test_failed_run_becomes_a_nan_row(self) -> None:
        report = run_experiment(ExperimentConfig(methods=("median",), datasets=("data1",), dim=3, n_per_class=10))
        (row,) = report.rows
        assert row.failed
        assert "planar" in (row.error or "")
        assert row.csv_fields()[3] == "nan"
        assert len(report.gate_failures()) == 1

    def test_median_meets_the_accuracy_gate(self) -> None:
        report = run_experiment(ExperimentConfig(methods=("median",), datasets=("data1", "data2"), seeds=(0,), n_per_class=40))
        assert report.gate_failures() == []

    def test_transcripts_written(self, tmp_path: Path) -> None:
        run_experiment(ExperimentConfig(methods=("naive",), datasets=("data1",), seeds=(5,), n_per_class=5, transcript_dir=tmp_path))
        path = tmp_path / "naive-data1-5.jsonl"
        record = json.loads(path.read_text().splitlines()[0])
        assert record["kind"] == "bulk"
        assert record["points"] == 10

    def test_markdown_table(self) -> None:
        report = run_experiment(ExperimentConfig(methods=("naive", "voting"), datasets=("data1", "data3"), n_per_class=10))
        table = report.to_markdown()
        assert table.splitlines()[0] == "| Method | data1 Acc | data1 Cost | data3 Acc | data3 Cost |"
        assert "| naive | 100.00% |" in table

    def test_report_defaults(self) -> None:
        assert ExperimentReport().gate_failures() == []


class TestDemonstrations:
    """Error curves of the one-way lower-bound constructions."""

    def test_circle_curve(self) -> None:
        curve = run_lowerbound_demo(0.05, trials=500, seed=0)
        assert [p.budget for p in curve.points] == list(range(11))
        assert curve.points[-1].mean == 0.0
        assert curve.non_increasing()
        assert lowerbound_failures(curve) == []

    def test_circle_budgets_checked(self) -> None:
        with pytest.raises(ValueError, match="budgets"):
            run_lowerbound_demo(0.05, budgets=[11], trials=1)

    def test_circle_csv(self) -> None:
        curve = run_lowerbound_demo(0.25, trials=10, seed=1)
        assert curve.csv_text().splitlines()[0] == "budget,mean_error,bound"

    @pytest.mark.parametrize("kind", ["interval", "rect"])
    def test_indexing_curve(self, kind: str) -> None:
        curve = run_indexing_demo(kind, n=6, trials=100, seed=2)  # type: ignore[arg-type]
        assert curve.points[-1].mean == 0.0
        assert curve.non_increasing()
        assert curve.points[0].mean > 0.0
