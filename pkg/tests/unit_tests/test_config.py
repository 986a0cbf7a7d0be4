"""Tests for config files, preset layering, environment settings and logging."""

import logging
from pathlib import Path

import pytest

from commlearn.config import PRESETS, Settings, configure_logging, layer_config, load_config_file
from commlearn.errors import ConfigError


class TestLoadConfigFile:
    """YAML config files."""

    def test_dashes_become_underscores(self, tmp_path: Path) -> None:
        """Verify long flag spellings are accepted as keys."""
        path = tmp_path / "run.yaml"
        path.write_text("n-per-class: 40\nmethods: [naive, median]\nepsilon: 0.1\n")
        assert load_config_file(path) == {"n_per_class": 40, "methods": ["naive", "median"], "epsilon": 0.1}

    def test_empty_file(self, tmp_path: Path) -> None:
        """Verify an empty file means no settings."""
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config_file(path) == {}

    def test_unknown_key(self, tmp_path: Path) -> None:
        """Verify typos are reported."""
        path = tmp_path / "bad.yaml"
        path.write_text("epsilo: 0.1\n")
        with pytest.raises(ConfigError, match="epsilo"):
            load_config_file(path)

    def test_not_a_mapping(self, tmp_path: Path) -> None:
        """Verify a list at top level is rejected."""
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config_file(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Verify an unreadable file is a config error."""
        with pytest.raises(ConfigError, match="Cannot read"):
            load_config_file(tmp_path / "nope.yaml")


class TestLayerConfig:
    """Preset, then file, then flags."""

    def test_later_layers_win(self) -> None:
        merged = layer_config("table2", {"k": 3, "epsilon": 0.1}, {"epsilon": 0.2, "dim": None})
        assert merged["k"] == 3
        assert merged["epsilon"] == 0.2
        assert merged["dim"] == PRESETS["table2"]["dim"]

    @pytest.mark.parametrize(("alias", "name"), [("two-party", "table2"), ("high-dim", "table3"), ("four-party", "table4")])
    def test_aliases(self, alias: str, name: str) -> None:
        assert layer_config(alias, {}, {}) == PRESETS[name]

    def test_no_preset(self) -> None:
        assert layer_config(None, {}, {"seeds": [1]}) == {"seeds": [1]}

    def test_unknown_preset(self) -> None:
        with pytest.raises(ConfigError, match="Unknown preset"):
            layer_config("nine", {}, {})


class TestSettings:
    """COMMLEARN_* environment variables."""

    def test_defaults(self) -> None:
        settings = Settings.from_environment()
        assert settings.seed is None
        assert not settings.has_seed
        assert settings.jobs == 1
        assert settings.out_dir == Path("results")
        assert settings.log_level == "WARNING"

    def test_from_environment(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("COMMLEARN_SEED", "42")
        monkeypatch.setenv("COMMLEARN_JOBS", "3")
        monkeypatch.setenv("COMMLEARN_OUT", "/tmp/out")
        monkeypatch.setenv("COMMLEARN_LOG_LEVEL", "info")
        settings = Settings.from_environment()
        assert settings.seed == 42
        assert settings.jobs == 3
        assert settings.out_dir == Path("/tmp/out")
        assert settings.log_level == "INFO"

    def test_bad_integer(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("COMMLEARN_JOBS", "many")
        with pytest.raises(ConfigError, match="integers"):
            Settings.from_environment()


class TestConfigureLogging:
    """Verbosity flags map to levels on the package logger."""

    @pytest.mark.parametrize(("verbose", "level"), [(1, logging.INFO), (2, logging.DEBUG), (3, logging.DEBUG)])
    def test_verbose(self, verbose: int, level: int) -> None:
        configure_logging(verbose)
        assert logging.getLogger("commlearn").level == level

    def test_environment_level(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("COMMLEARN_LOG_LEVEL", "error")
        configure_logging(0)
        assert logging.getLogger("commlearn").level == logging.ERROR

    def test_single_handler(self) -> None:
        configure_logging(0)
        configure_logging(1)
        assert len(logging.getLogger("commlearn").handlers) == 1
