"""Configuration, constants, presets and logging setup for the CLI."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import dotenv
import yaml
from rich.console import Console
from rich.logging import RichHandler

from .errors import ConfigError

dotenv.load_dotenv()

COLORS = {
    "primary": "#ca8a04",  # Mustard gold
    "dim": "#78716c",  # Warm gray
    "ok": "#15803d",
    "fail": "#b91c1c",
}

# Rich console instance
console = Console(highlight=False)

DEFAULT_EPSILON = 0.05
DEFAULT_N_PER_CLASS = 250

METHODS = ("naive", "voting", "random", "maxmarg", "median", "local")
DATASETS = ("data1", "data2", "data3")

# Keys accepted in a --config file; they mirror the long flag names.
CONFIG_KEYS = frozenset(
    {
        "methods",
        "datasets",
        "seeds",
        "epsilon",
        "k",
        "dim",
        "n_per_class",
        "support",
        "jobs",
        "out",
        "sample_c",
        "margin",
        "trials",
        "experiment",
    }
)

PRESETS: dict[str, dict[str, Any]] = {
    "table2": {
        "experiment": "grid",
        "methods": ["naive", "voting", "random", "maxmarg", "median"],
        "datasets": ["data1", "data2", "data3"],
        "k": 2,
        "dim": 2,
    },
    "table3": {
        "experiment": "grid",
        "methods": ["naive", "voting", "random", "maxmarg"],
        "datasets": ["data1", "data2", "data3"],
        "k": 2,
        "dim": 10,
    },
    "table4": {
        "experiment": "grid",
        "methods": ["naive", "voting", "random", "maxmarg", "median"],
        "datasets": ["data1", "data2", "data3"],
        "k": 4,
        "dim": 2,
    },
    "lowerbound": {
        "experiment": "lowerbound",
        "epsilon": DEFAULT_EPSILON,
        "trials": 500,
    },
}

PRESET_ALIASES = {"two-party": "table2", "high-dim": "table3", "four-party": "table4"}
PRESET_NAMES = (*PRESETS, *PRESET_ALIASES)


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a flat YAML mapping of experiment settings.

    Raises:
        ConfigError: If the file is unreadable, not a mapping, or has unknown keys.
    """
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        msg = f"Cannot read config file {path}: {exc}"
        raise ConfigError(msg) from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        msg = f"Config file {path} must hold a mapping, got {type(data).__name__}"
        raise ConfigError(msg)
    data = {str(k).replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        msg = f"Unknown config keys in {path}: {', '.join(unknown)}"
        raise ConfigError(msg)
    return data


def layer_config(preset: str | None, file_values: dict[str, Any], flag_values: dict[str, Any]) -> dict[str, Any]:
    """Merge preset, file and explicit flags, later layers winning.

    Flags whose value is None were not given and do not override.
    """
    preset = PRESET_ALIASES.get(preset, preset) if preset is not None else None
    if preset is not None and preset not in PRESETS:
        msg = f"Unknown preset {preset!r}; choose from {', '.join(PRESET_NAMES)}"
        raise ConfigError(msg)
    merged: dict[str, Any] = dict(PRESETS[preset]) if preset else {}
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


@dataclass
class Settings:
    """Defaults read from the environment.

    Attributes:
        seed: Fallback seed when no ``--seed``/``--seeds`` is given.
        jobs: Default number of worker processes.
        out_dir: Default output directory.
        log_level: Logging level name used without ``-v``.
    """

    seed: int | None
    jobs: int
    out_dir: Path
    log_level: str

    @classmethod
    def from_environment(cls) -> Settings:
        """Create settings from ``COMMLEARN_*`` environment variables.

        Raises:
            ConfigError: If a numeric variable does not parse.
        """
        raw_seed = os.environ.get("COMMLEARN_SEED")
        raw_jobs = os.environ.get("COMMLEARN_JOBS", "1")
        try:
            seed = int(raw_seed) if raw_seed else None
            jobs = max(1, int(raw_jobs))
        except ValueError as exc:
            msg = f"COMMLEARN_SEED and COMMLEARN_JOBS must be integers: {exc}"
            raise ConfigError(msg) from exc
        return cls(
            seed=seed,
            jobs=jobs,
            out_dir=Path(os.environ.get("COMMLEARN_OUT", "results")),
            log_level=os.environ.get("COMMLEARN_LOG_LEVEL", "WARNING").upper(),
        )

    @property
    def has_seed(self) -> bool:
        """Check if a fallback seed is configured."""
        return self.seed is not None


def configure_logging(verbose: int = 0, settings: Settings | None = None) -> None:
    """Route library logging through a single rich handler.

    ``verbose`` 1 selects INFO and 2 or more selects DEBUG; otherwise the
    level comes from ``COMMLEARN_LOG_LEVEL``.
    """
    if verbose >= 2:  # noqa: PLR2004
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        name = (settings or Settings.from_environment()).log_level
        level = logging.getLevelNamesMapping().get(name, logging.WARNING)
    root = logging.getLogger("commlearn")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.addHandler(RichHandler(console=console, show_path=False, markup=False))
    root.setLevel(level)
