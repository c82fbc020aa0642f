"""Configuration-driven experiment runner."""

from importlib import resources
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .report import emit_report, read_json_rows, rows_to_csv, rows_to_json
from .runner import COLUMNS, ResultRow, run_experiment

__all__ = [
    "COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "bundled_scenarios",
    "emit_report",
    "load_config",
    "parse_config",
    "read_json_rows",
    "resolve_config_path",
    "rows_to_csv",
    "rows_to_json",
    "run_experiment",
]


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files(__package__) / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def resolve_config_path(name_or_path: str) -> Path:
    """A bundled scenario name (e.g. ``gamma_tail``) or a path to a TOML file."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise ConfigError(f"no config file or bundled scenario named {name_or_path!r}")
