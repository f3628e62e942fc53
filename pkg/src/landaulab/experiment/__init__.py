"""Configuration, scenario catalog, persistence and the CLI."""

from .config import ExperimentConfig, load_config, parse_config, serialize
from .io import read_snapshot, write_snapshot
from .runner import RunResult, run_experiment
from .scenarios import CATALOG, build_scenario

__all__ = [
    "CATALOG",
    "ExperimentConfig",
    "RunResult",
    "build_scenario",
    "load_config",
    "parse_config",
    "read_snapshot",
    "run_experiment",
    "serialize",
    "write_snapshot",
]
