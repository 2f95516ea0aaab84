"""Experiment orchestration: configuration, execution and report files."""

from .config import ConfigValidationError, ExperimentConfig, config_hash, load_config, validate
from .report import PLOT_COLUMNS, emit_report
from .runner import EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_INVARIANT, EXIT_OK, execute, run_trials

__all__ = [
    "ConfigValidationError",
    "ExperimentConfig",
    "config_hash",
    "load_config",
    "validate",
    "PLOT_COLUMNS",
    "emit_report",
    "EXIT_CONFIG",
    "EXIT_INCONCLUSIVE",
    "EXIT_INVARIANT",
    "EXIT_OK",
    "execute",
    "run_trials",
]
