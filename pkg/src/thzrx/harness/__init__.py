"""Experiment harness: configuration, scenario runners, plotting, CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .runner import NumericFailure, run

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "NumericFailure", "run"]
