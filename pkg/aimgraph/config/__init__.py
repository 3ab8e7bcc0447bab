"""Experiment configuration loading."""

from aimgraph.config.loader import (
    OUTPUT_ENV,
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    parse_config,
    validate_config,
)

__all__ = [
    "OUTPUT_ENV",
    "ConfigError",
    "ExperimentConfig",
    "apply_overrides",
    "load_config",
    "parse_config",
    "validate_config",
]
