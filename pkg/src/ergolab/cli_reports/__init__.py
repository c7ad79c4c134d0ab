"""Experiment runner: config parsing, seeded execution, report emission."""

from .config import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    build_map,
    build_observable,
    build_roof,
    build_step_function,
    build_target,
    validate,
)
from .experiments import RunReport, Trace, run

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "Trace",
    "build_map",
    "build_observable",
    "build_roof",
    "build_step_function",
    "build_target",
    "run",
    "validate",
]
