"""Experiment runner: configuration, registry, rate fits and table output."""
from .config import ExperimentConfig, config_hash, load_config
from .experiments import EXPERIMENTS, run_experiment
from .tables import emit, fit_rate, parse

__all__ = ["ExperimentConfig", "config_hash", "load_config", "EXPERIMENTS",
           "run_experiment", "emit", "fit_rate", "parse"]
