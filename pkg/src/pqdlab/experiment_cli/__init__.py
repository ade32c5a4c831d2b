"""Batch front-end: configs, presets, runs and report files."""
from .config import config_hash, dump_text, load_config, model_from_config, validate
from .presets import available, load_model, load_regression
from .reports import manifest, write_reports
from .runner import run_experiment

__all__ = [
    "available",
    "config_hash",
    "dump_text",
    "load_config",
    "load_model",
    "load_regression",
    "manifest",
    "model_from_config",
    "run_experiment",
    "validate",
    "write_reports",
]
