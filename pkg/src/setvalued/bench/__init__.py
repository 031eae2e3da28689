"""Experiment orchestration: training pipelines, shift evaluation and reports."""

from .config import ConfigError, ExperimentConfig
from .metrics import MetricsReport, evaluate_shift, frpa, mean_var
from .pipelines import TrainData, TrainedSolution, prepare_data, run_bi, run_erm, run_ivo, run_method, run_rvo
from .report import write_report

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MetricsReport",
    "TrainData",
    "TrainedSolution",
    "evaluate_shift",
    "frpa",
    "mean_var",
    "prepare_data",
    "run_bi",
    "run_erm",
    "run_ivo",
    "run_method",
    "run_rvo",
    "write_report",
]
