"""Weakly supervised oversampling for highly imbalanced, high-dimensional binary data."""

from .dataset import Dataset, GenSpec, generate_synthetic, load_csv
from .numerics import RandomStream
from .pipeline import PipelineConfig, TrainedPipeline, evaluate, fit, run_baseline, run_experiment

__all__ = [
    "Dataset",
    "GenSpec",
    "PipelineConfig",
    "RandomStream",
    "TrainedPipeline",
    "evaluate",
    "fit",
    "generate_synthetic",
    "load_csv",
    "run_baseline",
    "run_experiment",
]
__version__ = "0.1.0"
