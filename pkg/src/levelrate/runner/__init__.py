"""Configuration, dataset ingestion and experiment drivers for the CLI."""

from .config import ExperimentConfig, load_config
from .data import load_dataset, make_imbalanced_blobs

__all__ = ["ExperimentConfig", "load_config", "load_dataset", "make_imbalanced_blobs"]
