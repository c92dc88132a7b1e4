"""Experiment orchestration, metrics and reports."""

from .artifacts import ArtifactStore
from .metrics import compute_metrics
from .pipeline import Experiment, run_experiment
from .report import emit_report, read_report_tsv

__all__ = [
    "ArtifactStore",
    "Experiment",
    "compute_metrics",
    "emit_report",
    "read_report_tsv",
    "run_experiment",
]
