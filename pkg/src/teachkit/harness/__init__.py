"""Experiment runner, human-study protocol, and the session HTTP service."""

from .config import ExperimentConfig, HarnessError
from .experiment import run_experiment
from .study import (
    StudyError,
    StudyItem,
    StudySession,
    aggregate_reports,
    build_study_items,
    score_session,
)

__all__ = [
    "ExperimentConfig",
    "HarnessError",
    "run_experiment",
    "StudyError",
    "StudyItem",
    "StudySession",
    "aggregate_reports",
    "build_study_items",
    "score_session",
]
