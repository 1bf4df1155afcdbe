"""Generative Bayesian optimization over fixed-length discrete sequences."""

from genbo.acquisition import ThresholdSchedule, UtilityKind, compute_threshold, utility
from genbo.blackbox import AlohaTask, BlackBox, EhrlichFunction, ehrlich_new, levenshtein
from genbo.core import Dataset, Observation, RoundRecord, Vocab, rng_stream, seq_from_string, seq_to_string
from genbo.engine import ExperimentConfig, MethodConfig, TaskConfig, run_experiment
from genbo.losses import LossKind, LossSpec
from genbo.proposal import MeanFieldParams
from genbo.trainer import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "AlohaTask",
    "BlackBox",
    "Dataset",
    "EhrlichFunction",
    "ExperimentConfig",
    "LossKind",
    "LossSpec",
    "MeanFieldParams",
    "MethodConfig",
    "Observation",
    "RoundRecord",
    "TaskConfig",
    "ThresholdSchedule",
    "TrainConfig",
    "UtilityKind",
    "Vocab",
    "compute_threshold",
    "ehrlich_new",
    "levenshtein",
    "rng_stream",
    "run_experiment",
    "seq_from_string",
    "seq_to_string",
    "utility",
]
