"""Entropy-imbalance-gain cascade of data-driven and expert-knowledge classifiers."""

from .cascade import CascadeConfig, CascadeTree, PredictionTrace, build_cascade, predict_with_trace
from .classifiers import ClassifierSpec, RuleSet, TrainedClassifier, fit, one_vs_rest_pool
from .data import Instance, LabeledDataset
from .metrics import DensityConfig, EntropyReport, EigScore
from .pipeline import EksaiiModel, train

__version__ = "0.1.0"

__all__ = [
    "CascadeConfig",
    "CascadeTree",
    "ClassifierSpec",
    "DensityConfig",
    "EigScore",
    "EksaiiModel",
    "EntropyReport",
    "Instance",
    "LabeledDataset",
    "PredictionTrace",
    "RuleSet",
    "TrainedClassifier",
    "build_cascade",
    "fit",
    "one_vs_rest_pool",
    "predict_with_trace",
    "train",
]
