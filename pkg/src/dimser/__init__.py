"""Dimensional speech emotion regression.

Acoustic feature extraction, error- and concordance-based training losses
with analytic gradients, a hand-rolled stacked-LSTM multitask regressor,
and an experiment harness for comparing the losses on the averaged
concordance metric.
"""

from . import nn
from .audio import FrameSpec, Waveform, frame_signal, load_wav
from .experiment import (
    DatasetSplit,
    ExperimentResult,
    TrainConfig,
    Utterance,
    grid_search_weights,
    loso_split,
    run_matrix,
    scale_labels,
    synthetic_corpus,
    train,
    unscale_labels,
)
from .features import FeatureVector, LldMatrix, extract_paa_llds, load_feature_csv, pool_hsf
from .losses import (
    BatchPair,
    LossKind,
    MomentSummary,
    MultitaskWeights,
    ccc,
    ccc_loss,
    loss_gradient,
    loss_value,
    mae,
    moments,
    mse,
    multitask_total,
)
from .metrics import EmotionTriple, EvaluationReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "BatchPair",
    "DatasetSplit",
    "EmotionTriple",
    "EvaluationReport",
    "ExperimentResult",
    "FeatureVector",
    "FrameSpec",
    "LldMatrix",
    "LossKind",
    "MomentSummary",
    "MultitaskWeights",
    "TrainConfig",
    "Utterance",
    "Waveform",
    "ccc",
    "ccc_loss",
    "evaluate",
    "extract_paa_llds",
    "frame_signal",
    "grid_search_weights",
    "load_feature_csv",
    "load_wav",
    "loso_split",
    "loss_gradient",
    "loss_value",
    "mae",
    "moments",
    "mse",
    "multitask_total",
    "nn",
    "pool_hsf",
    "run_matrix",
    "scale_labels",
    "synthetic_corpus",
    "train",
    "unscale_labels",
    "__version__",
]
