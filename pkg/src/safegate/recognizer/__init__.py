"""Embedding-level safety recognizer: model, loss, training, persistence."""

from safegate.recognizer.network import (
    ForwardResult,
    RecognizerParams,
    Verdict,
    batch_scores,
    classify,
    default_hidden,
    forward,
    forward_batch,
    init_recognizer,
    make_dropout_masks,
    make_scorer,
)
from safegate.recognizer.loss import balanced_loss, gradient, loss_and_gradient
from safegate.recognizer.training import TrainingConfig, train
from safegate.recognizer.weights_io import load_params, persist_params
from safegate.recognizer.projection import RandomProjection, load_projection, save_projection

__all__ = [
    "ForwardResult",
    "RecognizerParams",
    "Verdict",
    "batch_scores",
    "classify",
    "default_hidden",
    "forward",
    "forward_batch",
    "init_recognizer",
    "make_dropout_masks",
    "make_scorer",
    "balanced_loss",
    "gradient",
    "loss_and_gradient",
    "TrainingConfig",
    "train",
    "load_params",
    "persist_params",
    "RandomProjection",
    "load_projection",
    "save_projection",
]
