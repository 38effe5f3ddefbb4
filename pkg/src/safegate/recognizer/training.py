"""Mini-batch training with adaptive-moment updates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from safegate.errors import DimMismatch, SingleClassDataset
from safegate.recognizer.loss import loss_and_gradient
from safegate.recognizer.network import RecognizerParams, make_dropout_masks


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def train(
    dataset: Sequence,
    cfg: TrainingConfig,
    init: RecognizerParams,
) -> tuple[RecognizerParams, list[float]]:
    """Train a recognizer, returning new params and per-epoch mean losses.

    The epoch shuffle, the dropout masks, and therefore the whole run are a
    pure function of (dataset, cfg, init): one generator seeded with cfg.seed
    drives every random draw in order.
    """
    labels = {int(item.label) for item in dataset}
    if not labels >= {0, 1}:
        raise SingleClassDataset("training data must contain both classes")
    d_in = init.layer_dims[0]
    for i, item in enumerate(dataset):
        vec = np.asarray(item.embedding)
        if vec.ravel().shape[0] != d_in:
            raise DimMismatch(f"record {i} has dim {vec.ravel().shape[0]}, expected {d_in}")

    params = init.copy()
    items = list(dataset)
    n = len(items)
    rng = np.random.default_rng(cfg.seed)

    m_w = [np.zeros(w.shape, dtype=np.float64) for w in params.weights]
    v_w = [np.zeros(w.shape, dtype=np.float64) for w in params.weights]
    m_b = [np.zeros(b.shape, dtype=np.float64) for b in params.biases]
    v_b = [np.zeros(b.shape, dtype=np.float64) for b in params.biases]
    step = 0

    history: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            batch = [items[i] for i in order[start : start + cfg.batch_size]]
            masks = None
            if params.dropout_rate > 0.0:
                masks = make_dropout_masks(params, len(batch), rng)
            loss, d_w, d_b = loss_and_gradient(params, batch, masks)
            epoch_losses.append(loss)
            step += 1
            _adam_update(params.weights, d_w, m_w, v_w, cfg, step)
            _adam_update(params.biases, d_b, m_b, v_b, cfg, step)
        history.append(float(np.mean(epoch_losses)))

    params.seed = cfg.seed
    return params, history


def _adam_update(
    tensors: list[np.ndarray],
    grads: list[np.ndarray],
    m: list[np.ndarray],
    v: list[np.ndarray],
    cfg: TrainingConfig,
    step: int,
) -> None:
    bias1 = 1.0 - cfg.beta1**step
    bias2 = 1.0 - cfg.beta2**step
    for i, grad in enumerate(grads):
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad
        m_hat = m[i] / bias1
        v_hat = v[i] / bias2
        updated = tensors[i].astype(np.float64) - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        tensors[i] = updated.astype(np.float32)
