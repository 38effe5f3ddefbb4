"""Class-balanced loss and its exact gradient.

The loss averages negative log-likelihood separately per class:

    L = -(1/N_pos) sum_{y=1} log(p_i) - (1/N_neg) sum_{y=0} log(1 - p_i)

with p_i the safe-class probability. A term is absent when its class is, and
log arguments are clamped below at 1e-12; the gradient honours that clamp
(a clamped sample contributes zero), so it matches finite differences of the
implemented loss everywhere, including saturated predictions.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from safegate.errors import EmptyBatch
from safegate.recognizer.network import RecognizerParams, forward_batch

LOG_CLAMP = 1e-12


def _batch_arrays(batch: Sequence) -> tuple[np.ndarray, np.ndarray]:
    if len(batch) == 0:
        raise EmptyBatch("loss is undefined on an empty batch")
    x = np.stack([np.asarray(item.embedding, dtype=np.float64).ravel() for item in batch])
    y = np.array([int(item.label) for item in batch], dtype=np.int64)
    return x, y


def _loss_from_scores(p: np.ndarray, y: np.ndarray) -> float:
    pos = y == 1
    neg = y == 0
    loss = 0.0
    if pos.any():
        loss -= float(np.log(np.maximum(p[pos], LOG_CLAMP)).mean())
    if neg.any():
        loss -= float(np.log(np.maximum(1.0 - p[neg], LOG_CLAMP)).mean())
    return loss


def balanced_loss(
    params: RecognizerParams, batch: Sequence, masks: list[np.ndarray] | None = None
) -> float:
    """Loss of the batch under the given params (eval semantics unless masks given)."""
    x, y = _batch_arrays(batch)
    p = forward_batch(params, x, masks)["probs"][:, 1]
    return _loss_from_scores(p, y)


def loss_and_gradient(
    params: RecognizerParams, batch: Sequence, masks: list[np.ndarray] | None = None
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss plus analytic gradients (d_weights, d_biases), computed in float64.

    Masks, when provided, are treated as fixed multipliers, so the result is
    the exact gradient of balanced_loss(params, batch, masks).
    """
    x, y = _batch_arrays(batch)
    acts = forward_batch(params, x, masks)
    p = acts["probs"][:, 1]
    loss = _loss_from_scores(p, y)

    pos = y == 1
    neg = y == 0
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())

    dldp = np.zeros_like(p)
    if n_pos:
        active = pos & (p > LOG_CLAMP)
        dldp[active] = -1.0 / (n_pos * p[active])
    if n_neg:
        active = neg & ((1.0 - p) > LOG_CLAMP)
        dldp[active] = 1.0 / (n_neg * (1.0 - p[active]))

    # dp/dz = p(1-p) for the safe logit and its negative for the unsafe logit.
    dz1 = dldp * p * (1.0 - p)
    dz = np.stack([-dz1, dz1], axis=1)

    w = [np.asarray(m, dtype=np.float64) for m in params.weights]
    a1, a2 = acts["a1"], acts["a2"]

    dw3 = a2.T @ dz
    db3 = dz.sum(axis=0)
    da2 = dz @ w[2].T
    if masks is not None:
        da2 = da2 * masks[1]
    dh2 = da2 * (acts["h2_pre"] > 0.0)

    dw2 = a1.T @ dh2
    db2 = dh2.sum(axis=0)
    da1 = dh2 @ w[1].T
    if masks is not None:
        da1 = da1 * masks[0]
    dh1 = da1 * (acts["h1_pre"] > 0.0)

    dw1 = acts["x"].T @ dh1
    db1 = dh1.sum(axis=0)

    return loss, [dw1, dw2, dw3], [db1, db2, db3]


def gradient(
    params: RecognizerParams, batch: Sequence, masks: list[np.ndarray] | None = None
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients only; see loss_and_gradient."""
    _, d_weights, d_biases = loss_and_gradient(params, batch, masks)
    return d_weights, d_biases
