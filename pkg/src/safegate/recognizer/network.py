"""Three-layer safety recognizer: init, forward pass, classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from safegate.errors import BadDims, DimMismatch


class Verdict(str, Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"


@dataclass
class RecognizerParams:
    """Weights and biases of the recognizer MLP.

    layer_dims is [d_in, h1, h2, 2]; weights[i] has shape
    (layer_dims[i], layer_dims[i+1]) and biases[i] shape (layer_dims[i+1],).
    Output class index 0 is unsafe, index 1 is safe.
    """

    layer_dims: tuple[int, int, int, int]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    dropout_rate: float = 0.1
    seed: int = 0

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "RecognizerParams":
        return RecognizerParams(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            dropout_rate=self.dropout_rate,
            seed=self.seed,
        )


class ForwardResult(NamedTuple):
    logits: np.ndarray
    probs: np.ndarray
    score: float


def init_recognizer(
    d_in: int,
    hidden: tuple[int, int],
    dropout_rate: float = 0.1,
    seed: int = 0,
) -> RecognizerParams:
    """Glorot-uniform weights, zero biases, seeded and reproducible.

    Layer widths must shrink progressively: d_in > h1 > h2 >= 2.
    """
    h1, h2 = hidden
    if not (d_in > h1 > h2 >= 2):
        raise BadDims(f"need d_in > h1 > h2 >= 2, got {d_in} > {h1} > {h2}")
    if not 0.0 <= dropout_rate < 1.0:
        raise ValueError("dropout_rate must be in [0, 1)")
    dims = (d_in, h1, h2, 2)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(np.float32))
        biases.append(np.zeros(fan_out, dtype=np.float32))
    return RecognizerParams(
        layer_dims=dims, weights=weights, biases=biases, dropout_rate=dropout_rate, seed=seed
    )


def default_hidden(d_in: int) -> tuple[int, int]:
    """Hidden sizes used when the caller does not pick them."""
    if d_in == 768:
        return (256, 64)
    if d_in == 64:
        return (32, 16)
    return (max(d_in // 3, 3), max(d_in // 12, 2))


def make_dropout_masks(
    params: RecognizerParams, batch_size: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Inverted-dropout masks for the two hidden layers, entries 0 or 1/(1-rate)."""
    rate = params.dropout_rate
    masks = []
    for width in params.layer_dims[1:3]:
        keep = rng.random((batch_size, width)) >= rate
        masks.append(keep.astype(np.float64) / (1.0 - rate))
    return masks


def forward_batch(
    params: RecognizerParams, x: np.ndarray, masks: list[np.ndarray] | None = None
) -> dict[str, np.ndarray]:
    """Forward pass over a batch, returning every intermediate needed by backprop.

    Computation runs in float64 regardless of parameter dtype; masks of None
    means eval semantics (no dropout).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.layer_dims[0]:
        raise DimMismatch(f"input shape {x.shape} does not match d_in {params.layer_dims[0]}")
    w = [np.asarray(m, dtype=np.float64) for m in params.weights]
    b = [np.asarray(v, dtype=np.float64) for v in params.biases]

    h1_pre = x @ w[0] + b[0]
    a1 = np.maximum(h1_pre, 0.0)
    if masks is not None:
        a1 = a1 * masks[0]
    h2_pre = a1 @ w[1] + b[1]
    a2 = np.maximum(h2_pre, 0.0)
    if masks is not None:
        a2 = a2 * masks[1]
    logits = a2 @ w[2] + b[2]

    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    return {
        "x": x,
        "h1_pre": h1_pre,
        "a1": a1,
        "h2_pre": h2_pre,
        "a2": a2,
        "logits": logits,
        "probs": probs,
    }


def forward(
    params: RecognizerParams,
    e: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> ForwardResult:
    """Score one embedding. Dropout applies only in train mode."""
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    vec = np.asarray(e, dtype=np.float64).ravel()
    if vec.shape[0] != params.layer_dims[0]:
        raise DimMismatch(f"embedding dim {vec.shape[0]} does not match d_in {params.layer_dims[0]}")
    masks = None
    if mode == "train" and params.dropout_rate > 0.0:
        masks = make_dropout_masks(params, 1, rng if rng is not None else np.random.default_rng())
    acts = forward_batch(params, vec[None, :], masks)
    probs = acts["probs"][0]
    return ForwardResult(logits=acts["logits"][0], probs=probs, score=float(probs[1]))


def batch_scores(params: RecognizerParams, x: np.ndarray) -> np.ndarray:
    """Eval-mode safety scores for a batch of embeddings."""
    return forward_batch(params, x)["probs"][:, 1]


def make_scorer(params: RecognizerParams) -> Callable[[np.ndarray], float]:
    """Bind params into an eval-mode scoring callable for search and gateways."""

    def score(e: np.ndarray) -> float:
        return forward(params, e).score

    return score


def classify(score: float, threshold: float = 0.5) -> Verdict:
    """Safe only when the score strictly exceeds the threshold (ties fail closed)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    return Verdict.SAFE if score > threshold else Verdict.UNSAFE
