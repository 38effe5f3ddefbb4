"""Encoder output types and their invariant checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from safegate.errors import ProtocolViolation

ATTENTION_ROW_SUM_TOL = 1e-5


@dataclass(frozen=True)
class AttentionTensor:
    """Post-softmax attention maps, (layers, heads, max_len, max_len).

    weights[l][h][j][i] is the mass row j places on position i. Rows at pad
    source positions (j > eos_index) are all zero; every other row sums to 1
    over the non-pad positions.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.weights.ndim != 4:
            raise ValueError("attention weights must be 4-dimensional")
        if self.weights.shape[2] != self.weights.shape[3]:
            raise ValueError("attention maps must be square per head")

    @property
    def layers(self) -> int:
        return self.weights.shape[0]

    @property
    def heads(self) -> int:
        return self.weights.shape[1]

    @property
    def max_len(self) -> int:
        return self.weights.shape[2]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Fixed-size per-prompt embedding matrix with the EOS row position.

    Row 0 is SOS, rows 1..content_len are content tokens, the row at
    eos_index aggregates the prompt, and rows beyond it are padding.
    """

    rows: np.ndarray
    eos_index: int
    content_len: int

    def __post_init__(self) -> None:
        if self.rows.ndim != 2:
            raise ValueError("embedding matrix must be 2-dimensional")
        if self.dim <= 0:
            raise ValueError("embedding dim must be positive")
        if not (0 < self.eos_index < self.max_len):
            raise ValueError(f"eos_index {self.eos_index} out of range for max_len {self.max_len}")
        if self.content_len != self.eos_index - 1:
            raise ValueError("content_len must equal eos_index - 1")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def max_len(self) -> int:
        return self.rows.shape[0]

    @property
    def nonpad_len(self) -> int:
        return self.eos_index + 1


@dataclass(frozen=True)
class EncodeResult:
    """One encoder invocation: matrix, optional attention, producing encoder tag."""

    matrix: EmbeddingMatrix
    attention: AttentionTensor | None = None
    encoder_id: str = ""
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.attention is not None and self.attention.max_len != self.matrix.max_len:
            raise ValueError("attention max_len must match matrix max_len")


def extract_eos(res: EncodeResult) -> np.ndarray:
    """Copy of the aggregation row (the EOS embedding vector)."""
    return np.array(res.matrix.rows[res.matrix.eos_index], copy=True)


def validate_encode_result(res: EncodeResult) -> None:
    """Check every numeric invariant an encoder response must satisfy.

    Raises ProtocolViolation on the first failure. Used by the remote client
    on each response and by conformance tests against embedding servers.
    """
    mat = res.matrix
    if not np.all(np.isfinite(mat.rows)):
        raise ProtocolViolation("embedding matrix contains non-finite values")
    att = res.attention
    if att is None:
        return
    w = att.weights
    if att.max_len != mat.max_len:
        raise ProtocolViolation("attention max_len differs from matrix max_len")
    if not np.all(np.isfinite(w)):
        raise ProtocolViolation("attention contains non-finite values")
    if np.any(w < 0):
        raise ProtocolViolation("attention contains negative weights")
    nonpad = mat.nonpad_len
    pad_rows = w[:, :, nonpad:, :]
    if pad_rows.size and np.any(pad_rows != 0.0):
        raise ProtocolViolation("attention rows at pad source positions must be zero")
    sums = w[:, :, :nonpad, :nonpad].sum(axis=3)
    if np.any(np.abs(sums - 1.0) > ATTENTION_ROW_SUM_TOL):
        raise ProtocolViolation("attention row does not sum to 1 over non-pad positions")
