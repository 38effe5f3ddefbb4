"""Binary weight-file persistence.

Layout (little-endian): magic "SGRW", version u32 = 1, n_layers u32, then per
layer rows u32, cols u32, rows*cols f32 weights (row-major), cols f32 biases;
footer dropout_rate f32, seed u64.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from safegate.errors import FormatError
from safegate.recognizer.network import RecognizerParams

MAGIC = b"SGRW"
VERSION = 1
_MASK64 = (1 << 64) - 1


def persist_params(params: RecognizerParams, path: str | Path) -> None:
    """Write params to path; float32 values round-trip bit-exactly."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params.weights))]
    for w, b in zip(params.weights, params.biases):
        rows, cols = w.shape
        chunks.append(struct.pack("<II", rows, cols))
        chunks.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    chunks.append(struct.pack("<f", params.dropout_rate))
    chunks.append(struct.pack("<Q", params.seed & _MASK64))
    Path(path).write_bytes(b"".join(chunks))


def load_params(path: str | Path) -> RecognizerParams:
    """Read a weight file, validating magic, version, shapes and length."""
    data = Path(path).read_bytes()
    cursor = _Cursor(data)
    if cursor.take(4) != MAGIC:
        raise FormatError("bad magic bytes; not a recognizer weight file")
    version, n_layers = struct.unpack("<II", cursor.take(8))
    if version != VERSION:
        raise FormatError(f"unsupported weight-file version {version}")
    if n_layers != 3:
        raise FormatError(f"expected 3 layers, found {n_layers}")

    weights, biases = [], []
    for _ in range(n_layers):
        rows, cols = struct.unpack("<II", cursor.take(8))
        if rows < 1 or cols < 1:
            raise FormatError(f"invalid layer shape {rows}x{cols}")
        w = np.frombuffer(cursor.take(4 * rows * cols), dtype="<f4").reshape(rows, cols).copy()
        b = np.frombuffer(cursor.take(4 * cols), dtype="<f4").copy()
        weights.append(w)
        biases.append(b)
    (dropout_rate,) = struct.unpack("<f", cursor.take(4))
    (seed,) = struct.unpack("<Q", cursor.take(8))
    if cursor.remaining:
        raise FormatError(f"{cursor.remaining} trailing bytes after footer")

    for prev, nxt in zip(weights[:-1], weights[1:]):
        if prev.shape[1] != nxt.shape[0]:
            raise FormatError("layer shapes do not chain")
    if weights[-1].shape[1] != 2:
        raise FormatError("output layer must have width 2")
    dims = (weights[0].shape[0], weights[0].shape[1], weights[1].shape[1], 2)
    for w, b in zip(weights, biases):
        if b.shape[0] != w.shape[1]:
            raise FormatError("bias width does not match its layer")
    return RecognizerParams(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        dropout_rate=float(dropout_rate),
        seed=int(seed),
    )


class _Cursor:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def take(self, count: int) -> bytes:
        if self.remaining < count:
            raise FormatError("file truncated")
        out = self._data[self._pos : self._pos + count]
        self._pos += count
        return out
