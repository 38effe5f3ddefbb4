"""HTTP client for remote embedding servers.

Wire protocol (JSON over HTTP, UTF-8):

    POST {endpoint}/v1/embed
    request  {"prompt": str, "return_attention": bool}
    response {"encoder_id": str, "dim": int, "max_len": int, "eos_index": int,
              "tokens": [str], "embedding": [[float]],      # max_len rows of dim
              "attention": [[[[float]]]]}                   # optional, LxHxTxT

The client enforces row/column counts exactly and validates every invariant
of the result before returning it.
"""

from __future__ import annotations

import numpy as np
import requests

from safegate.errors import ProtocolViolation, TransportError
from safegate.encoding.tokenizer import DEFAULT_MAX_LEN
from safegate.encoding.types import (
    AttentionTensor,
    EmbeddingMatrix,
    EncodeResult,
    validate_encode_result,
)

DEFAULT_TIMEOUT = 10.0


def embed_remote(
    prompt: str,
    endpoint: str,
    want_attention: bool = False,
    timeout: float = DEFAULT_TIMEOUT,
) -> EncodeResult:
    """Embed one prompt via a remote encoder, validating the response."""
    url = endpoint.rstrip("/") + "/v1/embed"
    try:
        resp = requests.post(
            url,
            json={"prompt": prompt, "return_attention": want_attention},
            timeout=timeout,
        )
    except requests.RequestException as exc:
        raise TransportError(f"embedding request to {url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise ProtocolViolation(f"embedding server returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProtocolViolation("embedding response is not valid JSON") from exc
    return parse_embed_response(payload)


def parse_embed_response(payload: object) -> EncodeResult:
    """Turn a decoded /v1/embed response body into a validated EncodeResult."""
    if not isinstance(payload, dict):
        raise ProtocolViolation("embedding response body must be a JSON object")
    for field in ("encoder_id", "dim", "max_len", "eos_index", "tokens", "embedding"):
        if field not in payload:
            raise ProtocolViolation(f"embedding response missing field '{field}'")

    encoder_id = payload["encoder_id"]
    if not isinstance(encoder_id, str):
        raise ProtocolViolation("'encoder_id' must be a string")
    dim = _require_int(payload["dim"], "dim")
    max_len = _require_int(payload["max_len"], "max_len")
    eos_index = _require_int(payload["eos_index"], "eos_index")
    if dim <= 0:
        raise ProtocolViolation(f"'dim' must be positive, got {dim}")
    if not 0 < eos_index < max_len:
        raise ProtocolViolation(f"'eos_index' {eos_index} out of range for max_len {max_len}")

    tokens = payload["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ProtocolViolation("'tokens' must be a list of strings")
    if len(tokens) != eos_index - 1:
        raise ProtocolViolation(
            f"token count {len(tokens)} inconsistent with eos_index {eos_index}"
        )

    rows = payload["embedding"]
    if not isinstance(rows, list) or len(rows) != max_len:
        raise ProtocolViolation(f"'embedding' must have exactly {max_len} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ProtocolViolation(f"embedding row {i} must have exactly {dim} columns")
    try:
        matrix_rows = np.asarray(rows, dtype=np.float32)
    except (TypeError, ValueError) as exc:
        raise ProtocolViolation("embedding rows contain non-numeric values") from exc

    attention = None
    if payload.get("attention") is not None:
        attention = _parse_attention(payload["attention"], max_len)

    try:
        result = EncodeResult(
            matrix=EmbeddingMatrix(rows=matrix_rows, eos_index=eos_index, content_len=eos_index - 1),
            attention=attention,
            encoder_id=encoder_id,
        )
    except ValueError as exc:
        raise ProtocolViolation(str(exc)) from exc
    validate_encode_result(result)
    return result


def _parse_attention(raw: object, max_len: int) -> AttentionTensor:
    try:
        weights = np.asarray(raw, dtype=np.float32)
    except (TypeError, ValueError) as exc:
        raise ProtocolViolation("attention tensor is ragged or non-numeric") from exc
    if weights.ndim != 4 or weights.shape[2] != max_len or weights.shape[3] != max_len:
        raise ProtocolViolation(
            f"attention tensor must be layers x heads x {max_len} x {max_len}, got {weights.shape}"
        )
    if weights.shape[0] < 1 or weights.shape[1] < 1:
        raise ProtocolViolation("attention tensor must have at least one layer and head")
    return AttentionTensor(weights=weights)


def _require_int(value: object, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProtocolViolation(f"'{name}' must be an integer")
    return value


class RemoteEncoder:
    """Encoder facade over one remote endpoint.

    max_len is only used for client-side tokenization limits; the matrix
    geometry always comes from the server response.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_len: int = DEFAULT_MAX_LEN,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_len = max_len

    @property
    def encoder_id(self) -> str:
        return f"remote:{self.endpoint}"

    def encode_text(self, text: str, want_attention: bool = False) -> EncodeResult:
        return embed_remote(text, self.endpoint, want_attention, timeout=self.timeout)
