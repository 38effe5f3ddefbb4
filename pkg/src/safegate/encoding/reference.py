"""Deterministic reference encoder.

A hermetic stand-in for a neural text encoder: every token maps to a fixed
unit vector derived from its id via a splitmix64 stream, tokens from a
configurable unsafe lexicon are additionally pulled toward one fixed "unsafe
direction", and the EOS row aggregates the content tokens by a normalized
sum. The construction makes safety effects observable and every output
bit-reproducible without model weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from safegate.errors import SequenceTooLong
from safegate.encoding.tokenizer import DEFAULT_MAX_LEN, TokenSequence, token_id, tokenize
from safegate.encoding.types import AttentionTensor, EmbeddingMatrix, EncodeResult

SOS_SEED = 0x50505050
UNSAFE_DIRECTION_SEED = 0xBAD5EED
UNSAFE_SHIFT = 2.0

_MASK64 = (1 << 64) - 1
_SELF_ATTENTION = 0.8


@dataclass(frozen=True)
class ReferenceEncoderConfig:
    dim: int = 64
    max_len: int = DEFAULT_MAX_LEN
    unsafe_lexicon: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.max_len < 3:
            raise ValueError("max_len must hold at least SOS, one token and EOS")
        if not isinstance(self.unsafe_lexicon, frozenset):
            object.__setattr__(self, "unsafe_lexicon", frozenset(self.unsafe_lexicon))


def _splitmix64_unit_vector(seed: int, dim: int) -> np.ndarray:
    """Unit vector of dim values in [-1, 1) from the splitmix64 stream."""
    state = seed & _MASK64
    out = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        out[i] = (z >> 11) * 2.0 ** -53 * 2.0 - 1.0
    norm = float(np.linalg.norm(out))
    out /= norm
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def unsafe_direction(dim: int) -> np.ndarray:
    """The fixed unit direction shared by all unsafe-lexicon tokens."""
    return _splitmix64_unit_vector(UNSAFE_DIRECTION_SEED, dim)


@lru_cache(maxsize=8)
def _sos_vector(dim: int) -> np.ndarray:
    return _splitmix64_unit_vector(SOS_SEED, dim)


@lru_cache(maxsize=65536)
def _base_vector(token: str, dim: int) -> np.ndarray:
    return _splitmix64_unit_vector(token_id(token), dim)


@lru_cache(maxsize=65536)
def _shifted_vector(token: str, dim: int) -> np.ndarray:
    shifted = _base_vector(token, dim) + UNSAFE_SHIFT * unsafe_direction(dim)
    shifted /= np.linalg.norm(shifted)
    shifted.setflags(write=False)
    return shifted


def token_vector(token: str, cfg: ReferenceEncoderConfig) -> np.ndarray:
    """Per-token embedding, lexicon tokens shifted toward the unsafe direction."""
    if token in cfg.unsafe_lexicon:
        return _shifted_vector(token, cfg.dim)
    return _base_vector(token, cfg.dim)


def encode_reference(
    seq: TokenSequence, cfg: ReferenceEncoderConfig, want_attention: bool = True
) -> EncodeResult:
    """Encode a token sequence deterministically.

    Rows: SOS at 0, one per content token, then the EOS aggregation row
    (normalized sum of the content-token vectors, accumulated in a canonical
    token-id order so reordering the prompt cannot change it); pad rows are
    zero. An empty prompt has no sum to normalize and maps to the unsafe
    direction itself, flagged degenerate.
    """
    n = len(seq)
    if n > cfg.max_len - 2:
        raise SequenceTooLong(f"{n} content tokens exceed capacity {cfg.max_len - 2}")

    rows = np.zeros((cfg.max_len, cfg.dim), dtype=np.float64)
    rows[0] = _sos_vector(cfg.dim)
    vectors = [token_vector(t, cfg) for t in seq.tokens]
    for i, vec in enumerate(vectors):
        rows[1 + i] = vec
    eos_index = n + 1

    degenerate = False
    if n == 0:
        eos = unsafe_direction(cfg.dim)
        degenerate = True
    else:
        order = sorted(range(n), key=lambda i: (seq.ids[i], seq.tokens[i]))
        total = np.sum(np.stack([vectors[i] for i in order]), axis=0)
        norm = float(np.linalg.norm(total))
        if norm < 1e-12:
            eos = unsafe_direction(cfg.dim)
            degenerate = True
        else:
            eos = total / norm
    rows[eos_index] = eos

    rows32 = rows.astype(np.float32)
    rows32.setflags(write=False)
    matrix = EmbeddingMatrix(rows=rows32, eos_index=eos_index, content_len=n)

    attention = _reference_attention(n, eos_index, cfg.max_len) if want_attention else None
    return EncodeResult(
        matrix=matrix,
        attention=attention,
        encoder_id=f"reference-d{cfg.dim}",
        degenerate=degenerate,
    )


def _reference_attention(n: int, eos_index: int, max_len: int) -> AttentionTensor:
    """Single-layer, single-head attention: EOS aggregates uniformly over
    content; SOS and content rows keep 0.8 on self and spread the rest."""
    att = np.zeros((1, 1, max_len, max_len), dtype=np.float32)
    nonpad = eos_index + 1
    if n > 0:
        att[0, 0, eos_index, 1 : 1 + n] = 1.0 / n
    else:
        att[0, 0, eos_index, 0] = 1.0
    spread = (1.0 - _SELF_ATTENTION) / (nonpad - 1)
    for j in range(eos_index):
        att[0, 0, j, :nonpad] = spread
        att[0, 0, j, j] = _SELF_ATTENTION
    att.setflags(write=False)
    return AttentionTensor(weights=att)


class ReferenceEncoder:
    """Stateless encoder facade over one ReferenceEncoderConfig."""

    def __init__(self, cfg: ReferenceEncoderConfig | None = None):
        self.cfg = cfg or ReferenceEncoderConfig()

    @property
    def dim(self) -> int:
        return self.cfg.dim

    @property
    def max_len(self) -> int:
        return self.cfg.max_len

    @property
    def encoder_id(self) -> str:
        return f"reference-d{self.cfg.dim}"

    def encode(self, seq: TokenSequence, want_attention: bool = True) -> EncodeResult:
        return encode_reference(seq, self.cfg, want_attention)

    def encode_text(self, text: str, want_attention: bool = False) -> EncodeResult:
        return encode_reference(tokenize(text, self.cfg.max_len), self.cfg, want_attention)
