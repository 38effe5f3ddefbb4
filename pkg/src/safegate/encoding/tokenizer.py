"""Deterministic, vocabulary-free tokenization.

Tokens are maximal runs of word characters (underscore counts as
punctuation) in the lowercased text; ids are 64-bit FNV-1a hashes of the
token bytes, so equal tokens always share an id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

DEFAULT_MAX_LEN = 77

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def token_id(token: str) -> int:
    return fnv1a64(token.encode("utf-8"))


@dataclass(frozen=True)
class TokenSequence:
    """Content tokens of a prompt, in order, with their ids."""

    tokens: tuple[str, ...]
    ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.ids):
            raise ValueError("tokens and ids must have equal length")

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_tokens(cls, tokens: tuple[str, ...] | list[str]) -> "TokenSequence":
        toks = tuple(tokens)
        return cls(toks, tuple(token_id(t) for t in toks))


def tokenize(text: str, max_len: int = DEFAULT_MAX_LEN) -> TokenSequence:
    """Lowercase and split on whitespace/punctuation.

    Content is truncated to max_len - 2 tokens so a SOS and an EOS row
    always fit in the encoder matrix. Empty input yields an empty sequence.
    """
    tokens = _WORD_RE.findall(text.lower())
    limit = max_len - 2
    if len(tokens) > limit:
        tokens = tokens[:limit]
    return TokenSequence.from_tokens(tokens)
