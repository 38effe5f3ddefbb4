"""Tokenization, encoding, EOS extraction and similarity."""

from safegate.encoding.tokenizer import DEFAULT_MAX_LEN, TokenSequence, fnv1a64, token_id, tokenize
from safegate.encoding.types import (
    AttentionTensor,
    EmbeddingMatrix,
    EncodeResult,
    extract_eos,
    validate_encode_result,
)
from safegate.encoding.reference import (
    ReferenceEncoder,
    ReferenceEncoderConfig,
    encode_reference,
    token_vector,
    unsafe_direction,
)
from safegate.encoding.remote import RemoteEncoder, embed_remote, parse_embed_response
from safegate.encoding.similarity import cosine_similarity

__all__ = [
    "DEFAULT_MAX_LEN",
    "TokenSequence",
    "fnv1a64",
    "token_id",
    "tokenize",
    "AttentionTensor",
    "EmbeddingMatrix",
    "EncodeResult",
    "extract_eos",
    "validate_encode_result",
    "ReferenceEncoder",
    "ReferenceEncoderConfig",
    "encode_reference",
    "token_vector",
    "unsafe_direction",
    "RemoteEncoder",
    "embed_remote",
    "parse_embed_response",
    "cosine_similarity",
]
