"""Offline deterministic text encoder with real transformer attention.

A stand-in used when no pretrained weights are obtainable: token and
position embeddings come from seeded streams, and a stack of causal
multi-head self-attention layers (random fixed weights, layer-normalized
residuals) produces both the hidden-state matrix and genuine post-softmax
attention maps. Same prompt, same config, same bytes out.
"""

from __future__ import annotations

import re

import numpy as np

from clip_sidecar.config import SidecarConfig

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

_SOS_SEED = 101
_EOS_SEED = 202
_POS_SEED = 303


def word_tokens(text: str, max_len: int) -> list[str]:
    tokens = _WORD_RE.findall(text.lower())
    return tokens[: max_len - 2]


def _token_seed(token: str) -> int:
    # FNV-1a over UTF-8 bytes; stable across processes
    h = 0xCBF29CE484222325
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def _layer_norm(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + 1e-5)


class ToyTextEncoder:
    """Seeded causal transformer over hash-embedded word tokens."""

    def __init__(self, cfg: SidecarConfig):
        self.cfg = cfg
        self.dim = cfg.dim
        self.max_len = cfg.max_len
        self.layers = cfg.layers
        self.heads = cfg.heads
        self.head_dim = cfg.dim // cfg.heads
        rng = np.random.default_rng(cfg.seed)
        scale = 1.0 / np.sqrt(cfg.dim)
        self._proj = [
            tuple(rng.standard_normal((cfg.dim, cfg.dim)) * scale for _ in range(4))
            for _ in range(cfg.layers)
        ]
        pos_rng = np.random.default_rng(_POS_SEED)
        self._pos = np.stack([_unit(pos_rng, cfg.dim) for _ in range(cfg.max_len)])
        self._sos = _unit(np.random.default_rng(_SOS_SEED), cfg.dim)
        self._eos = _unit(np.random.default_rng(_EOS_SEED), cfg.dim)

    @property
    def encoder_id(self) -> str:
        return f"toy-transformer-d{self.dim}-L{self.layers}"

    def _token_embedding(self, token: str) -> np.ndarray:
        return _unit(np.random.default_rng(_token_seed(token)), self.dim)

    def encode(self, prompt: str, want_attention: bool):
        """Returns (matrix [max_len, dim] f32, eos_index, tokens,
        attention [layers, heads, max_len, max_len] f32 or None)."""
        tokens = word_tokens(prompt, self.max_len)
        n = len(tokens)
        eos_index = n + 1
        t = self.max_len

        x = np.empty((t, self.dim))
        x[0] = self._sos
        for i, token in enumerate(tokens):
            x[1 + i] = self._token_embedding(token)
        x[eos_index:] = self._eos  # pad positions repeat the EOS embedding
        x = _layer_norm(x + self._pos)

        causal = np.tril(np.ones((t, t), dtype=bool))
        maps = np.empty((self.layers, self.heads, t, t), dtype=np.float32) if want_attention else None
        for layer, (wq, wk, wv, wo) in enumerate(self._proj):
            q = (x @ wq).reshape(t, self.heads, self.head_dim).transpose(1, 0, 2)
            k = (x @ wk).reshape(t, self.heads, self.head_dim).transpose(1, 0, 2)
            v = (x @ wv).reshape(t, self.heads, self.head_dim).transpose(1, 0, 2)
            scores = q @ k.transpose(0, 2, 1) / np.sqrt(self.head_dim)
            scores = np.where(causal[None, :, :], scores, -np.inf)
            scores -= scores.max(axis=-1, keepdims=True)
            weights = np.exp(scores)
            weights /= weights.sum(axis=-1, keepdims=True)
            if maps is not None:
                layer_maps = weights.astype(np.float32)
                layer_maps[:, eos_index + 1 :, :] = 0.0  # pad source rows report zero
                maps[layer] = layer_maps
            attended = (weights @ v).transpose(1, 0, 2).reshape(t, self.dim)
            x = _layer_norm(x + attended @ wo)

        return x.astype(np.float32), eos_index, tokens, maps
