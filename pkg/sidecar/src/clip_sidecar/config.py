"""Sidecar configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class SidecarConfig:
    backend: str = "hf"  # "hf" (transformers CLIP) | "toy" (seeded offline stand-in)
    model_name: str = "openai/clip-vit-large-patch14"
    device: str = "cpu"
    listen_addr: str = "127.0.0.1:8600"
    max_len: int = 77
    return_attention_default: bool = False
    # toy-backend geometry (hf reads these from the loaded model instead)
    dim: int = 768
    layers: int = 12
    heads: int = 12
    seed: int = 1234

    def __post_init__(self) -> None:
        if self.backend not in ("hf", "toy"):
            raise ValueError(f"backend must be 'hf' or 'toy', got {self.backend!r}")
        if self.max_len < 3:
            raise ValueError("max_len must be at least 3")
        if self.dim % self.heads != 0:
            raise ValueError("dim must be divisible by heads")


def load_config(path: str | Path) -> SidecarConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("sidecar config file must hold a JSON object")
    return SidecarConfig(**raw)


def parse_listen_addr(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"listen address must be host:port, got {listen!r}")
    return host, int(port)
