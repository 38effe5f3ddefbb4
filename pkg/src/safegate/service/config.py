"""Gateway configuration: JSON file, environment overrides, encoder factory.

Precedence per field: explicit override argument > environment variable
(SAFEGUIDER_MODEL for the weight file, SAFEGUIDER_LISTEN for the listen
address) > config file > default. Only those two env vars exist.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from safegate.encoding.reference import ReferenceEncoder, ReferenceEncoderConfig
from safegate.encoding.remote import RemoteEncoder
from safegate.encoding.tokenizer import DEFAULT_MAX_LEN
from safegate.search import SearchConfig

ENV_MODEL = "SAFEGUIDER_MODEL"
ENV_LISTEN = "SAFEGUIDER_LISTEN"

DEFAULT_LISTEN = "127.0.0.1:8700"


@dataclass(frozen=True)
class EncoderSettings:
    kind: str = "reference"  # "reference" | "remote"
    dim: int = 64
    max_len: int = DEFAULT_MAX_LEN
    unsafe_lexicon: tuple[str, ...] = ()
    url: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("reference", "remote"):
            raise ValueError(f"encoder kind must be 'reference' or 'remote', got {self.kind!r}")
        if self.kind == "remote" and not self.url:
            raise ValueError("remote encoder requires a url")


@dataclass(frozen=True)
class GatewayConfig:
    encoder: EncoderSettings = field(default_factory=EncoderSettings)
    model_path: str | None = None
    step1_threshold: float = 0.5
    search: SearchConfig = field(default_factory=SearchConfig)
    listen_addr: str = DEFAULT_LISTEN
    request_timeout: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.step1_threshold < 1.0:
            raise ValueError("step1_threshold must be in (0, 1)")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")


def load_gateway_config(
    path: str | Path | None = None,
    model_path: str | None = None,
    listen_addr: str | None = None,
) -> GatewayConfig:
    """Build a config from an optional JSON file plus env/argument overrides."""
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError("gateway config file must hold a JSON object")

    enc_raw = raw.get("encoder", {})
    encoder = EncoderSettings(
        kind=enc_raw.get("kind", "reference"),
        dim=int(enc_raw.get("dim", 64)),
        max_len=int(enc_raw.get("max_len", DEFAULT_MAX_LEN)),
        unsafe_lexicon=tuple(enc_raw.get("unsafe_lexicon", ())),
        url=enc_raw.get("url"),
    )
    search_raw = raw.get("search", {})
    search = SearchConfig(
        beam_width=int(search_raw.get("beam_width", 6)),
        depth=int(search_raw.get("depth", 25)),
        tau_safe=float(search_raw.get("tau_safe", 0.8)),
        tau_sim=float(search_raw.get("tau_sim", 0.5)),
    )

    model = model_path or os.environ.get(ENV_MODEL) or raw.get("model_path")
    listen = listen_addr or os.environ.get(ENV_LISTEN) or raw.get("listen_addr", DEFAULT_LISTEN)

    return GatewayConfig(
        encoder=encoder,
        model_path=model,
        step1_threshold=float(raw.get("step1_threshold", 0.5)),
        search=search,
        listen_addr=listen,
        request_timeout=float(raw.get("request_timeout", 10.0)),
    )


def make_encoder(settings: EncoderSettings, timeout: float = 10.0):
    if settings.kind == "remote":
        return RemoteEncoder(settings.url, timeout=timeout, max_len=settings.max_len)
    return ReferenceEncoder(
        ReferenceEncoderConfig(
            dim=settings.dim,
            max_len=settings.max_len,
            unsafe_lexicon=frozenset(settings.unsafe_lexicon),
        )
    )


def parse_listen_addr(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"listen address must be host:port, got {listen!r}")
    return host, int(port)
