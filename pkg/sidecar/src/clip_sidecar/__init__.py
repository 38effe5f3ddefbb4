"""Embedding server exposing a CLIP text encoder over the safegate wire protocol."""

from clip_sidecar.app import build_backend, create_app
from clip_sidecar.config import SidecarConfig, load_config, parse_listen_addr

__all__ = ["build_backend", "create_app", "SidecarConfig", "load_config", "parse_listen_addr"]

__version__ = "0.1.0"
