"""HTTP gateway wrapping the core package."""

from safegate.service.app import GatewayState, create_app
from safegate.service.config import (
    EncoderSettings,
    GatewayConfig,
    load_gateway_config,
    make_encoder,
    parse_listen_addr,
)

__all__ = [
    "GatewayState",
    "create_app",
    "EncoderSettings",
    "GatewayConfig",
    "load_gateway_config",
    "make_encoder",
    "parse_listen_addr",
]
