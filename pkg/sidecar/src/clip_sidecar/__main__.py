"""Serve the embedding endpoint: `python -m clip_sidecar` or `clip-sidecar`."""

from __future__ import annotations

import argparse

import uvicorn

from clip_sidecar.app import create_app
from clip_sidecar.config import SidecarConfig, load_config, parse_listen_addr


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--backend", choices=["hf", "toy"], default=None)
    parser.add_argument("--model-name", default=None)
    parser.add_argument("--device", default=None)
    parser.add_argument("--listen", default=None, help="host:port")
    parser.add_argument("--max-len", type=int, default=None)
    parser.add_argument("--return-attention", action="store_true", default=None,
                        help="return attention by default")
    args = parser.parse_args(argv)

    cfg = load_config(args.config) if args.config else SidecarConfig()
    overrides = {
        "backend": args.backend,
        "model_name": args.model_name,
        "device": args.device,
        "listen_addr": args.listen,
        "max_len": args.max_len,
        "return_attention_default": args.return_attention,
    }
    fields = {k: v for k, v in overrides.items() if v is not None}
    if fields:
        from dataclasses import replace

        cfg = replace(cfg, **fields)

    app = create_app(cfg)
    host, port = parse_listen_addr(cfg.listen_addr)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
