"""The embedding HTTP server.

POST /v1/embed with {"prompt": str, "return_attention": bool} returns the
encoder's hidden-state matrix, eos index, tokens, and (optionally) the full
layers x heads x T x T post-softmax attention tensor. Malformed requests get
400 {"error": ...}; model failures get 500 {"error": ...}.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from clip_sidecar.config import SidecarConfig

logger = logging.getLogger("clip_sidecar")


class EmbedRequest(BaseModel):
    prompt: str
    return_attention: bool | None = None


def build_backend(cfg: SidecarConfig):
    if cfg.backend == "toy":
        from clip_sidecar.toy import ToyTextEncoder

        return ToyTextEncoder(cfg)
    from clip_sidecar.hf import HFCLIPTextEncoder

    return HFCLIPTextEncoder(cfg)


def create_app(cfg: SidecarConfig, backend=None) -> FastAPI:
    if backend is None:
        backend = build_backend(cfg)
    app = FastAPI(title="clip-sidecar", docs_url=None, redoc_url=None)
    app.state.backend = backend
    app.state.config = cfg

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": f"malformed request: {exc.errors()}"})

    @app.post("/v1/embed")
    def embed(body: EmbedRequest):
        want_attention = (
            body.return_attention
            if body.return_attention is not None
            else cfg.return_attention_default
        )
        try:
            matrix, eos_index, tokens, attention = backend.encode(body.prompt, want_attention)
        except Exception as exc:  # surface encoder failures as a clean 500
            logger.exception("encoding failed")
            return JSONResponse(status_code=500, content={"error": str(exc)})
        payload = {
            "encoder_id": backend.encoder_id,
            "dim": int(matrix.shape[1]),
            "max_len": int(matrix.shape[0]),
            "eos_index": int(eos_index),
            "tokens": list(tokens),
            "embedding": matrix.tolist(),
        }
        if attention is not None:
            payload["attention"] = attention.tolist()
        return JSONResponse(payload)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "encoder_id": backend.encoder_id}

    return app
