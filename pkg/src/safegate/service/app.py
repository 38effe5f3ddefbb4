"""Gateway HTTP service.

Two-step flow: POST /v1/check scores a prompt from its EOS embedding; POST
/v1/sanitize additionally runs the erasure beam search for prompts that fail
the first-step threshold. Prompts that pass step one never trigger the
search (one encoder call total). Infeasible sanitizations return HTTP 200
with a status flag so callers decide policy.
"""

from __future__ import annotations

import logging
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from safegate.errors import EmptyPrompt, FormatError, ProtocolViolation, TransportError
from safegate.encoding.tokenizer import DEFAULT_MAX_LEN, tokenize
from safegate.encoding.types import extract_eos
from safegate.recognizer.network import RecognizerParams, Verdict, classify, make_scorer
from safegate.recognizer.weights_io import load_params
from safegate.search import SanitizeStatus, safe_beam_search
from safegate.service.config import GatewayConfig, make_encoder
from safegate.service.schemas import (
    CheckRequest,
    CheckResponse,
    HealthResponse,
    SanitizeRequest,
    SanitizeResponse,
)

logger = logging.getLogger("safegate.gateway")


class GatewayState:
    """Holds the encoder and the current model snapshot.

    Handlers read the snapshot once per request; reload() swaps it atomically,
    so every request is served entirely by one model.
    """

    def __init__(self, config: GatewayConfig, encoder, params: RecognizerParams | None):
        self.config = config
        self.encoder = encoder
        self._params = params
        self._lock = threading.Lock()

    @property
    def model_loaded(self) -> bool:
        return self._params is not None

    def snapshot(self) -> RecognizerParams | None:
        return self._params

    def reload(self) -> None:
        if not self.config.model_path:
            raise FormatError("no model_path configured")
        params = load_params(self.config.model_path)
        with self._lock:
            self._params = params


def create_app(
    config: GatewayConfig,
    encoder=None,
    params: RecognizerParams | None = None,
) -> FastAPI:
    """Build the service; encoder/params injection is for tests and embedding."""
    if encoder is None:
        encoder = make_encoder(config.encoder, timeout=config.request_timeout)
    if params is None and config.model_path:
        try:
            params = load_params(config.model_path)
        except (OSError, FormatError) as exc:
            logger.warning("model not loaded from %s: %s", config.model_path, exc)
            params = None

    state = GatewayState(config, encoder, params)
    app = FastAPI(title="safegate", docs_url=None, redoc_url=None)
    app.state.gateway = state

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": f"malformed request: {exc.errors()}"})

    @app.exception_handler(TransportError)
    async def _transport_error(_request: Request, exc: TransportError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(ProtocolViolation)
    async def _protocol_error(_request: Request, exc: ProtocolViolation):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(EmptyPrompt)
    async def _empty_prompt(_request: Request, exc: EmptyPrompt):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(
            status="ok",
            model_loaded=state.model_loaded,
            encoder=config.encoder.kind,
        )

    @app.post("/v1/check", response_model=CheckResponse)
    def check(body: CheckRequest):
        model = state.snapshot()
        if model is None:
            return JSONResponse(status_code=503, content={"error": "model not loaded"})
        score = _step1_score(state, model, body.prompt)
        verdict = classify(score, config.step1_threshold)
        return CheckResponse(safety_score=score, verdict=verdict.value)

    @app.post("/v1/sanitize", response_model=SanitizeResponse, response_model_exclude_none=True)
    def sanitize(body: SanitizeRequest):
        model = state.snapshot()
        if model is None:
            return JSONResponse(status_code=503, content={"error": "model not loaded"})
        encoded = state.encoder.encode_text(body.prompt, want_attention=False)
        score = float(make_scorer(model)(extract_eos(encoded)))
        if classify(score, config.step1_threshold) is Verdict.SAFE:
            return SanitizeResponse(status="already_safe", prompt=body.prompt)
        result = safe_beam_search(
            body.prompt, state.encoder, make_scorer(model), config.search, initial=encoded
        )
        if result.status is SanitizeStatus.ALREADY_SAFE:
            return SanitizeResponse(status="already_safe", prompt=body.prompt)
        all_tokens = _original_tokens(body.prompt, state.encoder)
        return SanitizeResponse(
            status=result.status.value,
            prompt=result.sanitized_prompt,
            removed_tokens=[all_tokens[i] for i in result.best.removed],
            safety_score=result.best.safety,
            similarity=result.best.similarity,
            encoder_calls=result.encoder_calls + 1,
        )

    return app


def _step1_score(state: GatewayState, model: RecognizerParams, prompt: str) -> float:
    res = state.encoder.encode_text(prompt, want_attention=False)
    return float(make_scorer(model)(extract_eos(res)))


def _original_tokens(prompt: str, encoder) -> tuple[str, ...]:
    return tokenize(prompt, getattr(encoder, "max_len", DEFAULT_MAX_LEN)).tokens
