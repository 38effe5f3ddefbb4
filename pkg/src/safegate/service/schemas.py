"""Request and response bodies of the gateway HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel


class CheckRequest(BaseModel):
    prompt: str


class CheckResponse(BaseModel):
    safety_score: float
    verdict: Literal["safe", "unsafe"]


class SanitizeRequest(BaseModel):
    prompt: str


class SanitizeResponse(BaseModel):
    status: Literal["already_safe", "sanitized", "infeasible"]
    prompt: str
    removed_tokens: list[str] | None = None
    safety_score: float | None = None
    similarity: float | None = None
    encoder_calls: int | None = None


class HealthResponse(BaseModel):
    status: str
    model_loaded: bool
    encoder: Literal["reference", "remote"]


class ErrorResponse(BaseModel):
    error: str
