"""Safety-aware token-erasure beam search.

Given an unsafe prompt, the search looks for a subset of its content tokens
whose re-encoded EOS embedding clears the safety threshold while staying
cosine-similar to the original embedding. Candidates are kept-token subsets;
each level of the beam removes one more token, expansion order follows the
leave-one-out safety ranking, and at most K candidates survive a level.

Candidate ordering (total, used for beam truncation and result selection):
feasible candidates (safety >= tau_safe and similarity >= tau_sim) come
first, sorted by similarity then safety descending; infeasible candidates
follow, sorted by safety then similarity descending; remaining ties go to
the lexicographically smallest removed-index set. The search stops at the
first level that produces a feasible candidate. If none ever does, the best
candidate seen anywhere is returned flagged infeasible. The kept set never
becomes empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from safegate.errors import EmptyPrompt, TooLarge
from safegate.encoding.similarity import cosine_similarity
from safegate.encoding.tokenizer import DEFAULT_MAX_LEN, tokenize
from safegate.encoding.types import EncodeResult, extract_eos
from safegate.recognizer.network import RecognizerParams, make_scorer

Scorer = Callable[[np.ndarray], float]

BRUTE_FORCE_MAX_TOKENS = 12


def _as_scorer(recognizer: "RecognizerParams | Scorer") -> Scorer:
    if isinstance(recognizer, RecognizerParams):
        return make_scorer(recognizer)
    return recognizer


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 6
    depth: int = 25
    tau_safe: float = 0.8
    tau_sim: float = 0.5

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        for name in ("tau_safe", "tau_sim"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")


class SanitizeStatus(str, Enum):
    ALREADY_SAFE = "already_safe"
    SANITIZED = "sanitized"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class BeamCandidate:
    """A surviving-token subset with its scores against the original prompt."""

    kept: tuple[int, ...]
    removed: tuple[int, ...]
    eos: np.ndarray
    safety: float
    similarity: float


@dataclass(frozen=True)
class SanitizeResult:
    status: SanitizeStatus
    best: BeamCandidate
    sanitized_prompt: str
    encoder_calls: int

    @property
    def feasible(self) -> bool:
        return self.status in (SanitizeStatus.ALREADY_SAFE, SanitizeStatus.SANITIZED)


def _content_tokens(prompt: str, encoder) -> tuple[str, ...]:
    max_len = getattr(encoder, "max_len", DEFAULT_MAX_LEN)
    return tokenize(prompt, max_len).tokens


def token_contributions(
    prompt: str, encoder, recognizer: "RecognizerParams | Scorer"
) -> list[tuple[int, float]]:
    """Leave-one-out ranking: (token_index, safety score with it removed).

    Sorted by safety descending, ties by ascending index, so the front of the
    list names the tokens whose removal helps safety most. recognizer is
    either trained params or a bare score callable.
    """
    scorer = _as_scorer(recognizer)
    tokens = _content_tokens(prompt, encoder)
    if not tokens:
        raise EmptyPrompt("prompt has no content tokens")
    entries: list[tuple[int, float]] = []
    for i in range(len(tokens)):
        kept = tokens[:i] + tokens[i + 1 :]
        res = encoder.encode_text(" ".join(kept), want_attention=False)
        entries.append((i, float(scorer(extract_eos(res)))))
    entries.sort(key=lambda item: (-item[1], item[0]))
    return entries


def _order_key(candidate: BeamCandidate, cfg: SearchConfig):
    feasible = candidate.safety >= cfg.tau_safe and candidate.similarity >= cfg.tau_sim
    if feasible:
        ranks = (-candidate.similarity, -candidate.safety)
    else:
        ranks = (-candidate.safety, -candidate.similarity)
    return (0 if feasible else 1, ranks, candidate.removed)


def _is_feasible(candidate: BeamCandidate, cfg: SearchConfig) -> bool:
    return candidate.safety >= cfg.tau_safe and candidate.similarity >= cfg.tau_sim


def safe_beam_search(
    prompt: str,
    encoder,
    recognizer: "RecognizerParams | Scorer",
    cfg: SearchConfig = SearchConfig(),
    initial: EncodeResult | None = None,
) -> SanitizeResult:
    """Search for the best feasible kept-token subset of the prompt.

    initial, when given, is a precomputed encoding of the full prompt (it is
    then excluded from the encoder_calls count). The result is deterministic
    for identical inputs.
    """
    scorer = _as_scorer(recognizer)
    tokens = _content_tokens(prompt, encoder)
    n = len(tokens)
    if n == 0:
        raise EmptyPrompt("prompt has no content tokens")

    calls = 0
    if initial is None:
        initial = encoder.encode_text(prompt, want_attention=False)
        calls += 1
    original_eos = extract_eos(initial)

    def make_candidate(kept: tuple[int, ...], eos: np.ndarray) -> BeamCandidate:
        removed = tuple(i for i in range(n) if i not in set(kept))
        return BeamCandidate(
            kept=kept,
            removed=removed,
            eos=eos,
            safety=float(scorer(eos)),
            similarity=cosine_similarity(eos, original_eos),
        )

    full = make_candidate(tuple(range(n)), original_eos)
    if _is_feasible(full, cfg):
        return SanitizeResult(SanitizeStatus.ALREADY_SAFE, full, " ".join(tokens), calls)

    best_overall = full
    if n == 1:
        return SanitizeResult(SanitizeStatus.INFEASIBLE, full, " ".join(tokens), calls)

    ranked = [index for index, _ in token_contributions(prompt, encoder, scorer)]
    calls += n

    beam = [full]
    max_level = min(cfg.depth, n - 1)
    for _level in range(1, max_level + 1):
        seen: set[tuple[int, ...]] = set()
        scored: list[BeamCandidate] = []
        for candidate in beam:
            kept_set = set(candidate.kept)
            for index in ranked:
                if index not in kept_set:
                    continue
                new_kept = tuple(i for i in candidate.kept if i != index)
                if new_kept in seen:
                    continue
                seen.add(new_kept)
                res = encoder.encode_text(
                    " ".join(tokens[i] for i in new_kept), want_attention=False
                )
                calls += 1
                scored.append(make_candidate(new_kept, extract_eos(res)))
        if not scored:
            break
        scored.sort(key=lambda c: _order_key(c, cfg))
        if _is_feasible(scored[0], cfg):
            best = scored[0]
            return SanitizeResult(
                SanitizeStatus.SANITIZED,
                best,
                " ".join(tokens[i] for i in best.kept),
                calls,
            )
        best_overall = min((best_overall, scored[0]), key=lambda c: _order_key(c, cfg))
        beam = scored[: cfg.beam_width]

    return SanitizeResult(
        SanitizeStatus.INFEASIBLE,
        best_overall,
        " ".join(tokens[i] for i in best_overall.kept),
        calls,
    )


def brute_force_sanitize(
    prompt: str,
    encoder,
    recognizer: "RecognizerParams | Scorer",
    cfg: SearchConfig = SearchConfig(),
) -> SanitizeResult:
    """Exhaustive oracle: score every non-empty kept subset, pick the optimum.

    Uses exactly 2^n - 1 encoder calls for n content tokens; refuses prompts
    longer than 12 tokens.
    """
    scorer = _as_scorer(recognizer)
    tokens = _content_tokens(prompt, encoder)
    n = len(tokens)
    if n == 0:
        raise EmptyPrompt("prompt has no content tokens")
    if n > BRUTE_FORCE_MAX_TOKENS:
        raise TooLarge(f"{n} content tokens means {2 ** n - 1} subsets; max is {BRUTE_FORCE_MAX_TOKENS}")

    calls = 0

    def encode_kept(kept: tuple[int, ...]) -> np.ndarray:
        nonlocal calls
        res = encoder.encode_text(" ".join(tokens[i] for i in kept), want_attention=False)
        calls += 1
        return extract_eos(res)

    all_indices = tuple(range(n))
    original_eos = encode_kept(all_indices)

    def make_candidate(kept: tuple[int, ...], eos: np.ndarray) -> BeamCandidate:
        removed = tuple(i for i in all_indices if i not in set(kept))
        return BeamCandidate(
            kept=kept,
            removed=removed,
            eos=eos,
            safety=float(scorer(eos)),
            similarity=cosine_similarity(eos, original_eos),
        )

    candidates = [make_candidate(all_indices, original_eos)]
    for mask in range(1, 2**n - 1):
        kept = tuple(i for i in all_indices if mask & (1 << i))
        candidates.append(make_candidate(kept, encode_kept(kept)))

    best = min(candidates, key=lambda c: _order_key(c, cfg))
    if _is_feasible(best, cfg):
        status = SanitizeStatus.ALREADY_SAFE if not best.removed else SanitizeStatus.SANITIZED
    else:
        status = SanitizeStatus.INFEASIBLE
    return SanitizeResult(status, best, " ".join(tokens[i] for i in best.kept), calls)


def ordering_key(result: SanitizeResult, cfg: SearchConfig) -> tuple:
    """(feasibility, similarity, safety) key of a result's best candidate."""
    best = result.best
    return (_is_feasible(best, cfg), best.similarity, best.safety)


__all__ = [
    "SearchConfig",
    "SanitizeStatus",
    "BeamCandidate",
    "SanitizeResult",
    "token_contributions",
    "safe_beam_search",
    "brute_force_sanitize",
    "ordering_key",
    "BRUTE_FORCE_MAX_TOKENS",
]
