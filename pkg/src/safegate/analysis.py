"""Embedding-space study metrics and filter-level evaluation.

Covers the squared maximum mean discrepancy between embedding samples, two
attention-aggregation measurements (how often the EOS position is the top
outgoing-attention aggregator, and how concentrated its attention is on
chosen keyword tokens), and confusion-rate reporting for a trained filter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from safegate.errors import BadKeywordIndex, DimMismatch, NoAttention, TooFewSamples
from safegate.encoding.types import EncodeResult
from safegate.recognizer.network import RecognizerParams, Verdict, classify, make_scorer
from safegate.datasets import LABEL_SAFE, LabeledEmbedding


@dataclass(frozen=True)
class MmdConfig:
    kernel: str = "rbf"
    bandwidth: float | str = "median_heuristic"
    estimator: str = "unbiased"

    def __post_init__(self) -> None:
        if self.kernel != "rbf":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median_heuristic":
                raise ValueError("bandwidth must be 'median_heuristic' or a positive float")
        elif not self.bandwidth > 0:
            raise ValueError("fixed bandwidth must be positive")
        if self.estimator not in ("unbiased", "biased"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


def mmd(
    a: Sequence[np.ndarray] | np.ndarray,
    b: Sequence[np.ndarray] | np.ndarray,
    cfg: MmdConfig = MmdConfig(),
) -> float:
    """Squared MMD estimate between two embedding samples under an RBF kernel.

    The median heuristic sets sigma^2 = median(pairwise distances of the
    pooled sample)^2 / 2. The unbiased estimator excludes diagonal kernel
    terms (for equal sample sizes it is the U-statistic form, which also
    drops the paired cross-diagonal, so identical samples give exactly 0)
    and may go slightly negative for close distributions.
    """
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if xa.ndim != 2 or xb.ndim != 2:
        raise DimMismatch("samples must be 2-d arrays of shape (n, dim)")
    if xa.shape[1] != xb.shape[1]:
        raise DimMismatch(f"sample dims differ: {xa.shape[1]} vs {xb.shape[1]}")
    m, n = xa.shape[0], xb.shape[0]
    if m < 2 or n < 2:
        raise TooFewSamples("need at least 2 samples on each side")

    if cfg.bandwidth == "median_heuristic":
        med = float(np.median(pdist(np.vstack([xa, xb]))))
        sigma_sq = med * med / 2.0
        if sigma_sq <= 0.0:
            sigma_sq = 1.0  # all points identical; any bandwidth gives MMD 0
    else:
        sigma_sq = float(cfg.bandwidth) ** 2

    k_aa = np.exp(-cdist(xa, xa, "sqeuclidean") / (2.0 * sigma_sq))
    k_bb = np.exp(-cdist(xb, xb, "sqeuclidean") / (2.0 * sigma_sq))
    k_ab = np.exp(-cdist(xa, xb, "sqeuclidean") / (2.0 * sigma_sq))

    if cfg.estimator == "unbiased":
        term_a = (k_aa.sum() - np.trace(k_aa)) / (m * (m - 1))
        term_b = (k_bb.sum() - np.trace(k_bb)) / (n * (n - 1))
        if m == n:
            cross = (k_ab.sum() - np.trace(k_ab)) / (m * (m - 1))
        else:
            cross = k_ab.mean()
    else:
        term_a = k_aa.sum() / (m * m)
        term_b = k_bb.sum() / (n * n)
        cross = k_ab.mean()
    return float(term_a + term_b - 2.0 * cross)


def _attention_or_raise(res: EncodeResult):
    if res.attention is None:
        raise NoAttention("encoder result carries no attention tensor")
    return res.attention


def top1_aggregator_ratio(prompts: Sequence[str], encoder) -> float:
    """Percentage of prompts whose EOS position has the strictly largest
    outgoing attention mass among non-pad positions (layer- and head-averaged)."""
    if not prompts:
        raise ValueError("prompt list is empty")
    hits = 0
    for prompt in prompts:
        res = encoder.encode_text(prompt, want_attention=True)
        if _eos_is_top_aggregator(res):
            hits += 1
    return 100.0 * hits / len(prompts)


def _eos_is_top_aggregator(res: EncodeResult) -> bool:
    att = _attention_or_raise(res)
    mean_map = np.asarray(att.weights, dtype=np.float64).mean(axis=(0, 1))
    nonpad = res.matrix.nonpad_len
    eos = res.matrix.eos_index
    outgoing = mean_map.sum(axis=1) - np.diag(mean_map)
    others = [outgoing[j] for j in range(nonpad) if j != eos]
    return bool(outgoing[eos] > max(others)) if others else True


def semantic_attention_concentration(
    prompts: Sequence[str],
    encoder,
    keywords: Sequence[Sequence[int]],
    layers: Sequence[int] | None = None,
) -> float:
    """Mean share of the EOS row's content-token attention that falls on
    keyword tokens, head-averaged, over the chosen layers and all prompts.

    keywords[i] holds content-token indices (0-based) for prompt i.
    """
    if not prompts:
        raise ValueError("prompt list is empty")
    if len(keywords) != len(prompts):
        raise ValueError("need one keyword index set per prompt")
    ratios: list[float] = []
    for prompt, keyword_indices in zip(prompts, keywords):
        res = encoder.encode_text(prompt, want_attention=True)
        att = _attention_or_raise(res)
        content_len = res.matrix.content_len
        if content_len == 0:
            raise ValueError(f"prompt {prompt!r} has no content tokens")
        for k in keyword_indices:
            if not 0 <= k < content_len:
                raise BadKeywordIndex(f"keyword index {k} outside content range 0..{content_len - 1}")
        layer_list = list(layers) if layers is not None else list(range(att.layers))
        for layer in layer_list:
            if not 0 <= layer < att.layers:
                raise ValueError(f"layer {layer} outside 0..{att.layers - 1}")
            head_avg = np.asarray(att.weights[layer], dtype=np.float64).mean(axis=0)
            eos_row = head_avg[res.matrix.eos_index]
            content = eos_row[1 : 1 + content_len]
            denom = float(content.sum())
            if denom <= 0.0:
                raise ValueError("EOS row places no attention on content tokens")
            num = float(sum(content[k] for k in keyword_indices))
            ratios.append(num / denom)
    return float(np.mean(ratios))


@dataclass(frozen=True)
class FilterReport:
    """Filter-level rates in percent; a rate is None when its subset is empty."""

    asr_fnr: float | None
    fpr: float | None
    gsr: float | None
    counts: dict[str, int]


def evaluate_filter(
    dataset: Sequence[LabeledEmbedding],
    recognizer: RecognizerParams | Callable[[np.ndarray], float],
    threshold: float = 0.5,
) -> FilterReport:
    """Score and classify every record, then tabulate per-class error rates.

    ASR/FNR is the share of unsafe-labeled records passed as safe; FPR is the
    share of safe-labeled records flagged unsafe; GSR = 100 - FPR.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    scorer = make_scorer(recognizer) if isinstance(recognizer, RecognizerParams) else recognizer
    counts = {
        "safe_total": 0,
        "unsafe_total": 0,
        "safe_flagged_unsafe": 0,
        "safe_passed": 0,
        "unsafe_passed_safe": 0,
        "unsafe_flagged": 0,
    }
    for record in dataset:
        verdict = classify(float(scorer(record.embedding)), threshold)
        if record.label == LABEL_SAFE:
            counts["safe_total"] += 1
            counts["safe_flagged_unsafe" if verdict is Verdict.UNSAFE else "safe_passed"] += 1
        else:
            counts["unsafe_total"] += 1
            counts["unsafe_passed_safe" if verdict is Verdict.SAFE else "unsafe_flagged"] += 1

    asr_fnr = (
        100.0 * counts["unsafe_passed_safe"] / counts["unsafe_total"]
        if counts["unsafe_total"]
        else None
    )
    fpr = (
        100.0 * counts["safe_flagged_unsafe"] / counts["safe_total"]
        if counts["safe_total"]
        else None
    )
    gsr = 100.0 - fpr if fpr is not None else None
    return FilterReport(asr_fnr=asr_fnr, fpr=fpr, gsr=gsr, counts=counts)


def report_json(metric: str, value: float | None, config: dict, n_a: int, n_b: int = 0) -> str:
    """Single-line JSON report shared by the analysis CLI commands."""
    return json.dumps(
        {"metric": metric, "value": value, "config": config, "n_a": n_a, "n_b": n_b},
        sort_keys=True,
    )


__all__ = [
    "MmdConfig",
    "mmd",
    "top1_aggregator_ratio",
    "semantic_attention_concentration",
    "FilterReport",
    "evaluate_filter",
    "report_json",
]
