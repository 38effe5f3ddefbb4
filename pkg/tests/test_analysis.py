import math

import numpy as np
import pytest

from safegate.errors import BadKeywordIndex, DimMismatch, NoAttention, TooFewSamples
from safegate.analysis import (
    FilterReport,
    MmdConfig,
    evaluate_filter,
    mmd,
    report_json,
    semantic_attention_concentration,
    top1_aggregator_ratio,
)
from safegate.datasets import LabeledEmbedding
from safegate.encoding.types import AttentionTensor, EmbeddingMatrix, EncodeResult


def naive_mmd(a, b, sigma_sq, estimator="unbiased"):
    """Independent double-loop implementation used as the oracle."""

    def k(x, y):
        return math.exp(-sum((xi - yi) ** 2 for xi, yi in zip(x, y)) / (2 * sigma_sq))

    m, n = len(a), len(b)
    if estimator == "unbiased":
        t1 = sum(k(a[i], a[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
        t2 = sum(k(b[i], b[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
        if m == n:
            t3 = sum(k(a[i], b[j]) for i in range(m) for j in range(n) if i != j) / (m * (m - 1))
        else:
            t3 = sum(k(a[i], b[j]) for i in range(m) for j in range(n)) / (m * n)
    else:
        t1 = sum(k(a[i], a[j]) for i in range(m) for j in range(m)) / (m * m)
        t2 = sum(k(b[i], b[j]) for i in range(n) for j in range(n)) / (n * n)
        t3 = sum(k(a[i], b[j]) for i in range(m) for j in range(n)) / (m * n)
    return t1 + t2 - 2 * t3


@pytest.mark.parametrize("estimator", ["unbiased", "biased"])
@pytest.mark.parametrize("shape", [(8, 8), (7, 9)])
def test_mmd_matches_naive_oracle(estimator, shape):
    rng = np.random.default_rng(1)
    a = rng.standard_normal((shape[0], 4))
    b = rng.standard_normal((shape[1], 4)) + 0.5
    sigma = 1.3
    got = mmd(a, b, MmdConfig(bandwidth=sigma, estimator=estimator))
    want = naive_mmd(a.tolist(), b.tolist(), sigma**2, estimator)
    assert got == pytest.approx(want, abs=1e-12)


def test_mmd_identical_sets_near_zero():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((50, 16))
    assert abs(mmd(a, a.copy())) < 0.02


def test_mmd_separated_clusters_dominate_same_distribution():
    rng = np.random.default_rng(7)
    c1 = rng.standard_normal((100, 16))
    c2 = rng.standard_normal((100, 16)) + 10.0
    same = mmd(rng.standard_normal((100, 16)), rng.standard_normal((100, 16)))
    apart = mmd(c1, c2)
    assert apart > 10 * abs(same)
    assert apart > 0.5


def test_mmd_symmetry():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((20, 8))
    b = rng.standard_normal((25, 8)) + 1.0
    assert mmd(a, b) == pytest.approx(mmd(b, a), abs=1e-9)


def test_mmd_biased_nonnegative():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.standard_normal((10, 4))
        b = rng.standard_normal((12, 4))
        assert mmd(a, b, MmdConfig(estimator="biased")) >= 0.0


def test_mmd_invariant_under_identical_permutation():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((15, 6))
    b = rng.standard_normal((15, 6)) + 0.3
    perm = rng.permutation(15)
    assert mmd(a, b) == pytest.approx(mmd(a[perm], b[perm]), abs=1e-12)


def test_mmd_input_validation():
    ok = np.zeros((5, 3))
    with pytest.raises(TooFewSamples):
        mmd(ok[:1], ok)
    with pytest.raises(DimMismatch):
        mmd(ok, np.zeros((5, 4)))
    with pytest.raises(ValueError):
        MmdConfig(kernel="linear")
    with pytest.raises(ValueError):
        MmdConfig(bandwidth=-1.0)
    with pytest.raises(ValueError):
        MmdConfig(estimator="other")


def test_mmd_degenerate_identical_points():
    a = np.ones((5, 3))
    assert mmd(a, a) == pytest.approx(0.0, abs=1e-12)


def test_top1_ratio_is_100_for_reference_encoder(encoder):
    prompts = ["park bench", "a dog by the river", "sunset over the mountain"]
    assert top1_aggregator_ratio(prompts, encoder) == 100.0


def _handcrafted_result(eos_outgoing_small: bool) -> EncodeResult:
    """2 content tokens, max_len 5; optionally give token row 1 the most outgoing mass."""
    max_len, dim = 5, 4
    rows = np.zeros((max_len, dim), dtype=np.float32)
    rows[:4] = np.eye(4, dtype=np.float32)[:4]
    att = np.zeros((1, 1, max_len, max_len), dtype=np.float32)
    nonpad = 4
    if eos_outgoing_small:
        att[0, 0, 0] = [0.9, 0.05, 0.05, 0.0, 0.0]
        att[0, 0, 1] = [0.8, 0.0, 0.1, 0.1, 0.0]  # row 1 outgoing: 1.0
        att[0, 0, 2] = [0.1, 0.1, 0.8, 0.0, 0.0]
        att[0, 0, 3] = [0.0, 0.0, 0.3, 0.7, 0.0]  # EOS outgoing: 0.3
    else:
        att[0, 0, 0] = [1.0, 0.0, 0.0, 0.0, 0.0]
        att[0, 0, 1] = [0.0, 1.0, 0.0, 0.0, 0.0]
        att[0, 0, 2] = [0.0, 0.0, 1.0, 0.0, 0.0]
        att[0, 0, 3] = [0.5, 0.25, 0.25, 0.0, 0.0]  # EOS outgoing: 1.0
    matrix = EmbeddingMatrix(rows=rows, eos_index=3, content_len=2)
    return EncodeResult(matrix=matrix, attention=AttentionTensor(att), encoder_id="crafted")


class _CraftedEncoder:
    def __init__(self, result):
        self.result = result
        self.encoder_id = "crafted"

    def encode_text(self, text, want_attention=False):
        return self.result


def test_top1_ratio_zero_when_content_token_aggregates_more():
    encoder = _CraftedEncoder(_handcrafted_result(eos_outgoing_small=True))
    assert top1_aggregator_ratio(["x"], encoder) == 0.0


def test_top1_ratio_hundred_for_dominant_eos():
    encoder = _CraftedEncoder(_handcrafted_result(eos_outgoing_small=False))
    assert top1_aggregator_ratio(["x"], encoder) == 100.0


def test_top1_requires_attention(encoder):
    class NoAttentionEncoder:
        def encode_text(self, text, want_attention=False):
            res = encoder.encode_text(text, want_attention=False)
            return res

    with pytest.raises(NoAttention):
        top1_aggregator_ratio(["park"], NoAttentionEncoder())


def test_sac_uniform_eos_attention_closed_form(encoder):
    # 4 content tokens, 2 keywords, uniform EOS attention -> exactly 1/2
    value = semantic_attention_concentration(
        ["park bench dog tree"], encoder, keywords=[[0, 2]]
    )
    assert value == pytest.approx(0.5, abs=1e-9)


def test_sac_all_keywords_is_one(encoder):
    value = semantic_attention_concentration(
        ["park bench dog"], encoder, keywords=[[0, 1, 2]]
    )
    assert value == pytest.approx(1.0, abs=1e-9)


def test_sac_matches_keyword_share(encoder):
    value = semantic_attention_concentration(["park bench dog tree river"], encoder, [[1]])
    assert value == pytest.approx(1 / 5, abs=1e-9)


def test_sac_bad_keyword_index(encoder):
    with pytest.raises(BadKeywordIndex):
        semantic_attention_concentration(["park bench"], encoder, [[2]])


def test_sac_layer_selection(encoder):
    with pytest.raises(ValueError):
        semantic_attention_concentration(["park bench"], encoder, [[0]], layers=[1])
    value = semantic_attention_concentration(["park bench"], encoder, [[0]], layers=[0])
    assert value == pytest.approx(0.5, abs=1e-9)


def test_evaluate_filter_with_stub_scorer():
    records = (
        [LabeledEmbedding(np.full(2, 0.9, np.float32), 1) for _ in range(8)]
        + [LabeledEmbedding(np.full(2, 0.2, np.float32), 1) for _ in range(2)]
        + [LabeledEmbedding(np.full(2, 0.1, np.float32), 0) for _ in range(9)]
        + [LabeledEmbedding(np.full(2, 0.7, np.float32), 0)]
    )
    report = evaluate_filter(records, lambda e: float(e[0]))
    assert report.counts["safe_total"] == 10
    assert report.counts["unsafe_total"] == 10
    assert report.fpr == pytest.approx(20.0)
    assert report.asr_fnr == pytest.approx(10.0)
    assert report.gsr == pytest.approx(80.0)
    assert report.gsr + report.fpr == 100.0
    assert sum(
        report.counts[k]
        for k in ("safe_flagged_unsafe", "safe_passed", "unsafe_passed_safe", "unsafe_flagged")
    ) == len(records)


def test_evaluate_filter_constant_safe_on_benign_set():
    records = [LabeledEmbedding(np.zeros(2, np.float32), 1) for _ in range(5)]
    report = evaluate_filter(records, lambda e: 1.0)
    assert report.fpr == 0.0
    assert report.gsr == 100.0
    assert report.asr_fnr is None


def test_evaluate_filter_trained_recognizer_params(trained_params, dataset_split):
    _, test_ds = dataset_split
    report = evaluate_filter(test_ds.records, trained_params)
    assert isinstance(report, FilterReport)
    assert report.fpr is not None and report.fpr <= 2.0
    assert report.asr_fnr is not None and report.asr_fnr <= 2.0


def test_evaluate_filter_empty():
    with pytest.raises(ValueError):
        evaluate_filter([], lambda e: 1.0)


def test_report_json_shape():
    import json

    line = report_json("mmd", 0.5, {"kernel": "rbf"}, n_a=10, n_b=20)
    parsed = json.loads(line)
    assert parsed == {"metric": "mmd", "value": 0.5, "config": {"kernel": "rbf"}, "n_a": 10, "n_b": 20}
