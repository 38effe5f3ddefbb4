"""Prompt-safety gateway: embedding-level recognition plus token-erasure sanitization."""

from safegate.encoding import (
    EncodeResult,
    ReferenceEncoder,
    ReferenceEncoderConfig,
    RemoteEncoder,
    TokenSequence,
    cosine_similarity,
    embed_remote,
    encode_reference,
    extract_eos,
    tokenize,
)
from safegate.recognizer import (
    RecognizerParams,
    TrainingConfig,
    Verdict,
    balanced_loss,
    classify,
    forward,
    gradient,
    init_recognizer,
    load_params,
    make_scorer,
    persist_params,
    train,
)
from safegate.search import (
    SanitizeResult,
    SanitizeStatus,
    SearchConfig,
    brute_force_sanitize,
    safe_beam_search,
    token_contributions,
)
from safegate.analysis import (
    FilterReport,
    MmdConfig,
    evaluate_filter,
    mmd,
    semantic_attention_concentration,
    top1_aggregator_ratio,
)
from safegate.datasets import (
    EmbeddingDataset,
    LabeledEmbedding,
    PromptRecord,
    build_embedding_dataset,
    ingest_prompts,
    load_dataset,
    save_dataset,
    split_dataset,
)

__version__ = "0.1.0"
