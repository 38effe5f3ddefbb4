"""Shared fixtures: the synthetic corpus, its splits, and a trained recognizer."""

from __future__ import annotations

import numpy as np
import pytest

from safegate.datasets import build_embedding_dataset, split_dataset
from safegate.fixtures import fixture_encoder, planted_prompts, synthetic_prompt_records
from safegate.recognizer import TrainingConfig, init_recognizer, make_scorer, train

SPLIT_SEED = 5
INIT_SEED = 7
TRAIN_SEED = 13


class CountingEncoder:
    """Wraps an encoder and counts encode_text invocations."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    @property
    def dim(self):
        return self.inner.dim

    @property
    def max_len(self):
        return self.inner.max_len

    @property
    def encoder_id(self):
        return self.inner.encoder_id

    def encode_text(self, text, want_attention=False):
        self.calls += 1
        return self.inner.encode_text(text, want_attention)


@pytest.fixture(scope="session")
def encoder():
    return fixture_encoder()


@pytest.fixture(scope="session")
def corpus_records():
    return synthetic_prompt_records()


@pytest.fixture(scope="session")
def embedding_dataset(corpus_records, encoder):
    return build_embedding_dataset(corpus_records, encoder)


@pytest.fixture(scope="session")
def dataset_split(embedding_dataset):
    return split_dataset(embedding_dataset, 0.8, seed=SPLIT_SEED)


@pytest.fixture(scope="session")
def trained():
    """(params, history) of the recognizer trained on the fixture train split."""
    encoder_local = fixture_encoder()
    ds = build_embedding_dataset(synthetic_prompt_records(), encoder_local)
    train_ds, _ = split_dataset(ds, 0.8, seed=SPLIT_SEED)
    init = init_recognizer(64, (32, 16), dropout_rate=0.1, seed=INIT_SEED)
    return train(train_ds.records, TrainingConfig(seed=TRAIN_SEED), init)


@pytest.fixture(scope="session")
def trained_params(trained):
    return trained[0]


@pytest.fixture(scope="session")
def scorer(trained_params):
    return make_scorer(trained_params)


@pytest.fixture(scope="session")
def planted():
    return planted_prompts()


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
