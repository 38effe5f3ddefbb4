import json

import numpy as np
import pytest

from safegate.errors import FormatError, ParseError, TooSmall
from safegate.datasets import (
    LABEL_SAFE,
    LABEL_UNSAFE,
    EmbeddingDataset,
    LabeledEmbedding,
    PromptRecord,
    build_embedding_dataset,
    ingest_prompts,
    load_dataset,
    manifest_path,
    save_dataset,
    split_dataset,
)
from safegate.fixtures import fixture_encoder


def write_jsonl(path, rows):
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write((row if isinstance(row, str) else json.dumps(row)) + "\n")


def test_jsonl_ingest_happy_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(
        path,
        [
            {"text": "a dog", "label": "safe"},
            {"text": "bad stuff", "label": "unsafe", "category": "violence", "source": "x"},
        ],
    )
    result = ingest_prompts(path, "jsonl")
    assert not result.errors
    assert [r.label for r in result.records] == ["safe", "unsafe"]
    assert result.records[1].category == "violence"


def test_jsonl_malformed_rows_reported_not_dropped_silently(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(
        path,
        [
            {"text": "a dog", "label": "safe"},
            "not json at all {",
            {"text": "", "label": "safe"},
            {"text": "x", "label": "maybe"},
            {"text": "ok", "label": "unsafe"},
        ],
    )
    result = ingest_prompts(path, "jsonl")
    assert len(result.records) == 2
    assert [e.line for e in result.errors] == [2, 3, 4]


def test_jsonl_preserves_input_order(tmp_path):
    path = tmp_path / "corpus.jsonl"
    rows = [{"text": f"prompt {i}", "label": "safe"} for i in range(10)]
    write_jsonl(path, rows)
    result = ingest_prompts(path, "jsonl")
    assert [r.text for r in result.records] == [f"prompt {i}" for i in range(10)]


def test_csv_ingest(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text(
        'text,label,category,source\n"a dog, outside",safe,,coco\n,unsafe,,x\nbad,unsafe,v,y\n',
        encoding="utf-8",
    )
    result = ingest_prompts(path, "csv")
    assert [r.text for r in result.records] == ["a dog, outside", "bad"]
    assert len(result.errors) == 1
    assert result.errors[0].line == 3


def test_csv_bad_header_raises(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text("prompt,verdict\nx,safe\n", encoding="utf-8")
    with pytest.raises(ParseError):
        ingest_prompts(path, "csv")


def test_unknown_format(tmp_path):
    path = tmp_path / "corpus.xml"
    path.write_text("<x/>")
    with pytest.raises(ValueError):
        ingest_prompts(path, "xml")


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        ingest_prompts(tmp_path / "absent.jsonl", "jsonl")


def test_prompt_record_validation():
    with pytest.raises(ValueError):
        PromptRecord(text="  ", label="safe")
    with pytest.raises(ValueError):
        PromptRecord(text="x", label="fine")


def test_build_embedding_dataset(tmp_path):
    encoder = fixture_encoder()
    records = [
        PromptRecord(text="park bench", label="safe", source="a"),
        PromptRecord(text="weapon", label="unsafe", source="b"),
        PromptRecord(text="park bench", label="safe", source="a"),
    ]
    ds = build_embedding_dataset(records, encoder, seed=3)
    assert ds.dim == 64
    assert len(ds.records) == 3
    assert [r.label for r in ds.records] == [LABEL_SAFE, LABEL_UNSAFE, LABEL_SAFE]
    # identical text -> identical embedding
    assert np.array_equal(ds.records[0].embedding, ds.records[2].embedding)
    assert ds.manifest["counts"] == {"safe": 2, "unsafe": 1}
    assert ds.manifest["sources"] == ["a", "b"]
    assert ds.manifest["seed"] == 3
    assert ds.manifest["encoder_id"] == "reference-d64"


def test_build_requires_records():
    with pytest.raises(ValueError):
        build_embedding_dataset([], fixture_encoder())


def test_save_load_roundtrip_bit_exact(tmp_path):
    encoder = fixture_encoder()
    records = [
        PromptRecord(text="park bench dog", label="safe"),
        PromptRecord(text="weapon gun", label="unsafe"),
    ]
    ds = build_embedding_dataset(records, encoder)
    path = tmp_path / "data.sged"
    save_dataset(ds, path)
    assert manifest_path(path).exists()
    loaded = load_dataset(path)
    assert loaded.dim == ds.dim
    assert loaded.manifest == ds.manifest
    for a, b in zip(ds.records, loaded.records):
        assert a.label == b.label
        assert a.embedding.tobytes() == b.embedding.tobytes()
    # second save of the loaded dataset reproduces the file exactly
    second = tmp_path / "data2.sged"
    save_dataset(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_load_corrupt_magic(tmp_path):
    path = tmp_path / "data.sged"
    ds = EmbeddingDataset(dim=2, records=[LabeledEmbedding(np.zeros(2, np.float32), 1)])
    save_dataset(ds, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_dataset(path)


def test_load_corrupt_version(tmp_path):
    path = tmp_path / "data.sged"
    ds = EmbeddingDataset(dim=2, records=[LabeledEmbedding(np.zeros(2, np.float32), 1)])
    save_dataset(ds, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 7
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_dataset(path)


def test_load_truncated_and_oversized(tmp_path):
    path = tmp_path / "data.sged"
    ds = EmbeddingDataset(
        dim=3,
        records=[LabeledEmbedding(np.arange(3, dtype=np.float32), 1) for _ in range(4)],
    )
    save_dataset(ds, path)
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(FormatError):
        load_dataset(path)
    path.write_bytes(data + b"\x01")
    with pytest.raises(FormatError):
        load_dataset(path)


def test_load_bad_label_byte(tmp_path):
    path = tmp_path / "data.sged"
    ds = EmbeddingDataset(dim=2, records=[LabeledEmbedding(np.zeros(2, np.float32), 1)])
    save_dataset(ds, path)
    raw = bytearray(path.read_bytes())
    raw[16] = 2  # first record's label byte
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_dataset(path)


def test_load_without_manifest_reconstructs_counts(tmp_path):
    path = tmp_path / "data.sged"
    ds = EmbeddingDataset(
        dim=2,
        records=[
            LabeledEmbedding(np.zeros(2, np.float32), 1),
            LabeledEmbedding(np.ones(2, np.float32), 0),
        ],
    )
    save_dataset(ds, path)
    manifest_path(path).unlink()
    loaded = load_dataset(path)
    assert loaded.manifest["counts"] == {"safe": 1, "unsafe": 1}


def make_dataset(n_safe, n_unsafe, dim=4):
    rng = np.random.default_rng(0)
    records = [
        LabeledEmbedding(rng.standard_normal(dim).astype(np.float32), 1) for _ in range(n_safe)
    ] + [LabeledEmbedding(rng.standard_normal(dim).astype(np.float32), 0) for _ in range(n_unsafe)]
    return EmbeddingDataset(dim=dim, records=records, manifest={"encoder_id": "t", "counts": {}})


def test_split_is_stratified_exact():
    ds = make_dataset(100, 100)
    train, test = split_dataset(ds, 0.8, seed=1)
    assert train.manifest["counts"] == {"safe": 80, "unsafe": 80}
    assert test.manifest["counts"] == {"safe": 20, "unsafe": 20}


def test_split_deterministic():
    ds = make_dataset(50, 30)
    a_train, a_test = split_dataset(ds, 0.7, seed=9)
    b_train, b_test = split_dataset(ds, 0.7, seed=9)
    for a, b in ((a_train, b_train), (a_test, b_test)):
        assert len(a.records) == len(b.records)
        for x, y in zip(a.records, b.records):
            assert x.label == y.label
            assert np.array_equal(x.embedding, y.embedding)


def test_split_disjoint_and_exhaustive():
    ds = make_dataset(23, 17)
    train, test = split_dataset(ds, 0.8, seed=4)
    assert len(train.records) + len(test.records) == 40

    def multiset(dataset):
        return sorted((r.label, r.embedding.tobytes()) for r in dataset.records)

    combined = sorted(multiset(train) + multiset(test))
    assert combined == multiset(ds)


def test_split_proportions_within_one_record():
    ds = make_dataset(23, 17)
    train, _ = split_dataset(ds, 0.8, seed=4)
    assert abs(train.manifest["counts"]["safe"] - 0.8 * 23) <= 1
    assert abs(train.manifest["counts"]["unsafe"] - 0.8 * 17) <= 1


def test_split_too_small():
    ds = make_dataset(1, 10)
    with pytest.raises(TooSmall):
        split_dataset(ds, 0.8, seed=0)


def test_split_fraction_validation():
    ds = make_dataset(10, 10)
    for fraction in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            split_dataset(ds, fraction, seed=0)
