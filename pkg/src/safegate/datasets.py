"""Corpus ingestion, embedding-dataset construction, persistence and splitting.

Embedding dataset binary layout (little-endian): magic "SGED", version
u32 = 1, count u32, dim u32, then per record label u8 (0 unsafe, 1 safe) and
dim f32 values. A manifest travels as a sibling JSON file at
"<path>.manifest.json".
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from safegate.errors import DatasetBuildError, FormatError, ParseError, TooSmall
from safegate.encoding.types import extract_eos

LABEL_UNSAFE = 0
LABEL_SAFE = 1
_LABEL_BY_NAME = {"unsafe": LABEL_UNSAFE, "safe": LABEL_SAFE}
_NAME_BY_LABEL = {v: k for k, v in _LABEL_BY_NAME.items()}

MAGIC = b"SGED"
VERSION = 1

CSV_HEADER = ["text", "label", "category", "source"]


@dataclass(frozen=True)
class PromptRecord:
    text: str
    label: str
    category: str | None = None
    source: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("text must be non-empty after trimming")
        if self.label not in _LABEL_BY_NAME:
            raise ValueError(f"label must be 'safe' or 'unsafe', got {self.label!r}")

    @property
    def label_value(self) -> int:
        return _LABEL_BY_NAME[self.label]


@dataclass(frozen=True)
class LabeledEmbedding:
    embedding: np.ndarray
    label: int

    def __post_init__(self) -> None:
        if self.label not in (LABEL_UNSAFE, LABEL_SAFE):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass(frozen=True)
class IngestResult:
    records: list[PromptRecord]
    errors: list[RowError]


@dataclass
class EmbeddingDataset:
    dim: int
    records: list[LabeledEmbedding]
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def count(self, label: int) -> int:
        return sum(1 for r in self.records if r.label == label)


def label_counts(records: Sequence[LabeledEmbedding]) -> dict[str, int]:
    return {
        "safe": sum(1 for r in records if r.label == LABEL_SAFE),
        "unsafe": sum(1 for r in records if r.label == LABEL_UNSAFE),
    }


def ingest_prompts(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Read a labeled prompt corpus; malformed rows land in the error report."""
    path = Path(path)
    if format == "jsonl":
        return _ingest_jsonl(path)
    if format == "csv":
        return _ingest_csv(path)
    raise ValueError(f"unknown format {format!r}")


def _record_from_mapping(raw: dict, line: int) -> PromptRecord | RowError:
    text = raw.get("text")
    label = raw.get("label")
    if not isinstance(text, str) or not text.strip():
        return RowError(line, "missing or empty 'text'")
    if label not in _LABEL_BY_NAME:
        return RowError(line, f"label must be 'safe' or 'unsafe', got {label!r}")
    category = raw.get("category")
    if category is not None and not isinstance(category, str):
        return RowError(line, "'category' must be a string when present")
    source = raw.get("source") or ""
    if not isinstance(source, str):
        return RowError(line, "'source' must be a string when present")
    return PromptRecord(text=text, label=label, category=category or None, source=source)


def _ingest_jsonl(path: Path) -> IngestResult:
    records: list[PromptRecord] = []
    errors: list[RowError] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(RowError(line_no, f"invalid JSON: {exc}"))
                continue
            if not isinstance(raw, dict):
                errors.append(RowError(line_no, "row is not a JSON object"))
                continue
            out = _record_from_mapping(raw, line_no)
            (records if isinstance(out, PromptRecord) else errors).append(out)
    return IngestResult(records, errors)


def _ingest_csv(path: Path) -> IngestResult:
    records: list[PromptRecord] = []
    errors: list[RowError] = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty CSV file")
        if [f.strip() for f in reader.fieldnames] != CSV_HEADER:
            raise ParseError(f"{path}: header must be {','.join(CSV_HEADER)}")
        for raw in reader:
            line = reader.line_num
            cleaned = {k: (v if v != "" else None) for k, v in raw.items() if k is not None}
            out = _record_from_mapping(cleaned, line)
            (records if isinstance(out, PromptRecord) else errors).append(out)
    return IngestResult(records, errors)


def build_embedding_dataset(
    records: Sequence[PromptRecord], encoder, seed: int | None = None
) -> EmbeddingDataset:
    """Tokenize, encode and extract the EOS vector for every record, in order."""
    if not records:
        raise ValueError("no records to build a dataset from")
    labeled: list[LabeledEmbedding] = []
    for i, record in enumerate(records):
        try:
            res = encoder.encode_text(record.text, want_attention=False)
        except Exception as exc:
            raise DatasetBuildError(f"record {i}: {exc}") from exc
        labeled.append(LabeledEmbedding(embedding=extract_eos(res), label=record.label_value))
    dim = int(labeled[0].embedding.shape[0])
    manifest = {
        "encoder_id": getattr(encoder, "encoder_id", "unknown"),
        "sources": sorted({r.source for r in records if r.source}),
        "seed": seed,
        "dim": dim,
        "counts": label_counts(labeled),
    }
    return EmbeddingDataset(dim=dim, records=labeled, manifest=manifest)


def save_dataset(ds: EmbeddingDataset, path: str | Path) -> None:
    """Write the binary records plus the sibling manifest JSON."""
    path = Path(path)
    chunks = [MAGIC, struct.pack("<III", VERSION, len(ds.records), ds.dim)]
    for record in ds.records:
        vec = np.asarray(record.embedding, dtype="<f4").ravel()
        if vec.shape[0] != ds.dim:
            raise ValueError(f"record dim {vec.shape[0]} does not match dataset dim {ds.dim}")
        chunks.append(struct.pack("<B", record.label))
        chunks.append(vec.tobytes())
    path.write_bytes(b"".join(chunks))
    manifest_path(path).write_text(
        json.dumps(ds.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_dataset(path: str | Path) -> EmbeddingDataset:
    """Read a binary embedding dataset, validating layout and length."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 16:
        raise FormatError("file truncated")
    if data[:4] != MAGIC:
        raise FormatError("bad magic bytes; not an embedding dataset file")
    version, count, dim = struct.unpack("<III", data[4:16])
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if dim < 1:
        raise FormatError("dataset dim must be positive")
    record_size = 1 + 4 * dim
    expected = 16 + count * record_size
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes for {count} records, found {len(data)}")
    records: list[LabeledEmbedding] = []
    offset = 16
    for _ in range(count):
        label = data[offset]
        if label not in (LABEL_UNSAFE, LABEL_SAFE):
            raise FormatError(f"invalid label byte {label}")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset + 1).copy()
        records.append(LabeledEmbedding(embedding=vec, label=int(label)))
        offset += record_size

    mpath = manifest_path(path)
    if mpath.exists():
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    else:
        manifest = {"encoder_id": "unknown", "sources": [], "seed": None, "dim": dim,
                    "counts": label_counts(records)}
    return EmbeddingDataset(dim=dim, records=records, manifest=manifest)


def manifest_path(path: str | Path) -> Path:
    return Path(str(path) + ".manifest.json")


def split_dataset(
    ds: EmbeddingDataset, train_fraction: float, seed: int
) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    """Deterministic stratified split; per-label proportions hold within one record.

    Selected indices are emitted in original dataset order, so the split is a
    pure function of (ds, train_fraction, seed).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    by_label: dict[int, list[int]] = {}
    for i, record in enumerate(ds.records):
        by_label.setdefault(record.label, []).append(i)

    train_idx: list[int] = []
    test_idx: list[int] = []
    for label in sorted(by_label):
        indices = np.array(by_label[label])
        n = len(indices)
        n_train = int(train_fraction * n + 0.5)
        if n_train == 0 or n_train == n:
            raise TooSmall(f"label {label} stratum would leave an empty side ({n} records)")
        perm = rng.permutation(n)
        train_idx.extend(indices[perm[:n_train]].tolist())
        test_idx.extend(indices[perm[n_train:]].tolist())

    def subset(selected: list[int], part: str) -> EmbeddingDataset:
        records = [ds.records[i] for i in sorted(selected)]
        manifest = dict(ds.manifest)
        manifest["counts"] = label_counts(records)
        manifest["split"] = {"fraction": train_fraction, "seed": seed, "part": part}
        return EmbeddingDataset(dim=ds.dim, records=records, manifest=manifest)

    return subset(train_idx, "train"), subset(test_idx, "test")


def records_as_arrays(records: Sequence[LabeledEmbedding]) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into (X, y) arrays for batched evaluation."""
    x = np.stack([np.asarray(r.embedding, dtype=np.float64) for r in records])
    y = np.array([r.label for r in records], dtype=np.int64)
    return x, y


def label_name(label: int) -> str:
    return _NAME_BY_LABEL[label]


__all__ = [
    "LABEL_SAFE",
    "LABEL_UNSAFE",
    "PromptRecord",
    "LabeledEmbedding",
    "RowError",
    "IngestResult",
    "EmbeddingDataset",
    "ingest_prompts",
    "build_embedding_dataset",
    "save_dataset",
    "load_dataset",
    "manifest_path",
    "split_dataset",
    "records_as_arrays",
    "label_counts",
    "label_name",
]
