"""Fixed random projection for oversized encoder embeddings.

Lets the recognizer consume encoders whose width exceeds its d_in (e.g.
projecting 4096-dim embeddings down to 1024). The matrix is fully determined
by (seed, d_in, d_out), so persistence stores only those three values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from safegate.errors import DimMismatch, FormatError


@dataclass(frozen=True)
class RandomProjection:
    seed: int
    d_in: int
    d_out: int

    def matrix(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return (rng.standard_normal((self.d_in, self.d_out)) / np.sqrt(self.d_out)).astype(
            np.float32
        )

    def apply(self, e: np.ndarray) -> np.ndarray:
        vec = np.asarray(e, dtype=np.float32).ravel()
        if vec.shape[0] != self.d_in:
            raise DimMismatch(f"embedding dim {vec.shape[0]} does not match d_in {self.d_in}")
        return vec @ self.matrix()


def save_projection(proj: RandomProjection, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps({"seed": proj.seed, "d_in": proj.d_in, "d_out": proj.d_out}), encoding="utf-8"
    )


def load_projection(path: str | Path) -> RandomProjection:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return RandomProjection(seed=int(raw["seed"]), d_in=int(raw["d_in"]), d_out=int(raw["d_out"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"invalid projection file {path}: {exc}") from exc
