"""Vector similarity for EOS embeddings."""

from __future__ import annotations

import numpy as np

from safegate.errors import DimMismatch, ZeroVector

_NORM_FLOOR = 1e-12


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two embedding vectors, in [-1, 1]."""
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.shape != bv.shape:
        raise DimMismatch(f"vector lengths differ: {av.shape[0]} vs {bv.shape[0]}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na < _NORM_FLOOR or nb < _NORM_FLOOR:
        raise ZeroVector("cosine similarity undefined for (near-)zero vectors")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))
