"""Token-embedding providers.

A provider maps a token sequence to a ``(len(tokens), dim)`` float array.
Pretrained contextual encoders are consumed through :class:`EmbeddingCache`
(vectors precomputed offline and stored per utterance key); tests and the
bundled fixture use :class:`HashEmbeddingProvider`.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, tokens: Sequence[str]) -> np.ndarray: ...


class HashEmbeddingProvider:
    """Deterministic pseudo-random vector per token type.

    Identical tokens get identical vectors, distinct tokens get nearly
    orthogonal ones in high dimension.  Not contextual.
    """

    def __init__(self, dim: int = 768, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._memo: dict[str, np.ndarray] = {}

    def vector(self, token: str) -> np.ndarray:
        vec = self._memo.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dim)
            self._memo[token] = vec
        return vec

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.vector(t) for t in tokens])


class TableEmbeddingProvider:
    """Fixed token -> vector table; unknown tokens raise ``KeyError``."""

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}
        dims = {v.shape for v in self.table.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent vector shapes {dims}")
        (shape,) = dims
        self.dim = shape[0]

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.table[t] for t in tokens])


class EmbeddingCache:
    """Precomputed per-utterance token vectors keyed by utterance id.

    Stored as a single ``.npz`` archive, one array per key.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray] | None = None):
        self.arrays: dict[str, np.ndarray] = dict(arrays or {})
        self.dim = next(iter(self.arrays.values())).shape[1] if self.arrays else 0

    def __contains__(self, key: str) -> bool:
        return key in self.arrays

    def __len__(self) -> int:
        return len(self.arrays)

    def get(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def put(self, key: str, vectors: np.ndarray) -> None:
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValueError("cached embeddings must be 2-d (tokens x dim)")
        if self.dim and vectors.shape[1] != self.dim:
            raise ValueError(f"dimension {vectors.shape[1]} != cache dimension {self.dim}")
        self.dim = vectors.shape[1]
        self.arrays[key] = vectors

    @classmethod
    def build(cls, utterances: Mapping[str, Sequence[str]], provider: EmbeddingProvider) -> "EmbeddingCache":
        cache = cls()
        for key in sorted(utterances):
            tokens = utterances[key]
            vecs = provider.embed(tokens) if tokens else np.zeros((1, provider.dim))
            cache.put(key, vecs)
        return cache

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, **{k: self.arrays[k] for k in sorted(self.arrays)})

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingCache":
        with np.load(path) as data:
            return cls({k: data[k] for k in data.files})


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-12)
    b = b / np.maximum(np.linalg.norm(b, axis=1, keepdims=True), 1e-12)
    return a @ b.T


def greedy_match_prf(candidate: np.ndarray, reference: np.ndarray) -> tuple[float, float, float]:
    """Greedy cosine matching between two token-vector sets, no idf weighting.

    Precision averages each candidate token's best match in the reference,
    recall the converse; either side empty gives (0, 0, 0).
    """
    if len(candidate) == 0 or len(reference) == 0:
        return 0.0, 0.0, 0.0
    sim = cosine_matrix(candidate, reference)
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    f = 2 * p * r / (p + r) if p + r != 0 else 0.0
    return p, r, f
