# app/operations/embedding.py

"""
Deterministic state embeddings for semantic cache keys.

Text descriptions are tokenised, expanded to word n-grams and feature-hashed
into ``dim`` signed buckets with a keyed BLAKE2b digest; numeric states are
bucketised per coordinate and the bucket indicators hashed the same way. Both
paths return unit-norm vectors, and the all-zero case maps to e_1.
"""

import hashlib
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

logger = logging.getLogger("app.operations")

TOKEN_PATTERN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True, eq=False)
class Embedding:
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def _hash_feature(feature: str, dim: int, seed: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        feature.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")
    ).digest()
    bucket = int.from_bytes(digest[:4], "big") % dim
    sign = 1.0 if digest[4] & 1 else -1.0
    return bucket, sign


def _finish(vec: np.ndarray) -> Embedding:
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec = np.zeros_like(vec)
        vec[0] = 1.0
    else:
        vec = vec / norm
    return Embedding(vec)


def _hash_features(features: Sequence[str], dim: int, seed: int) -> Embedding:
    vec = np.zeros(dim, dtype=np.float64)
    for feature in features:
        bucket, sign = _hash_feature(feature, dim, seed)
        vec[bucket] += sign
    return _finish(vec)


def text_features(description: str, max_ngram: int = 2) -> list[str]:
    tokens = TOKEN_PATTERN.findall(description.lower())
    features = []
    for n in range(1, max_ngram + 1):
        features.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return features


@lru_cache(maxsize=65536)
def embed_text(description: str, dim: int = 64, seed: int = 0, max_ngram: int = 2) -> Embedding:
    """Signed feature hashing of word unigrams and bigrams, L2-normalised."""
    if not description or not description.strip():
        raise ValueError("empty state description")
    return _hash_features(text_features(description, max_ngram), dim, seed)


def numeric_features(
    state: Sequence[float], low: Sequence[float], high: Sequence[float], buckets: int = 8
) -> list[str]:
    x = np.asarray(state, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("numeric state must be a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("numeric state has non-finite entries")
    lo = np.broadcast_to(np.asarray(low, dtype=float), x.shape)
    hi = np.broadcast_to(np.asarray(high, dtype=float), x.shape)
    if np.any(hi <= lo):
        raise ValueError("embedding bounds must satisfy high > low")
    idx = np.floor((x - lo) / (hi - lo) * buckets).astype(int)
    idx = np.clip(idx, 0, buckets - 1)
    return [f"x{k}={b}" for k, b in enumerate(idx)]


def embed_numeric(
    state: Sequence[float],
    low: Sequence[float] = (0.0,),
    high: Sequence[float] = (1.0,),
    buckets: int = 8,
    dim: int = 64,
    seed: int = 0,
) -> Embedding:
    """Per-coordinate bucket indicators hashed like text features."""
    return _hash_features(numeric_features(state, low, high, buckets), dim, seed)


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    # both operands are unit norm, so the dot product is the cosine
    return float(np.dot(a.values, b.values))
