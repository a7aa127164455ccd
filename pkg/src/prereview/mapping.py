"""Semantic feature-to-review matching: embed texts, rank privacy reviews by
cosine similarity per feature, and emit top-k training pairs."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol, Sequence

import numpy as np

from .corpus import CorpusSplit, Feature, Review
from .errors import UndefinedSimilarityError
from .hashing import derive_seed, stable_hash
from .text import token_counts

log = logging.getLogger(__name__)

DEFAULT_TOP_K = 10


class EmbeddingBackend(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbeddingBackend:
    """Deterministic stub embedder: seeded token-multiset hashing.

    Every token maps to a fixed random gaussian vector; a text embeds to the
    L2-normalised count-weighted sum. Shared vocabulary yields high cosine.
    """

    def __init__(self, dimension: int = 64, seed: int = 0, name: str | None = None):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.seed = seed
        self.name = name or f"hash-{dimension}-s{seed}"
        self._token_vectors: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            rng = np.random.default_rng(derive_seed(self.seed, "token", token))
            vec = rng.standard_normal(self.dimension)
            self._token_vectors[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        counts = token_counts(text)
        if not counts:
            counts = {f"__blank__:{text}": 1}
        total = np.zeros(self.dimension)
        for token, count in sorted(counts.items()):
            total += count * self._token_vector(token)
        norm = float(np.linalg.norm(total))
        return total / norm if norm > 0 else total


class EmbeddingCache:
    """Content-addressed vector cache: in-memory dict plus an optional canonical
    on-disk form (one .npy matrix + a sorted JSON index), so reloads are
    bit-identical and the artifact bytes are reproducible."""

    def __init__(self) -> None:
        self._store: dict[str, np.ndarray] = {}

    @staticmethod
    def key(backend: EmbeddingBackend, text: str) -> str:
        return stable_hash(backend.name, str(backend.dimension), text)

    def get(self, backend: EmbeddingBackend, text: str) -> np.ndarray | None:
        return self._store.get(self.key(backend, text))

    def put(self, backend: EmbeddingBackend, text: str, vector: np.ndarray) -> None:
        self._store[self.key(backend, text)] = vector

    def __len__(self) -> int:
        return len(self._store)

    def save(self, matrix_path: Path, index_path: Path) -> None:
        keys = sorted(self._store)
        matrix = (
            np.stack([self._store[k] for k in keys])
            if keys
            else np.zeros((0, 0))
        )
        np.save(matrix_path, matrix)
        index_path.write_text(
            json.dumps({"keys": keys}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, matrix_path: Path, index_path: Path) -> "EmbeddingCache":
        cache = cls()
        keys = json.loads(index_path.read_text(encoding="utf-8"))["keys"]
        matrix = np.load(matrix_path)
        for row, key in enumerate(keys):
            cache._store[key] = matrix[row]
        return cache


def embed_batch(
    backend: EmbeddingBackend,
    texts: Sequence[str],
    cache: EmbeddingCache | None = None,
    retries: int = 1,
) -> list[np.ndarray | None]:
    """Embed each text, consulting/filling the cache. A backend failure is
    retried once, then recorded as missing (None) with a log entry."""
    vectors: list[np.ndarray | None] = []
    for text in texts:
        vector = cache.get(backend, text) if cache is not None else None
        if vector is None:
            for attempt in range(retries + 1):
                try:
                    vector = backend.embed(text)
                    break
                except Exception:  # noqa: BLE001 - backend contracts vary
                    if attempt == retries:
                        log.warning("embedding failed after retry; item excluded: %.40r", text)
                        vector = None
        if vector is not None:
            if len(vector) != backend.dimension:
                raise ValueError(
                    f"backend {backend.name} returned dimension {len(vector)}, "
                    f"expected {backend.dimension}"
                )
            if cache is not None:
                cache.put(backend, text, vector)
        vectors.append(vector)
    return vectors


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), clamped into [-1, 1] against rounding."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = float(np.linalg.norm(u))
    norm_v = float(np.linalg.norm(v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise UndefinedSimilarityError("cosine undefined for a zero vector")
    value = float(np.dot(u, v)) / (norm_u * norm_v)
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class FeatureReviewPair:
    """One (feature, privacy review) link; ranks are 1..k, similarity non-increasing."""

    feature_id: str
    review_id: str
    similarity: float
    rank: int


def map_feature(
    feature: Feature,
    privacy_reviews: Sequence[Review],
    backend: EmbeddingBackend,
    k: int = DEFAULT_TOP_K,
    cache: EmbeddingCache | None = None,
) -> list[FeatureReviewPair]:
    """Rank the privacy-review pool by cosine similarity to the feature and keep
    the top min(k, pool) with ties broken by ascending review id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not privacy_reviews:
        log.warning("feature %s: empty privacy-review pool; excluded from training", feature.id)
        return []
    (feature_vec,) = embed_batch(backend, [feature.description], cache)
    if feature_vec is None:
        log.warning("feature %s: embedding unavailable; excluded from training", feature.id)
        return []
    review_vecs = embed_batch(backend, [r.text for r in privacy_reviews], cache)
    scored = []
    for review, vec in zip(privacy_reviews, review_vecs):
        if vec is None:
            continue
        scored.append((cosine(feature_vec, vec), review.id))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [
        FeatureReviewPair(feature.id, review_id, similarity, rank)
        for rank, (similarity, review_id) in enumerate(scored[:k], start=1)
    ]


def map_features(
    features: Sequence[Feature],
    privacy_reviews: Sequence[Review],
    backend: EmbeddingBackend,
    k: int = DEFAULT_TOP_K,
    cache: EmbeddingCache | None = None,
) -> dict[str, list[FeatureReviewPair]]:
    """map_feature over many features, sharing one embedding cache."""
    if cache is None:
        cache = EmbeddingCache()
    return {
        feature.id: map_feature(feature, privacy_reviews, backend, k, cache)
        for feature in features
    }


@dataclass(frozen=True)
class PairRecord:
    """Flat simulator-training record as persisted to the pair dataset file."""

    feature_id: str
    review_id: str
    feature_text: str
    review_text: str
    similarity: float
    rank: int

    def to_json(self) -> dict[str, Any]:
        return {
            "feature_id": self.feature_id,
            "review_id": self.review_id,
            "feature_text": self.feature_text,
            "review_text": self.review_text,
            "similarity": self.similarity,
            "rank": self.rank,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "PairRecord":
        return cls(
            feature_id=str(raw["feature_id"]),
            review_id=str(raw["review_id"]),
            feature_text=str(raw["feature_text"]),
            review_text=str(raw["review_text"]),
            similarity=float(raw["similarity"]),
            rank=int(raw["rank"]),
        )


def build_training_pairs(
    split: CorpusSplit,
    mapping: dict[str, list[FeatureReviewPair]],
) -> list[PairRecord]:
    """Flatten mapping results into (feature text -> review text) records.

    Reviews may repeat across features; pairing is per-feature independent.
    """
    features_by_id = {f.id: f for f in split.existing_features()}
    reviews_by_id = {r.id: r for r in split.existing_reviews}
    records = []
    for feature in split.existing_features():
        for pair in mapping.get(feature.id, []):
            review = reviews_by_id.get(pair.review_id)
            if review is None:
                raise ValueError(f"pair references review {pair.review_id} outside the existing pool")
            records.append(
                PairRecord(
                    feature_id=pair.feature_id,
                    review_id=pair.review_id,
                    feature_text=features_by_id[pair.feature_id].description,
                    review_text=review.text,
                    similarity=pair.similarity,
                    rank=pair.rank,
                )
            )
    return records


def write_pairs(records: Sequence[PairRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")


def read_pairs(path: Path) -> list[PairRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(PairRecord.from_json(json.loads(line)))
    return records
