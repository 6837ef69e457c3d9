"""Greedy-matching BERTScore over externally supplied token embeddings."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .lexical import ScoreTriple, f_measure

NORM_TOLERANCE = 1e-6


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class TokenEmbeddings:
    tokens: tuple[str, ...]
    vectors: np.ndarray  # (n_tokens, dim), rows unit length

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim == 1 and vectors.size == 0:
            vectors = vectors.reshape(0, 0)
        if vectors.ndim != 2:
            raise EmbeddingError("vectors must be a 2-d array")
        if len(self.tokens) != vectors.shape[0]:
            raise EmbeddingError(f"{len(self.tokens)} tokens but {vectors.shape[0]} vectors")
        if vectors.shape[0] and vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be >= 1")
        if vectors.shape[0]:
            norms = np.linalg.norm(vectors, axis=1)
            if np.any(np.abs(norms - 1) > NORM_TOLERANCE):
                raise EmbeddingError("vectors must be unit-normalised")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def normalized(cls, tokens: Sequence[str], vectors) -> "TokenEmbeddings":
        """Build from raw vectors, rescaling each row to unit length."""
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.size == 0:
            return cls(tuple(tokens), np.zeros((0, 0)))
        if arr.ndim != 2:
            raise EmbeddingError("vectors must be a list of equal-length lists")
        norms = np.linalg.norm(arr, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise EmbeddingError("zero vector cannot be normalised")
        return cls(tuple(tokens), arr / norms)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1] if len(self) else 0


def _weights(tokens: Sequence[str], idf: Mapping[str, float] | None) -> np.ndarray:
    if idf is None:
        return np.ones(len(tokens))
    return np.array([float(idf.get(t, 0.0)) for t in tokens])


def _greedy_side(sim: np.ndarray, weights: np.ndarray) -> float:
    # negative best-match cosines count as zero so scores stay in [0, 1]
    total = weights.sum()
    if total <= 0:
        return 0.0
    best = np.clip(sim.max(axis=1), 0.0, 1.0)
    return float(min(1.0, max(0.0, np.dot(weights, best) / total)))


def bertscore(
    candidate: TokenEmbeddings,
    reference: TokenEmbeddings,
    idf: Mapping[str, float] | None = None,
) -> ScoreTriple:
    """Precision matches each candidate token to its most similar reference
    token; recall does the reverse. No baseline rescaling."""
    if len(candidate) == 0 or len(reference) == 0:
        return ScoreTriple(0.0, 0.0, 0.0)
    if candidate.dim != reference.dim:
        raise EmbeddingError(f"dimension mismatch: {candidate.dim} vs {reference.dim}")
    sim = candidate.vectors @ reference.vectors.T
    p = _greedy_side(sim, _weights(candidate.tokens, idf))
    r = _greedy_side(sim.T, _weights(reference.tokens, idf))
    return ScoreTriple(p, r, f_measure(p, r))


def load_embeddings(path: str | os.PathLike) -> dict[tuple[int, str], TokenEmbeddings]:
    """Read an embedding JSONL file keyed by (record_id, side)."""
    out: dict[tuple[int, str], TokenEmbeddings] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                side = obj["side"]
                if side not in ("candidate", "reference"):
                    raise EmbeddingError(f"side must be candidate or reference, got {side!r}")
                key = (int(obj["record_id"]), side)
                out[key] = TokenEmbeddings.normalized(obj["tokens"], obj["vectors"])
            except (KeyError, ValueError, TypeError) as exc:
                raise EmbeddingError(f"{path}:{lineno}: {exc}") from None
    return out


def write_embeddings(entries, path: str | os.PathLike) -> None:
    """Write ``(record_id, side, TokenEmbeddings)`` triples as JSONL."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record_id, side, emb in entries:
            obj = {
                "record_id": record_id,
                "side": side,
                "tokens": list(emb.tokens),
                "vectors": emb.vectors.tolist(),
            }
            fh.write(json.dumps(obj))
            fh.write("\n")
