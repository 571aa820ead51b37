"""Word vectors: text-format loading, seeded fallback vectors, cosine similarity."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, DimensionError, ParseError

DEFAULT_DIM = 200


def fallback_vector(word: str, seed: int, dim: int) -> np.ndarray:
    """Unit-norm Gaussian vector keyed on sha256(seed, word); stable across processes."""
    digest = hashlib.sha256(f"{seed}\x00{word}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class EmbeddingTable:
    def __init__(self, vectors: Mapping[str, Iterable[float]] | None = None,
                 dim: int = DEFAULT_DIM, fallback_seed: int | None = None):
        if dim < 1:
            raise ConfigurationError("embedding dim must be >= 1")
        self.dim = dim
        self.fallback_seed = fallback_seed
        self.vectors: dict[str, np.ndarray] = {}
        for word, vec in (vectors or {}).items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise DimensionError(f"vector for {word!r} has shape {arr.shape}, expected ({dim},)")
            arr.setflags(write=False)
            self.vectors[word] = arr
        self._fallback_cache: dict[str, np.ndarray] = {}

    @classmethod
    def load(cls, path, fallback_seed: int | None = None) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ParseError("header must be '<vocab_size> <dim>'", 1)
            try:
                size, dim = int(header[0]), int(header[1])
            except ValueError:
                raise ParseError("header must be '<vocab_size> <dim>'", 1) from None
            vectors = {}
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if not parts or not parts[0]:
                    continue
                if len(parts) != dim + 1:
                    raise ParseError(f"expected {dim} values, got {len(parts) - 1}", lineno)
                try:
                    vectors[parts[0]] = np.array(parts[1:], dtype=np.float64)
                except ValueError:
                    raise ParseError("non-numeric vector component", lineno) from None
        if len(vectors) != size:
            raise ParseError(f"header declares {size} words, file has {len(vectors)}")
        return cls(vectors, dim, fallback_seed)

    def save(self, path) -> None:
        lines = [f"{len(self.vectors)} {self.dim}"]
        for word in sorted(self.vectors):
            lines.append(word + " " + " ".join(repr(float(x)) for x in self.vectors[word]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def __contains__(self, word) -> bool:
        return word in self.vectors

    def embed_word(self, word: str) -> np.ndarray:
        vec = self.vectors.get(word)
        if vec is not None:
            return vec
        if self.fallback_seed is None:
            return np.zeros(self.dim)
        vec = self._fallback_cache.get(word)
        if vec is None:
            vec = fallback_vector(word, self.fallback_seed, self.dim)
            vec.setflags(write=False)
            self._fallback_cache[word] = vec
        return vec

    def embed_entity(self, entity) -> np.ndarray:
        if not entity:
            raise ValueError("entity must have at least one token")
        return np.mean([self.embed_word(w) for w in entity], axis=0)

    def matrix(self, words) -> np.ndarray:
        return np.array([self.embed_word(w) for w in words]).reshape(len(words), self.dim)


def embed_word(table: EmbeddingTable, word: str) -> np.ndarray:
    return table.embed_word(word)


def embed_entity(table: EmbeddingTable, entity) -> np.ndarray:
    return table.embed_entity(entity)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"cosine of vectors with shapes {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
