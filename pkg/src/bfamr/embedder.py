"""Pluggable contextual word vectors.

The model treats contextual vectors as frozen inputs: they never receive
gradients.  The default implementation derives deterministic vectors from
a stable hash of each sub-token, so the whole system runs offline and
reproducibly; a file-backed implementation loads precomputed vectors.
"""

from __future__ import annotations

import hashlib

import numpy as np

_CHUNK = 3  # sub-token length for the stub splitter


class ContextualEmbedder:
    """Interface: sub-tokenize units and return fixed vectors for them."""

    dim: int

    def subtokenize(self, unit: str) -> list[str]:
        raise NotImplementedError

    def encode(self, subtokens: list[str]) -> np.ndarray:
        """Vectors for a sub-token sequence, shape (len(subtokens), dim)."""
        raise NotImplementedError

    def unit_vector(self, unit: str) -> np.ndarray:
        """Mean of the unit's sub-token vectors, shape (dim,)."""
        subtokens = self.subtokenize(unit)
        if not subtokens:
            return np.zeros(self.dim)
        return self.encode(subtokens).mean(axis=0)

    def encode_sentence(self, tokens: list[str]) -> np.ndarray:
        """Per-token vectors, shape (len(tokens), dim)."""
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.unit_vector(t) for t in tokens])


class HashEmbedder(ContextualEmbedder):
    """Deterministic stub: every sub-token hashes to a fixed normal vector."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}
        self._unit_cache: dict[str, np.ndarray] = {}

    def subtokenize(self, unit: str) -> list[str]:
        out = []
        for word in unit.split():
            for i in range(0, len(word), _CHUNK):
                out.append(word[i : i + _CHUNK])
        return out

    def _vector(self, subtoken: str) -> np.ndarray:
        cached = self._cache.get(subtoken)
        if cached is None:
            digest = hashlib.md5(f"{self.seed}\x00{subtoken}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            cached = rng.standard_normal(self.dim)
            self._cache[subtoken] = cached
        return cached

    def encode(self, subtokens: list[str]) -> np.ndarray:
        if not subtokens:
            return np.zeros((0, self.dim))
        return np.stack([self._vector(s) for s in subtokens])

    def unit_vector(self, unit: str) -> np.ndarray:
        cached = self._unit_cache.get(unit)
        if cached is None:
            cached = super().unit_vector(unit)
            self._unit_cache[unit] = cached
        return cached


class FileVectorEmbedder(ContextualEmbedder):
    """Precomputed vectors loaded from an .npz with arrays units/vectors.

    Units are looked up whole (no sub-word splitting); unknown units map
    to the zero vector.
    """

    def __init__(self, path: str):
        data = np.load(path, allow_pickle=False)
        units = [str(u) for u in data["units"]]
        vectors = np.asarray(data["vectors"], dtype=np.float64)
        if vectors.ndim != 2 or len(units) != vectors.shape[0]:
            raise ValueError(f"{path}: expected units (n,) aligned with vectors (n, dim)")
        self.dim = int(vectors.shape[1])
        self._table = {u: vectors[i] for i, u in enumerate(units)}

    def subtokenize(self, unit: str) -> list[str]:
        return [unit]

    def encode(self, subtokens: list[str]) -> np.ndarray:
        if not subtokens:
            return np.zeros((0, self.dim))
        return np.stack([self._table.get(s, np.zeros(self.dim)) for s in subtokens])
