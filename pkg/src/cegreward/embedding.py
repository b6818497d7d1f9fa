"""Embedding providers and vector math for soft concept matching.

Vectors are plain 1-D float64 numpy arrays with a fixed per-provider
dimension. Every provider embeds the *normalized* form of its input text,
which is what makes the read-through cache (keyed by normalized text)
transparent to scoring.
"""

from __future__ import annotations

import abc
import hashlib
import os
import tempfile
import threading
import time
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .errors import DimensionMismatch, ProviderUnavailable, ZeroVector
from .graph import normalize_concept

__all__ = [
    "cosine_similarity",
    "hash_embed",
    "EmbeddingProvider",
    "HashEmbeddingProvider",
    "DiscreteMatchProvider",
    "HttpEmbeddingProvider",
    "CachedProvider",
]


def as_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("embedding entries must be finite")
    return arr


def cosine_similarity(u, v) -> float:
    """dot(u, v) / (|u| * |v|), clamped to [-1, 1] against rounding."""
    u, v = as_vector(u), as_vector(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"dimensions differ: {u.shape[0]} vs {v.shape[0]}")
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity is undefined for an all-zero vector")
    return min(1.0, max(-1.0, float(u @ v) / (nu * nv)))


# Boundary marks for trigrams; control characters cannot occur in
# normalized concept text.
_BOUNDS = ("\x02", "\x03")


def _bucket(trigram: str, dimension: int) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dimension


def hash_embed(text: str, dimension: int = 256) -> np.ndarray:
    """Character-trigram hashing into `dimension` buckets, L2-normalized.

    Deterministic across runs and platforms (keyed blake2b, not the salted
    builtin hash). Counts are unsigned, so any nonempty text has norm > 0.
    """
    if dimension < 8:
        raise ValueError(f"dimension must be >= 8, got {dimension}")
    if not text:
        raise ZeroVector("cannot embed empty text")
    padded = _BOUNDS[0] + text + _BOUNDS[1]
    vec = np.zeros(dimension, dtype=np.float64)
    for i in range(len(padded) - 2):
        vec[_bucket(padded[i : i + 3], dimension)] += 1.0
    return vec / np.linalg.norm(vec)


class EmbeddingProvider(abc.ABC):
    """Contract: deterministic `embed` over normalized text, fixed dimension.

    `similarity_matrix` defaults to pairwise cosine of embeddings; test
    providers may override it with an exact definition.
    """

    name: str
    dimension: int

    @abc.abstractmethod
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return an array of shape (len(texts), dimension)."""

    def similarity_matrix(self, gen_elements: Sequence[str], ref_elements: Sequence[str]) -> np.ndarray:
        gen = list(gen_elements)
        ref = list(ref_elements)
        if not gen or not ref:
            return np.zeros((len(gen), len(ref)), dtype=np.float64)
        vectors = self.embed(gen + ref)
        gen_vecs, ref_vecs = vectors[: len(gen)], vectors[len(gen) :]
        norms_g = [float(np.linalg.norm(v)) for v in gen_vecs]
        norms_r = [float(np.linalg.norm(v)) for v in ref_vecs]
        if 0.0 in norms_g or 0.0 in norms_r:
            raise ZeroVector("provider returned an all-zero embedding")
        # Entry (i, j) is computed from the two vectors alone, never through
        # a batched matmul: BLAS reorders its reduction with the matrix
        # shape, and a last-ulp wobble would let a score drop when the
        # candidate set grows. Pairwise 1-D dots are shape-independent.
        sims = np.empty((len(gen), len(ref)), dtype=np.float64)
        for i, (u, nu) in enumerate(zip(gen_vecs, norms_g)):
            for j, (v, nv) in enumerate(zip(ref_vecs, norms_r)):
                sims[i, j] = min(1.0, max(-1.0, float(u @ v) / (nu * nv)))
        return sims


class HashEmbeddingProvider(EmbeddingProvider):
    """Offline fallback provider built on hash_embed."""

    def __init__(self, dimension: int = 256):
        if dimension < 8:
            raise ValueError(f"dimension must be >= 8, got {dimension}")
        self.name = "hash"
        self.dimension = dimension

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        rows = [hash_embed(normalize_concept(t), self.dimension) for t in texts]
        return np.stack(rows) if rows else np.zeros((0, self.dimension))


class DiscreteMatchProvider(EmbeddingProvider):
    """Test provider: similarity is 1 on normalized equality, else 0.

    Similarities are computed directly on strings so the 0/1 semantics are
    exact. `embed` exists to satisfy the provider contract; scoring never
    consults it (a hash collision there must not corrupt the oracle).
    """

    def __init__(self, dimension: int = 64):
        if dimension < 8:
            raise ValueError(f"dimension must be >= 8, got {dimension}")
        self.name = "discrete"
        self.dimension = dimension

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i, _bucket(normalize_concept(text), self.dimension)] = 1.0
        return out

    def similarity_matrix(self, gen_elements: Sequence[str], ref_elements: Sequence[str]) -> np.ndarray:
        gen = [normalize_concept(t) for t in gen_elements]
        ref = [normalize_concept(t) for t in ref_elements]
        out = np.zeros((len(gen), len(ref)), dtype=np.float64)
        for i, g in enumerate(gen):
            for j, r in enumerate(ref):
                if g == r:
                    out[i, j] = 1.0
        return out


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for the common embeddings-API shape.

    POSTs {"model": ..., "input": [...]} and expects
    {"data": [{"embedding": [...]}, ...]} in input order. Connection
    problems and malformed replies raise ProviderUnavailable.
    """

    def __init__(
        self,
        url: str,
        model: str,
        *,
        dimension: int | None = None,
        timeout_ms: int = 30_000,
        retries: int = 2,
        session: requests.Session | None = None,
    ):
        self.url = url
        self.model = model
        self.name = f"http:{model}"
        self.dimension = dimension or 0  # inferred from the first reply
        self.timeout_s = timeout_ms / 1000.0
        self.retries = retries
        self._session = session or requests.Session()

    @classmethod
    def from_env(cls, env: dict | None = None) -> "HttpEmbeddingProvider":
        env = os.environ if env is None else env
        url = env.get("EMBED_URL")
        if not url:
            raise ProviderUnavailable("EMBED_URL is not configured", retryable=False)
        return cls(
            url,
            env.get("EMBED_MODEL", "bge-large-en-v1.5"),
            timeout_ms=int(env.get("EMBED_TIMEOUT_MS", "30000")),
        )

    def _post(self, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                reply = self._session.post(self.url, json=payload, timeout=self.timeout_s)
                if reply.status_code != 200:
                    raise ProviderUnavailable(
                        f"embedding service returned HTTP {reply.status_code}"
                    )
                return reply.json()
            except ProviderUnavailable as err:
                last = err
            except (requests.RequestException, ValueError) as err:
                last = err
            if attempt < self.retries:
                time.sleep(0.05 * (attempt + 1))
        raise ProviderUnavailable(f"embedding service unreachable: {last}")

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        normalized = [normalize_concept(t) for t in texts]
        if not normalized:
            return np.zeros((0, max(self.dimension, 1)))
        body = self._post({"model": self.model, "input": normalized})
        try:
            rows = [as_vector(item["embedding"]) for item in body["data"]]
        except (KeyError, TypeError, ValueError) as err:
            raise ProviderUnavailable(
                f"malformed embedding reply: {err}", retryable=False
            ) from err
        if len(rows) != len(normalized):
            raise ProviderUnavailable(
                f"embedding count mismatch: sent {len(normalized)}, got {len(rows)}",
                retryable=False,
            )
        matrix = np.stack(rows)
        if self.dimension == 0:
            self.dimension = matrix.shape[1]
        if matrix.shape[1] != self.dimension:
            raise ProviderUnavailable(
                f"embedding dimension changed: {matrix.shape[1]} != {self.dimension}",
                retryable=False,
            )
        return matrix


class CachedProvider(EmbeddingProvider):
    """Read-through cache around another provider.

    In-memory always; additionally persists one .npy per text beneath
    cache_dir/<provider>/<dimension>/, keyed by the blake2b hash of the
    normalized text. Values are deterministic, so concurrent last-write-wins
    refreshes are harmless.
    """

    def __init__(self, inner: EmbeddingProvider, cache_dir: str | Path | None = None):
        self.inner = inner
        self.name = inner.name
        self.dimension = inner.dimension
        self._memory: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._base = None if cache_dir is None else Path(cache_dir)

    def _dir(self) -> Path | None:
        # dimension may be inferred lazily (http), so resolve on every use
        if self._base is None:
            return None
        safe_name = self.name.replace(":", "_").replace("/", "_")
        return self._base / safe_name / str(self.inner.dimension or self.dimension)

    def _path(self, key: str) -> Path:
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=16).hexdigest()
        directory = self._dir()
        assert directory is not None
        return directory / f"{digest}.npy"

    def _load_disk(self, key: str) -> np.ndarray | None:
        if self._base is None:
            return None
        path = self._path(key)
        if not path.exists():
            return None
        try:
            return np.load(path)
        except (OSError, ValueError):
            return None  # treat a torn write as a miss

    def _store_disk(self, key: str, vec: np.ndarray) -> None:
        directory = self._dir()
        if directory is None:
            return
        directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.save(fh, vec)
            os.replace(tmp, self._path(key))
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        keys = [normalize_concept(t) for t in texts]
        out: list[np.ndarray | None] = [None] * len(keys)
        misses: list[int] = []
        with self._lock:
            for i, key in enumerate(keys):
                hit = self._memory.get(key)
                if hit is None:
                    hit = self._load_disk(key)
                    if hit is not None:
                        self._memory[key] = hit
                if hit is not None:
                    out[i] = hit
                else:
                    misses.append(i)
        if misses:
            # one fetch per distinct missing text, preserving order
            distinct = list(dict.fromkeys(keys[i] for i in misses))
            fetched = self.inner.embed(distinct)
            by_key = dict(zip(distinct, fetched))
            with self._lock:
                for key, vec in by_key.items():
                    self._memory[key] = vec
                    self._store_disk(key, vec)
            for i in misses:
                out[i] = by_key[keys[i]]
        if self.dimension == 0:
            self.dimension = self.inner.dimension  # http providers infer lazily
        return np.stack(out) if out else np.zeros((0, max(self.dimension, 1)))
