"""Text-embedding backends and the cosine-similarity candidate filter."""

from __future__ import annotations

import hashlib
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np
import requests

from .errors import DependencyUnavailableError, ValidationError
from .models import PaperEvidence


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> np.ndarray: ...

    @property
    def identity(self) -> str: ...


class RemoteEmbeddingBackend:
    """HTTPS embedding endpoint: text in, fixed-width vector out."""

    def __init__(
        self,
        base_url: str,
        model: str,
        session: Optional[requests.Session] = None,
        timeout: float = 30.0,
        api_key: str = "",
    ):
        self._base = base_url
        self._model = model
        self._session = session or requests.Session()
        self._timeout = timeout
        self._api_key = api_key

    @property
    def identity(self) -> str:
        return f"remote_embedding:{self._model}"

    def embed(self, text: str) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._session.post(
                self._base,
                json={"model": self._model, "input": text},
                headers=headers,
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise DependencyUnavailableError(f"embedding endpoint failed: {exc}") from exc
        if response.status_code != 200:
            raise DependencyUnavailableError(
                f"embedding endpoint returned HTTP {response.status_code}"
            )
        payload = response.json()
        vector = payload["data"][0]["embedding"]
        return np.asarray(vector, dtype=np.float64)


class FixtureEmbeddingBackend:
    """Deterministic offline embeddings.

    Explicit vectors win; unknown texts fall back to a hash-seeded random unit
    vector, so any fixture run embeds reproducibly without enumerating texts.
    """

    def __init__(self, vectors: Optional[Mapping[str, Sequence[float]]] = None,
                 dimension: int = 16):
        self._vectors = {k: np.asarray(v, dtype=np.float64) for k, v in (vectors or {}).items()}
        self._dimension = dimension

    @property
    def identity(self) -> str:
        return f"fixture_embedding:dim{self._dimension}"

    def embed(self, text: str) -> np.ndarray:
        known = self._vectors.get(text)
        if known is not None:
            return known
        seed = int.from_bytes(
            hashlib.sha256(text.encode("utf-8")).digest()[:8], "big"
        )
        rng = np.random.default_rng(seed)
        vector = rng.standard_normal(self._dimension)
        return vector / np.linalg.norm(vector)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Scale-invariant similarity; zero vectors compare as 0."""
    norm = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    return float(np.dot(a, b)) / norm


def embedding_filter(
    idea_text: str,
    candidates: Sequence[PaperEvidence],
    backend: EmbeddingBackend,
    n: int,
) -> list[PaperEvidence]:
    """Top-n candidates by cosine similarity of abstract to the idea.

    Descending similarity; exact ties break by ascending paper_id.
    """
    if n < 1:
        raise ValidationError("embedding filter size n must be >= 1")
    for candidate in candidates:
        if not candidate.abstract:
            raise ValidationError(
                f"candidate {candidate.paper_id} lacks an abstract for embedding"
            )
    if not candidates:
        return []
    idea_vector = backend.embed(idea_text)
    scored = [
        (cosine_similarity(backend.embed(c.abstract), idea_vector), c)
        for c in candidates
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1].paper_id))
    return [c for _, c in scored[:n]]


def embedding_rank(
    idea_text: str,
    candidates: Sequence[PaperEvidence],
    backend: EmbeddingBackend,
) -> dict[str, int]:
    """Rank position (0 = most similar) per paper_id over all candidates."""
    ranked = embedding_filter(idea_text, candidates, backend, max(len(candidates), 1))
    return {c.paper_id: i for i, c in enumerate(ranked)}
