"""Word-vector tables and the cosine nearest-unique-word search.

The table format is word2vec-style text: a "<count> <dim>" header, then one
"<word> <f1> ... <fdim>" row per word. The reference nearest-neighbor path
is a brute-force scan over cosine(); a pre-normalized dot-product fast path
is provided and must agree with the scan (vocabularies here stay well under
~1e5 words, so nothing fancier is warranted).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmbeddingFormatError, MissingVectorError, NoCandidatesError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimilarityResult:
    word: str
    similarity: float


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    _norm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def unit(self, word: str) -> np.ndarray:
        """L2-normalized vector for the fast path, cached per word."""
        cached = self._norm_cache.get(word)
        if cached is None:
            v = self.vectors[word]
            cached = v / np.linalg.norm(v)
            self._norm_cache[word] = cached
        return cached


def load_table(path: str | Path) -> EmbeddingTable:
    """Load an embedding file, validating the header count and per-row dimension."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError("header must be '<count> <dim>'", line_number=1)
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError(str(exc), line_number=1) from exc
        if count < 0 or dim <= 0:
            raise EmbeddingFormatError(f"bad header values {count} {dim}", line_number=1)
        rows = 0
        for number, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            word = fields[0]
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"expected {dim} components for {word!r}, got {len(fields) - 1}",
                    line_number=number)
            try:
                vector = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(str(exc), line_number=number) from exc
            if not np.all(np.isfinite(vector)):
                raise EmbeddingFormatError(f"non-finite component for {word!r}", line_number=number)
            if not np.any(vector):
                raise EmbeddingFormatError(f"zero vector for {word!r}", line_number=number)
            if word in vectors:
                logger.warning("duplicate word %r in %s; last row wins", word, path)
            else:
                rows += 1
            vectors[word] = vector
        if rows != count:
            raise EmbeddingFormatError(f"header promised {count} entries, file has {rows}")
    return EmbeddingTable(dim, vectors)


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write the table back out; values survive a round-trip to within 1e-6."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word, vector in table.vectors.items():
            fh.write(word + " " + " ".join(f"{v:.8g}" for v in vector) + "\n")


def cosine(a: np.ndarray | Iterable[float], b: np.ndarray | Iterable[float]) -> float:
    """a.b / (|a||b|); raises on zero-norm or mismatched-length input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def nearest_unique(word: str, candidates: Iterable[str], table: EmbeddingTable) -> SimilarityResult:
    """Candidate with the highest cosine similarity to `word`.

    Candidates absent from the table (and the query word itself) are ignored;
    ties break toward the lexicographically smallest candidate. Raises
    MissingVectorError / NoCandidatesError so callers can skip-and-log.
    """
    if word not in table:
        raise MissingVectorError(f"no vector for query word {word!r}")
    query = table.vectors[word]
    best: SimilarityResult | None = None
    for candidate in sorted(set(candidates)):
        if candidate == word or candidate not in table:
            continue
        similarity = cosine(query, table.vectors[candidate])
        if best is None or similarity > best.similarity:
            best = SimilarityResult(candidate, similarity)
    if best is None:
        raise NoCandidatesError(f"no candidate for {word!r} has a vector")
    return best


def nearest_unique_fast(word: str, candidates: Iterable[str], table: EmbeddingTable) -> SimilarityResult:
    """Pre-normalized dot-product variant of nearest_unique; same contract."""
    if word not in table:
        raise MissingVectorError(f"no vector for query word {word!r}")
    usable = [c for c in sorted(set(candidates)) if c != word and c in table]
    if not usable:
        raise NoCandidatesError(f"no candidate for {word!r} has a vector")
    query = table.unit(word)
    scores = np.array([float(np.dot(query, table.unit(c))) for c in usable])
    index = int(np.argmax(scores))  # argmax returns the first max: lexicographic tie-break
    return SimilarityResult(usable[index], float(scores[index]))


def similarity_is_sane(value: float, eps: float = 1e-9) -> bool:
    return -1.0 - eps <= value <= 1.0 + eps and math.isfinite(value)
