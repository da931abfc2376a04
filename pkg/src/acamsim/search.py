"""Parallel similarity search over an ACAM array, plus digital baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import AcamArray, match_matrix
from .errors import DegenerateInputError, ParseError


@dataclass(frozen=True, eq=False)
class SimilarityResult:
    scores: np.ndarray
    best_row: int
    tie_policy_applied: bool = False

    def to_dict(self) -> dict:
        scores = self.scores.tolist()
        if np.issubdtype(self.scores.dtype, np.integer):
            scores = [int(s) for s in scores]
        return {"scores": scores, "best_row": self.best_row}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def argmax_lowest(scores) -> tuple[int, bool]:
    """Index of the maximum score, lowest index on ties, and whether a tie occurred."""
    scores = np.asarray(scores)
    if scores.size == 0:
        raise ValueError("no rows to rank")
    best = int(np.argmax(scores))  # numpy returns the first maximum
    tied = int(np.count_nonzero(scores == scores[best])) > 1
    return best, tied


def analog_hamming(array: AcamArray, query) -> SimilarityResult:
    """Generalized Hamming similarity: per row, count query elements inside their windows."""
    scores = match_matrix(array, query).sum(axis=1).astype(np.int64)
    best, tied = argmax_lowest(scores)
    return SimilarityResult(scores, best, tied)


def digital_hamming(stored, query) -> int:
    """Number of positions where the two symbol vectors agree."""
    stored = np.asarray(stored)
    query = np.asarray(query)
    if stored.shape != query.shape:
        raise ValueError(f"length mismatch: {stored.shape} vs {query.shape}")
    return int(np.count_nonzero(stored == query))


def cosine_similarity(s, q) -> float:
    s = np.asarray(s, dtype=float)
    q = np.asarray(q, dtype=float)
    if s.shape != q.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {q.shape}")
    ns, nq = np.linalg.norm(s), np.linalg.norm(q)
    if ns == 0 or nq == 0:
        raise DegenerateInputError("cosine similarity undefined for a zero vector")
    return float(np.clip(s @ q / (ns * nq), -1.0, 1.0))


def cosine_search(support, query) -> SimilarityResult:
    """Cosine similarity of ``query`` against every row of ``support``."""
    support = np.atleast_2d(np.asarray(support, dtype=float))
    query = np.asarray(query, dtype=float)
    if support.shape[1] != query.shape[0]:
        raise ValueError(f"query has {query.shape[0]} elements, expected d={support.shape[1]}")
    norms = np.linalg.norm(support, axis=1)
    qn = np.linalg.norm(query)
    if qn == 0 or np.any(norms == 0):
        raise DegenerateInputError("cosine similarity undefined for a zero vector")
    scores = np.clip(support @ query / (norms * qn), -1.0, 1.0)
    best, tied = argmax_lowest(scores)
    return SimilarityResult(scores, best, tied)


def parse_query_lines(text: str, path=None) -> list[np.ndarray]:
    """One comma-separated query vector per non-blank line."""
    queries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            queries.append(np.array([float(v) for v in line.split(",")]))
        except ValueError:
            raise ParseError(f"non-numeric query value in {line!r}", path=path, line=lineno) from None
    return queries
