"""
Similarity scoring: cosine similarity, best match, self similarity and
polarity normalization.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..models.manifest import PairList
from ..models.scores import Polarity, SimilarityScore
from .backends import (
    EmbeddingVector,
    RecognitionBackend,
    RecognitionError,
    cosine,
)


@dataclass(frozen=True)
class GalleryEntry:
    """An undistorted gallery embedding."""
    sample_id: str
    identity: str
    embedding: EmbeddingVector


@dataclass(frozen=True)
class BestMatch:
    """
    Best gallery match of a probe.

    Attributes:
        score: Raw score in the backend's polarity
        sample_id: Matched gallery record
        identity: Matched identity (diagnostics)
    """
    score: SimilarityScore
    sample_id: str
    identity: str


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> SimilarityScore:
    """Cosine similarity of two unit embeddings."""
    return SimilarityScore(cosine(a, b), Polarity.SIMILARITY)


def normalize_score(score: SimilarityScore) -> float:
    """
    Map a score to the high-is-better orientation: similarities pass through,
    distances become -distance.
    """
    if score.polarity == Polarity.DISTANCE:
        return -score.value
    return score.value


def best_match_score(probe: EmbeddingVector, gallery: Sequence[GalleryEntry],
                     probe_source_id: str,
                     backend: Optional[RecognitionBackend] = None) -> BestMatch:
    """
    Best score of a probe over the gallery, excluding the probe's own source record.

    Args:
        probe: Probe embedding
        gallery: Undistorted gallery entries
        probe_source_id: Sample id of the probe's source record
        backend: Scoring backend (cosine similarity when None)

    Returns:
        BestMatch; the first entry wins ties

    Raises:
        RecognitionError: If no gallery entry remains after the exclusion
    """
    best: Optional[BestMatch] = None
    best_value = -np.inf
    for entry in gallery:
        if entry.sample_id == probe_source_id:
            continue
        score = backend.score(probe, entry.embedding) if backend else cosine_similarity(probe, entry.embedding)
        value = normalize_score(score)
        if value > best_value:
            best_value = value
            best = BestMatch(score=score, sample_id=entry.sample_id, identity=entry.identity)
    if best is None:
        raise RecognitionError(f"empty gallery for probe {probe_source_id}")
    return best


def self_similarity(backend: RecognitionBackend, original: np.ndarray, distorted: np.ndarray,
                    key: Optional[str] = None,
                    distorted_key: Optional[str] = None) -> SimilarityScore:
    """
    Score between the embeddings of an image and its distorted version.

    Errors from embed (e.g. DegenerateEmbeddingError) propagate.
    """
    return backend.score(
        backend.embed(original, key),
        backend.embed(distorted, distorted_key if distorted_key is not None else key)
    )


def pair_similarity(backend: RecognitionBackend, pairs: PairList,
                    embeddings: Dict[str, EmbeddingVector]) -> Dict[str, float]:
    """
    Mean normalized score over matched and mismatched verification pairs.

    Args:
        backend: Scoring backend
        pairs: Verification pairs
        embeddings: Sample id -> embedding (pairs with a missing side are skipped)

    Returns:
        {'matched': mean, 'mismatched': mean, 'matched_n': n, 'mismatched_n': n};
        means are NaN when a group is empty
    """
    groups: Dict[str, List[float]] = {'matched': [], 'mismatched': []}
    for pair in pairs.pairs:
        if pair.sample_ref_a not in embeddings or pair.sample_ref_b not in embeddings:
            continue
        score = backend.score(embeddings[pair.sample_ref_a], embeddings[pair.sample_ref_b])
        groups['matched' if pair.same_identity else 'mismatched'].append(normalize_score(score))
    result: Dict[str, float] = {}
    for name, values in groups.items():
        result[name] = float(np.mean(values)) if values else float('nan')
        result[f"{name}_n"] = len(values)
    return result
