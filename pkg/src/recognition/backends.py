"""
Recognition backends.

A backend turns an image into a 512-dim unit embedding and scores pairs of
embeddings with a declared polarity. The toolkit ships a deterministic
synthetic oracle, an adapter that exposes any similarity backend as a
distance backend, and a backend that serves precomputed embeddings from a
tensor archive. Real pretrained recognizers plug in by subclassing
RecognitionBackend around their inference engine.
"""
import logging
from abc import ABC, abstractmethod
from typing import Dict, Mapping, Optional

import cv2
import numpy as np

from ..models.face_sample import validate_image
from ..models.scores import Polarity, SimilarityScore
from ..storage.tensor_archive import read_archive

EMBEDDING_SIZE = 512
ORACLE_GRID = 16
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])
DEGENERATE_NORM = 1e-9

# Alias used in signatures; an EmbeddingVector is a (512,) float64 unit vector.
EmbeddingVector = np.ndarray


class RecognitionError(Exception):
    """Custom exception for recognition backend errors"""
    pass


class DegenerateEmbeddingError(RecognitionError):
    """The image carries no signal to embed (e.g. a constant image)"""
    pass


def normalize_embedding(values: np.ndarray, size: int = EMBEDDING_SIZE) -> EmbeddingVector:
    """
    L2-normalize and zero-pad to `size` components.

    Raises:
        DegenerateEmbeddingError: If the vector norm is (numerically) zero
        RecognitionError: If the vector is too long or not finite
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size > size:
        raise RecognitionError(f"embedding has {values.size} components, more than {size}")
    if not np.all(np.isfinite(values)):
        raise RecognitionError("embedding contains non-finite values")
    norm = float(np.linalg.norm(values))
    if norm < DEGENERATE_NORM:
        raise DegenerateEmbeddingError("degenerate embedding: zero-variance input")
    padded = np.zeros(size, dtype=np.float64)
    padded[:values.size] = values / norm
    return padded


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Dot product of unit vectors, clipped to [-1, 1]."""
    value = float(np.dot(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))
    return min(1.0, max(-1.0, value))


class RecognitionBackend(ABC):
    """
    Interface of a recognition backend.

    Implementations must be deterministic and safe for concurrent read-only use.
    """

    name: str = 'backend'

    @property
    def polarity(self) -> Polarity:
        return Polarity.SIMILARITY

    @abstractmethod
    def embed(self, image: np.ndarray, key: Optional[str] = None) -> EmbeddingVector:
        """
        Embed an image.

        Args:
            image: RGB image
            key: Stable reference of the image (sample id, or sample id plus
                a distortion suffix); backends that look embeddings up use it

        Returns:
            Unit-norm 512-dim embedding
        """

    def score(self, a: EmbeddingVector, b: EmbeddingVector) -> SimilarityScore:
        return SimilarityScore(cosine(a, b), Polarity.SIMILARITY)


class SyntheticOracleEmbedder(RecognitionBackend):
    """
    Deterministic stand-in recognizer.

    Grayscale (0.299 R + 0.587 G + 0.114 B), area-average resample to 16x16,
    flatten, subtract the mean, L2-normalize and zero-pad to 512.
    """

    name = 'oracle'

    def embed(self, image: np.ndarray, key: Optional[str] = None) -> EmbeddingVector:
        return oracle_embed(image)


def oracle_embed(image: np.ndarray) -> EmbeddingVector:
    """
    Oracle embedding of an RGB image.

    Raises:
        DegenerateEmbeddingError: If the image is constant
    """
    validate_image(image)
    gray = (image.astype(np.float64) @ GRAY_WEIGHTS).astype(np.float32)
    if float(gray.max()) == float(gray.min()):
        raise DegenerateEmbeddingError("degenerate embedding: constant image")
    small = cv2.resize(gray, (ORACLE_GRID, ORACLE_GRID), interpolation=cv2.INTER_AREA)
    values = small.astype(np.float64).reshape(-1)
    values = values - values.mean()
    return normalize_embedding(values)


class DistanceBackend(RecognitionBackend):
    """
    Exposes a similarity backend as a distance backend: d = 1 - s, lower is better.
    """

    def __init__(self, inner: RecognitionBackend, name: Optional[str] = None):
        if inner.polarity != Polarity.SIMILARITY:
            raise RecognitionError("DistanceBackend wraps similarity backends only")
        self.inner = inner
        self.name = name or f"{inner.name}_distance"

    @property
    def polarity(self) -> Polarity:
        return Polarity.DISTANCE

    def embed(self, image: np.ndarray, key: Optional[str] = None) -> EmbeddingVector:
        return self.inner.embed(image, key)

    def score(self, a: EmbeddingVector, b: EmbeddingVector) -> SimilarityScore:
        similarity = self.inner.score(a, b).value
        return SimilarityScore(max(0.0, 1.0 - similarity), Polarity.DISTANCE)


class PrecomputedEmbeddingBackend(RecognitionBackend):
    """
    Serves embeddings computed offline by an external recognizer.

    The tensor archive is keyed by sample id for undistorted images and by
    '<sample id>@<suffix>' for distorted ones (for example '@train' for a
    training augmentation, '@blur' for an evaluation attack).
    """

    def __init__(self, embeddings: Mapping[str, np.ndarray], name: str = 'precomputed'):
        self.name = name
        self.logger = logging.getLogger(__name__)
        self._embeddings: Dict[str, EmbeddingVector] = {}
        for key, values in embeddings.items():
            self._embeddings[key] = normalize_embedding(values)
        self.logger.info(f"Loaded {len(self._embeddings)} precomputed embeddings")

    @classmethod
    def from_archive(cls, path: str, name: str = 'precomputed') -> 'PrecomputedEmbeddingBackend':
        return cls(read_archive(path), name=name)

    def __contains__(self, key: str) -> bool:
        return key in self._embeddings

    def embed(self, image: np.ndarray, key: Optional[str] = None) -> EmbeddingVector:
        if key is None:
            raise RecognitionError("precomputed backend needs a sample key")
        if key not in self._embeddings:
            raise RecognitionError(f"no precomputed embedding for '{key}'")
        return self._embeddings[key]
