"""
Recognition module: pluggable backends, similarity scoring and training label generation.
"""

from .backends import (
    EMBEDDING_SIZE,
    EmbeddingVector,
    RecognitionBackend,
    RecognitionError,
    DegenerateEmbeddingError,
    SyntheticOracleEmbedder,
    DistanceBackend,
    PrecomputedEmbeddingBackend,
    normalize_embedding,
    oracle_embed
)

from .scoring import (
    GalleryEntry,
    BestMatch,
    cosine_similarity,
    normalize_score,
    best_match_score,
    self_similarity,
    pair_similarity
)

from .labels import (
    LABEL_MODES,
    LabelRow,
    LabelTable,
    LabelGenerator,
    distorted_key,
    training_suffix,
    generate_labels,
    materialize_crops,
    training_records
)

__all__ = [
    'EMBEDDING_SIZE',
    'EmbeddingVector',
    'RecognitionBackend',
    'RecognitionError',
    'DegenerateEmbeddingError',
    'SyntheticOracleEmbedder',
    'DistanceBackend',
    'PrecomputedEmbeddingBackend',
    'normalize_embedding',
    'oracle_embed',
    'GalleryEntry',
    'BestMatch',
    'cosine_similarity',
    'normalize_score',
    'best_match_score',
    'self_similarity',
    'pair_similarity',
    'LABEL_MODES',
    'LabelRow',
    'LabelTable',
    'LabelGenerator',
    'distorted_key',
    'training_suffix',
    'generate_labels',
    'materialize_crops',
    'training_records'
]
