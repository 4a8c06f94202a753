"""
Score data models: recognition similarity scores and predicted quality.
"""
from dataclasses import dataclass
from enum import Enum
import math


class Polarity(str, Enum):
    """Orientation of a recognition score."""
    SIMILARITY = 'similarity_high_is_better'
    DISTANCE = 'distance_low_is_better'


@dataclass(frozen=True)
class SimilarityScore:
    """
    Recognition score with its polarity.

    Attributes:
        value: Raw score (cosine similarity or distance)
        polarity: Whether higher or lower values are better
    """
    value: float
    polarity: Polarity = Polarity.SIMILARITY

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("score value must be finite")
        if self.polarity == Polarity.SIMILARITY and not (-1.0 - 1e-9 <= self.value <= 1.0 + 1e-9):
            raise ValueError("cosine similarity must be between -1 and 1")
        if self.polarity == Polarity.DISTANCE and self.value < 0:
            raise ValueError("distance must be non-negative")


@dataclass(frozen=True)
class QualityScore:
    """
    Predicted face quality. The regression output is unclamped; `clamped`
    gives the [0, 1] view used for reporting.
    """
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("quality value must be finite")

    @property
    def clamped(self) -> float:
        return min(1.0, max(0.0, self.value))
