"""
Face sample data models with validation methods.

Images are numpy arrays of shape (height, width, 3), dtype uint8, RGB order,
row-major. Boxes are (x, y, w, h) in pixels with the top-left corner at (x, y).
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple
import math

import numpy as np

# Alias used in signatures; an ImageBuffer is a (H, W, 3) uint8 RGB array.
ImageBuffer = np.ndarray

LANDMARK_NAMES = ('left_eye', 'right_eye', 'nose', 'left_mouth', 'right_mouth')


def validate_image(image: Any) -> ImageBuffer:
    """
    Validate that an object is a well-formed image buffer.

    Args:
        image: Candidate image

    Returns:
        The same array

    Raises:
        ValueError: If the array is not (H, W, 3) uint8 with H, W >= 1
    """
    if not isinstance(image, np.ndarray):
        raise ValueError("image must be a numpy array")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"image must have shape (H, W, 3), got {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("image height and width must be >= 1")
    if image.dtype != np.uint8:
        raise ValueError(f"image dtype must be uint8, got {image.dtype}")
    return image


@dataclass(frozen=True)
class BoundingBox:
    """
    Axis-aligned face box.

    Attributes:
        x: Left edge in pixels
        y: Top edge in pixels
        w: Width in pixels
        h: Height in pixels
    """
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ('x', 'y', 'w', 'h'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"bbox {name} must be a finite number")
        if self.w <= 0 or self.h <= 0:
            raise ValueError("bbox w and h must be positive")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersects_image(self, width: int, height: int) -> bool:
        """True when the box overlaps the image rectangle with non-zero area."""
        return min(self.x2, width) > max(self.x, 0) and min(self.y2, height) > max(self.y, 0)

    def iou(self, other: 'BoundingBox') -> float:
        """Intersection over union with another box."""
        iw = max(0.0, min(self.x2, other.x2) - max(self.x, other.x))
        ih = max(0.0, min(self.y2, other.y2) - max(self.y, other.y))
        inter = iw * ih
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def to_list(self) -> List[float]:
        return [float(self.x), float(self.y), float(self.w), float(self.h)]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> 'BoundingBox':
        if len(values) != 4:
            raise ValueError(f"bbox requires 4 numbers, got {len(values)}")
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class LandmarkSet:
    """
    Five facial landmark points in pixel coordinates.

    Order: left eye, right eye, nose tip, left mouth corner, right mouth corner.
    """
    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(self.points) != 5:
            raise ValueError(f"landmarks must contain exactly 5 points, got {len(self.points)}")
        for point in self.points:
            if len(point) != 2 or not all(math.isfinite(float(c)) for c in point):
                raise ValueError("landmark points must be finite (x, y) pairs")

    def to_array(self) -> np.ndarray:
        """Return a (5, 2) float64 array."""
        return np.asarray(self.points, dtype=np.float64)

    def to_flat(self) -> List[float]:
        return [float(c) for point in self.points for c in point]

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'LandmarkSet':
        array = np.asarray(array, dtype=np.float64).reshape(-1, 2)
        return cls(tuple((float(x), float(y)) for x, y in array))

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> 'LandmarkSet':
        if len(values) != 10:
            raise ValueError(f"landmarks require 10 numbers, got {len(values)}")
        return cls.from_array(np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class FaceSample:
    """
    A face image with identity and optional annotations; the unit of training
    and evaluation.

    Attributes:
        image: RGB image buffer
        identity: Opaque identity label
        source_id: Identifier of the originating record (manifest path)
        bbox: Optional face box in image coordinates
        landmarks: Optional five-point landmarks in image coordinates
    """
    image: ImageBuffer
    identity: str
    source_id: str
    bbox: Optional[BoundingBox] = None
    landmarks: Optional[LandmarkSet] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        validate_image(self.image)
        if not self.identity or not isinstance(self.identity, str):
            raise ValueError("identity must be a non-empty string")
        if not isinstance(self.source_id, str):
            raise ValueError("source_id must be a string")
        if self.bbox is not None:
            height, width = self.image.shape[:2]
            if not self.bbox.intersects_image(width, height):
                raise ValueError("bbox must intersect the image")

    @property
    def height(self) -> int:
        return int(self.image.shape[0])

    @property
    def width(self) -> int:
        return int(self.image.shape[1])

    def describe(self) -> Dict[str, Any]:
        """Small JSON-friendly summary (no pixel data)."""
        return {
            'source_id': self.source_id,
            'identity': self.identity,
            'height': self.height,
            'width': self.width,
            'bbox': self.bbox.to_list() if self.bbox else None,
            'landmarks': self.landmarks.to_flat() if self.landmarks else None
        }
