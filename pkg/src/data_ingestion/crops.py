"""
Face crop extraction: margin expansion, clipping and bilinear resampling.
"""
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple
import math

import cv2
import numpy as np

from config.settings import CROP_CONFIG
from ..models.face_sample import BoundingBox, FaceSample, LandmarkSet, validate_image
from ..models.manifest import DatasetManifest, ManifestRecord
from .manifest_loader import load_face_sample


class CropError(Exception):
    """Custom exception for crop extraction errors"""
    pass


@dataclass(frozen=True)
class FaceCrop:
    """
    A resampled face crop.

    Attributes:
        image: output_size x output_size RGB crop
        region: Clipped source region the crop was taken from
        landmarks: Landmarks in crop coordinates, if the source had any
    """
    image: np.ndarray
    region: BoundingBox
    landmarks: Optional[LandmarkSet] = None


def expand_box(bbox: BoundingBox, margin: float) -> BoundingBox:
    """Grow a box by `margin` of its size on each side."""
    return BoundingBox(
        bbox.x - margin * bbox.w,
        bbox.y - margin * bbox.h,
        bbox.w * (1.0 + 2.0 * margin),
        bbox.h * (1.0 + 2.0 * margin)
    )


def crop_region(bbox: BoundingBox, margin: float, width: int, height: int) -> Tuple[int, int, int, int]:
    """
    Integer pixel region (x0, y0, x1, y1) of the margin-expanded box clipped
    to the image.

    Raises:
        CropError: If the expanded box does not overlap the image
    """
    if margin < 0:
        raise CropError("margin must be non-negative")
    expanded = expand_box(bbox, margin)
    x0 = max(0, int(math.floor(expanded.x)))
    y0 = max(0, int(math.floor(expanded.y)))
    x1 = min(width, int(math.ceil(expanded.x2)))
    y1 = min(height, int(math.ceil(expanded.y2)))
    if x1 <= x0 or y1 <= y0:
        raise CropError(f"bbox {bbox.to_list()} lies outside the {width}x{height} image")
    return x0, y0, x1, y1


def crop_image(image: np.ndarray, bbox: BoundingBox,
               output_size: int = CROP_CONFIG['output_size'],
               margin: float = CROP_CONFIG['margin'],
               landmarks: Optional[LandmarkSet] = None) -> FaceCrop:
    """
    Crop a face region and resample it to output_size x output_size.

    Args:
        image: RGB source image
        bbox: Face box in image coordinates
        output_size: Side of the square output
        margin: Fraction of the box size added on each side
        landmarks: Optional landmarks to carry into crop coordinates

    Returns:
        FaceCrop

    Raises:
        CropError: If the box is outside the image or the output size is invalid
    """
    validate_image(image)
    if output_size < 1:
        raise CropError("output_size must be >= 1")
    height, width = image.shape[:2]
    x0, y0, x1, y1 = crop_region(bbox, margin, width, height)

    region = image[y0:y1, x0:x1]
    resized = cv2.resize(region, (output_size, output_size), interpolation=cv2.INTER_LINEAR)

    crop_landmarks = None
    if landmarks is not None:
        scale = np.array([output_size / (x1 - x0), output_size / (y1 - y0)])
        points = (landmarks.to_array() - np.array([x0, y0], dtype=np.float64)) * scale
        crop_landmarks = LandmarkSet.from_array(points)

    return FaceCrop(
        image=np.ascontiguousarray(resized),
        region=BoundingBox(float(x0), float(y0), float(x1 - x0), float(y1 - y0)),
        landmarks=crop_landmarks
    )


def extract_face_crop(sample: FaceSample,
                      output_size: int = CROP_CONFIG['output_size'],
                      margin: float = CROP_CONFIG['margin']) -> FaceCrop:
    """Crop a FaceSample's annotated face, keeping landmarks in crop coordinates."""
    if sample.bbox is None:
        raise CropError(f"sample {sample.source_id} has no bbox")
    return crop_image(sample.image, sample.bbox, output_size, margin, sample.landmarks)


def crop_face(sample: FaceSample,
              output_size: int = CROP_CONFIG['output_size'],
              margin: float = CROP_CONFIG['margin']) -> np.ndarray:
    """
    Crop a FaceSample to an output_size x output_size image.

    Raises:
        CropError: If the sample has no bbox or the bbox is outside the image
    """
    return extract_face_crop(sample, output_size, margin).image


class CropProvider:
    """
    Produces face crops for manifest records, from in-memory samples when
    given, otherwise by reading images under the manifest root.
    """

    def __init__(self, manifest: DatasetManifest,
                 output_size: int = CROP_CONFIG['output_size'],
                 margin: float = CROP_CONFIG['margin'],
                 samples: Optional[Mapping[str, FaceSample]] = None):
        self.manifest = manifest
        self.output_size = output_size
        self.margin = margin
        self.samples = samples or {}

    def sample(self, record: ManifestRecord) -> FaceSample:
        if record.sample_id in self.samples:
            return self.samples[record.sample_id]
        return load_face_sample(record, self.manifest.root)

    def crop(self, record: ManifestRecord) -> FaceCrop:
        """
        Raises:
            ManifestError: If the image cannot be read
            CropError: If the record's box is outside its image
        """
        return extract_face_crop(self.sample(record), self.output_size, self.margin)
