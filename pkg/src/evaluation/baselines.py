"""
Classical image-quality baselines.

These are simple approximations used to produce FQA-vs-baseline tables, not
reproductions of any published metric.
"""
from typing import Callable, Dict

import cv2
import numpy as np

from ..models.face_sample import validate_image


def _gray(image: np.ndarray) -> np.ndarray:
    validate_image(image)
    if image.ndim == 2:
        return image.astype(np.float64)
    return cv2.cvtColor(image, cv2.COLOR_RGB2GRAY).astype(np.float64)


def baseline_sharpness(image: np.ndarray) -> float:
    """Variance of the 3x3 Laplacian response over mean intensity squared (0 for black images)."""
    gray = _gray(image)
    mean = gray.mean()
    if mean == 0:
        return 0.0
    laplacian = cv2.Laplacian(gray, cv2.CV_64F, ksize=1)
    return float(laplacian.var() / mean ** 2)


def baseline_contrast(image: np.ndarray) -> float:
    """RMS intensity deviation / 128."""
    return float(_gray(image).std() / 128.0)


BASELINES: Dict[str, Callable[[np.ndarray], float]] = {
    'sharpness': baseline_sharpness,
    'contrast': baseline_contrast,
}
