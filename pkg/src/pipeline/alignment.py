"""
Five-point face alignment.

A least-squares similarity transform (rotation, uniform scale, translation)
maps detected landmarks onto the alignment template; the source image is
warped with bilinear sampling into the template's square output.
"""
from typing import Optional, Tuple

import cv2
import numpy as np

from ..models.face_sample import LandmarkSet, validate_image
from ..models.tracking import AlignmentTemplate
from .tracker import PipelineError

# Ratio of the minor to major principal spread below which points count as collinear
COLLINEARITY_TOLERANCE = 1e-6


class AlignmentError(PipelineError):
    """Raised for degenerate landmark configurations."""
    pass


def estimate_similarity(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    Least-squares similarity transform mapping `source` points onto `target`.

    Returns:
        2x3 affine matrix [s*R | t]

    Raises:
        AlignmentError: If the source points are coincident or collinear
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape or source.ndim != 2 or source.shape[1] != 2:
        raise AlignmentError(f"point sets must both be (N, 2), got {source.shape} and {target.shape}")

    mean_source = source.mean(axis=0)
    mean_target = target.mean(axis=0)
    centred_source = source - mean_source
    centred_target = target - mean_target

    spread = np.linalg.svd(centred_source, compute_uv=False)
    if spread[0] == 0 or spread[-1] / spread[0] < COLLINEARITY_TOLERANCE:
        raise AlignmentError("landmarks are collinear or coincident")

    n = source.shape[0]
    sigma_source = np.sum(centred_source ** 2) / n
    covariance = centred_target.T @ centred_source / n
    u, d, vt = np.linalg.svd(covariance)
    s = np.eye(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[1, 1] = -1.0
    rotation = u @ s @ vt
    scale = np.trace(np.diag(d) @ s) / sigma_source
    translation = mean_target - scale * rotation @ mean_source
    return np.hstack([scale * rotation, translation[:, None]])


def transform_points(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ matrix[:, :2].T + matrix[:, 2]


def rotation_degrees(matrix: np.ndarray) -> float:
    """Rotation angle of a similarity matrix in image coordinates (y down)."""
    return float(np.degrees(np.arctan2(matrix[1, 0], matrix[0, 0])))


def align_face(image: np.ndarray, landmarks: LandmarkSet,
               template: Optional[AlignmentTemplate] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Warp the face described by `landmarks` onto the template.

    Returns:
        (aligned output_size x output_size image, 2x3 transform)

    Raises:
        AlignmentError: If the landmarks are degenerate
    """
    validate_image(image)
    template = template or AlignmentTemplate()
    matrix = estimate_similarity(landmarks.to_array(), template.to_array())
    size = template.output_size
    aligned = cv2.warpAffine(image, matrix, (size, size), flags=cv2.INTER_LINEAR,
                             borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    return aligned, matrix
