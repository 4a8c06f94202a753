"""
Seeded image distortions.

Training distortions (rotation, Gaussian blur with kernel-tied sigma,
rotated-rectangle occlusion) reproduce surveillance degradations; evaluation
attacks (Gaussian blur with a sampled sigma, four-point convex occlusion)
distort probes for the correlation harness. Every random op takes an explicit
numpy Generator so results depend only on (image, parameters, seed).
"""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import cv2
import numpy as np

from config.settings import EVALUATION_CONFIG
from ..models.augmentation_record import AppliedAugmentation, AugmentationSpec
from ..models.face_sample import validate_image

logger = logging.getLogger(__name__)

TRAINING_MODES = ('blur_only', 'rot_only', 'occ_only', 'bro')
MODE_ALIASES = {'blur': 'blur_only', 'rot': 'rot_only', 'occ': 'occ_only', 'bro': 'bro'}
EVAL_ATTACKS = ('none', 'blur', 'occlusion', 'blur_occ')

# Tolerance for the pixel-centre inside test and for degenerate polygons
_EDGE_EPS = 1e-9

RngLike = Union[int, np.random.Generator]


class AugmentationError(Exception):
    """Custom exception for augmentation errors"""
    pass


def derive_seed(global_seed: int, index: int) -> int:
    """Per-item seed: global seed XOR stable item index."""
    return int(global_seed) ^ int(index)


def as_generator(rng: RngLike) -> Tuple[np.random.Generator, Optional[int]]:
    """Accept a seed or a Generator; return the Generator and the seed if known."""
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    return rng, None


def normalize_mode(mode: str) -> str:
    """Map 'blur'/'rot'/'occ'/'bro' and the long names to a training mode."""
    if mode in TRAINING_MODES:
        return mode
    if mode in MODE_ALIASES:
        return MODE_ALIASES[mode]
    raise AugmentationError(f"Unknown augmentation mode: {mode}")


# ---------------------------------------------------------------------------
# Forced-parameter primitives
# ---------------------------------------------------------------------------

def rotate(image: np.ndarray, angle: float) -> np.ndarray:
    """
    Rotate about the image center by `angle` degrees (counter-clockwise),
    bilinear sampling, black outside the source.
    """
    if angle == 0:
        return image.copy()
    height, width = image.shape[:2]
    center = ((width - 1) / 2.0, (height - 1) / 2.0)
    matrix = cv2.getRotationMatrix2D(center, float(angle), 1.0)
    return cv2.warpAffine(
        image, matrix, (width, height),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=(0, 0, 0)
    )


def kernel_sigma(kernel_size: int) -> float:
    """Sigma tied to an odd kernel size: 0.3 * ((k - 1) * 0.5 - 1) + 0.8."""
    return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8


def eval_kernel_size(sigma: float) -> int:
    """Kernel size for an attack sigma: ceil(6 * sigma), bumped to odd."""
    k = int(math.ceil(6.0 * sigma))
    if k % 2 == 0:
        k += 1
    return max(k, 3)


def gaussian_blur(image: np.ndarray, kernel_size: int, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge replication."""
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise AugmentationError(f"kernel size must be odd and >= 3, got {kernel_size}")
    return cv2.GaussianBlur(
        image, (kernel_size, kernel_size),
        sigmaX=float(sigma), sigmaY=float(sigma),
        borderType=cv2.BORDER_REPLICATE
    )


def rectangle_polygon(cx: float, cy: float, w: float, h: float,
                      angle: float) -> np.ndarray:
    """Corners (4, 2) of a w x h rectangle centered at (cx, cy), rotated by `angle` degrees."""
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    half = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
    rotation = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    return half @ rotation.T + np.array([cx, cy])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices of a point set, in hull order, original float64 coordinates."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points) < 3:
        return points.copy()
    indices = cv2.convexHull(points.astype(np.float32), returnPoints=False)
    return points[np.asarray(indices).reshape(-1)]


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area."""
    if len(vertices) < 3:
        return 0.0
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_mask(height: int, width: int, vertices: Sequence[Sequence[float]]) -> np.ndarray:
    """
    Boolean mask of the pixels whose centres (x + 0.5, y + 0.5) lie inside or
    on the boundary of a convex polygon. Degenerate polygons cover nothing.
    """
    mask = np.zeros((height, width), dtype=bool)
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    area = polygon_area(vertices)
    if abs(area) < _EDGE_EPS:
        return mask

    x0 = max(0, int(math.floor(vertices[:, 0].min() - 0.5)))
    x1 = min(width, int(math.ceil(vertices[:, 0].max() + 0.5)))
    y0 = max(0, int(math.floor(vertices[:, 1].min() - 0.5)))
    y1 = min(height, int(math.ceil(vertices[:, 1].max() + 0.5)))
    if x1 <= x0 or y1 <= y0:
        return mask

    yy, xx = np.mgrid[y0:y1, x0:x1]
    px = xx + 0.5
    py = yy + 0.5
    inside = np.ones(px.shape, dtype=bool)
    orientation = 1.0 if area > 0 else -1.0
    for (ax, ay), (bx, by) in zip(vertices, np.roll(vertices, -1, axis=0)):
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside &= orientation * cross >= -_EDGE_EPS
    mask[y0:y1, x0:x1] = inside
    return mask


def paint_convex_polygon(image: np.ndarray, vertices: Sequence[Sequence[float]],
                         color: Sequence[int]) -> Tuple[np.ndarray, int]:
    """
    Fill a convex polygon with a solid color.

    Returns:
        (painted copy of the image, number of pixels painted)
    """
    output = image.copy()
    mask = polygon_mask(image.shape[0], image.shape[1], vertices)
    output[mask] = np.asarray(color, dtype=image.dtype)
    return output, int(mask.sum())


def occlude_rect(image: np.ndarray, cx: float, cy: float, w: float, h: float,
                 angle: float, color: Sequence[int]) -> Tuple[np.ndarray, AppliedAugmentation]:
    """Paint a rotated rectangle with fixed parameters."""
    polygon = rectangle_polygon(cx, cy, w, h, angle)
    output, painted = paint_convex_polygon(image, polygon, color)
    return output, AppliedAugmentation(
        occlusion_polygon=tuple((float(x), float(y)) for x, y in polygon),
        occluded_fraction=painted / float(image.shape[0] * image.shape[1]),
        occlusion_kind='rect',
        occlusion_color=tuple(int(c) for c in color)
    )


def occlude_quad(image: np.ndarray, points: np.ndarray,
                 color: Sequence[int]) -> Tuple[np.ndarray, AppliedAugmentation]:
    """Paint the convex hull of four points with fixed parameters."""
    hull = convex_hull(points)
    output, painted = paint_convex_polygon(image, hull, color)
    polygon = hull if painted or abs(polygon_area(hull)) >= _EDGE_EPS else np.empty((0, 2))
    return output, AppliedAugmentation(
        occlusion_polygon=tuple((float(x), float(y)) for x, y in polygon),
        occluded_fraction=painted / float(image.shape[0] * image.shape[1]),
        occlusion_kind='quad',
        occlusion_color=tuple(int(c) for c in color)
    )


# ---------------------------------------------------------------------------
# Random training distortions
# ---------------------------------------------------------------------------

def rotate_random(image: np.ndarray, spec: AugmentationSpec,
                  rng: np.random.Generator) -> Tuple[np.ndarray, AppliedAugmentation]:
    """Rotate by an angle drawn uniformly from spec.rotation_degrees."""
    validate_image(image)
    if image.shape[0] != image.shape[1]:
        raise AugmentationError(f"rotation expects a square crop, got {image.shape[1]}x{image.shape[0]}")
    low, high = spec.rotation_degrees
    angle = float(rng.uniform(low, high)) if high > low else float(low)
    return rotate(image, angle), AppliedAugmentation(rotation_angle=angle)


def gaussian_blur_random(image: np.ndarray, spec: AugmentationSpec,
                         rng: np.random.Generator) -> Tuple[np.ndarray, AppliedAugmentation]:
    """Blur with an odd kernel drawn uniformly from spec.blur_kernel_range."""
    validate_image(image)
    sizes = spec.kernel_sizes()
    k = int(sizes[int(rng.integers(0, len(sizes)))])
    sigma = kernel_sigma(k)
    return gaussian_blur(image, k, sigma), AppliedAugmentation(kernel_size=k, blur_sigma=sigma)


def occlude_random_rect(image: np.ndarray, spec: AugmentationSpec,
                        rng: np.random.Generator) -> Tuple[np.ndarray, AppliedAugmentation]:
    """
    Paint a randomly rotated rectangle whose area is at most
    spec.occlusion_max_area_fraction of the image.

    Area fraction is drawn from (0, f], aspect log-uniformly from [1/2, 2],
    angle from [0, 180), the center uniformly over the image and the fill
    color once per call.
    """
    validate_image(image)
    height, width = image.shape[:2]
    fraction = spec.occlusion_max_area_fraction * (1.0 - float(rng.random()))
    aspect = math.exp(float(rng.uniform(math.log(0.5), math.log(2.0))))
    area = fraction * width * height
    w = math.sqrt(area * aspect)
    h = math.sqrt(area / aspect)
    angle = float(rng.uniform(0.0, 180.0))
    cx = float(rng.uniform(0.0, width))
    cy = float(rng.uniform(0.0, height))
    color = rng.integers(0, 256, size=3)
    return occlude_rect(image, cx, cy, w, h, angle, color)


def occlude_random_quad(image: np.ndarray,
                        rng: np.random.Generator) -> Tuple[np.ndarray, AppliedAugmentation]:
    """Paint the convex hull of four uniformly drawn points (evaluation attacks only)."""
    validate_image(image)
    height, width = image.shape[:2]
    points = np.asarray(rng.uniform([0.0, 0.0], [width, height], size=(4, 2)), dtype=np.float64)
    color = rng.integers(0, 256, size=3)
    return occlude_quad(image, points, color)


def apply_training_augmentation(image: np.ndarray, spec: AugmentationSpec, mode: str,
                                rng: RngLike) -> Tuple[np.ndarray, AppliedAugmentation]:
    """
    Apply the training distortions of one mode.

    blur_only / rot_only / occ_only apply their single distortion with the
    spec's probability; bro draws rotation, blur and occlusion independently
    and applies them in that order.

    Args:
        image: RGB crop
        spec: Parameter ranges and probabilities
        mode: 'blur_only', 'rot_only', 'occ_only', 'bro' (or blur/rot/occ)
        rng: Generator, or an integer seed recorded in the result

    Returns:
        (distorted copy, record of everything applied)
    """
    mode = normalize_mode(mode)
    generator, seed = as_generator(rng)
    validate_image(image)

    steps = {
        'rot_only': ('rotation',),
        'blur_only': ('blur',),
        'occ_only': ('occlusion',),
        'bro': ('rotation', 'blur', 'occlusion'),
    }[mode]

    output = image.copy()
    record = AppliedAugmentation()
    for step in steps:
        if step == 'rotation':
            if spec.enable_rotation and generator.random() < spec.rotation_probability:
                output, applied = rotate_random(output, spec, generator)
                record = record.merge(applied)
        elif step == 'blur':
            if spec.enable_blur and generator.random() < spec.blur_probability:
                output, applied = gaussian_blur_random(output, spec, generator)
                record = record.merge(applied)
        else:
            if spec.enable_occlusion and generator.random() < spec.occlusion_probability:
                output, applied = occlude_random_rect(output, spec, generator)
                record = record.merge(applied)

    return output, AppliedAugmentation.from_dict(dict(record.to_dict(), seed=seed))


def replay_augmentation(image: np.ndarray, record: AppliedAugmentation) -> np.ndarray:
    """
    Re-apply a recorded augmentation (rotation, then blur, then occlusion)
    without drawing any random numbers.
    """
    output = image.copy()
    if record.rotation_angle != 0.0:
        output = rotate(output, record.rotation_angle)
    if record.kernel_size:
        output = gaussian_blur(output, record.kernel_size, record.blur_sigma)
    if record.occlusion_polygon and record.occlusion_color is not None:
        output, _ = paint_convex_polygon(output, record.occlusion_polygon, record.occlusion_color)
    return output


def make_eval_attack(image: np.ndarray, attack: str,
                     rng: RngLike,
                     sigma_range: Tuple[float, float] = EVALUATION_CONFIG['blur_sigma_range']
                     ) -> Tuple[np.ndarray, AppliedAugmentation]:
    """
    Distort an evaluation probe.

    'blur' draws sigma uniformly from sigma_range with kernel ceil(6 sigma)
    bumped to odd; 'occlusion' paints a four-point convex hull; 'blur_occ'
    applies blur then occlusion; 'none' returns an unchanged copy.

    Raises:
        AugmentationError: If the attack is unknown
    """
    if attack not in EVAL_ATTACKS:
        raise AugmentationError(f"Unknown attack: {attack}")
    generator, seed = as_generator(rng)
    validate_image(image)

    output = image.copy()
    record = AppliedAugmentation()
    if attack in ('blur', 'blur_occ'):
        sigma = float(generator.uniform(*sigma_range))
        k = eval_kernel_size(sigma)
        output = gaussian_blur(output, k, sigma)
        record = record.merge(AppliedAugmentation(kernel_size=k, blur_sigma=sigma))
    if attack in ('occlusion', 'blur_occ'):
        output, applied = occlude_random_quad(output, generator)
        record = record.merge(applied)

    return output, AppliedAugmentation.from_dict(dict(record.to_dict(), seed=seed))
