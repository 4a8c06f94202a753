# Training distortions and evaluation attacks
from .distortions import (
    AugmentationError,
    TRAINING_MODES,
    EVAL_ATTACKS,
    derive_seed,
    as_generator,
    normalize_mode,
    rotate,
    kernel_sigma,
    eval_kernel_size,
    gaussian_blur,
    rectangle_polygon,
    convex_hull,
    polygon_area,
    polygon_mask,
    paint_convex_polygon,
    occlude_rect,
    occlude_quad,
    rotate_random,
    gaussian_blur_random,
    occlude_random_rect,
    occlude_random_quad,
    apply_training_augmentation,
    replay_augmentation,
    make_eval_attack
)

__all__ = [
    'AugmentationError',
    'TRAINING_MODES',
    'EVAL_ATTACKS',
    'derive_seed',
    'as_generator',
    'normalize_mode',
    'rotate',
    'kernel_sigma',
    'eval_kernel_size',
    'gaussian_blur',
    'rectangle_polygon',
    'convex_hull',
    'polygon_area',
    'polygon_mask',
    'paint_convex_polygon',
    'occlude_rect',
    'occlude_quad',
    'rotate_random',
    'gaussian_blur_random',
    'occlude_random_rect',
    'occlude_random_quad',
    'apply_training_augmentation',
    'replay_augmentation',
    'make_eval_attack'
]
