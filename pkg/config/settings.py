"""
Configuration settings for the face quality assessment toolkit
"""
import os

# Reproducibility
DEFAULT_SEED = int(os.environ.get('FQA_SEED', '0'))

# Parallelism cap for per-item fan-out (label generation, attack sweeps)
NUM_WORKERS = max(1, int(os.environ.get('FQA_NUM_WORKERS', str(os.cpu_count() or 1))))

LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

# Output folder structure (relative to --out)
OUTPUT_FOLDERS = {
    'augment': 'augment/',
    'augmented_crops': 'augment/crops/',
    'train': 'train/',
    'eval': 'eval/',
    'pipeline': 'pipeline/',
    'pipeline_crops': 'pipeline/crops/',
    'synthetic': 'synthetic/'
}

# Crop extraction
CROP_CONFIG = {
    'output_size': int(os.environ.get('FQA_CROP_SIZE', '112')),
    'margin': float(os.environ.get('FQA_CROP_MARGIN', '0.1'))
}

# Training augmentation (surveillance-like distortions)
AUGMENTATION_CONFIG = {
    'rotation_degrees': (-15.0, 15.0),
    'blur_kernel_range': (3, 21),
    'occlusion_max_area_fraction': 0.25,
    'rotation_probability': 0.5,
    'blur_probability': 0.5,
    'occlusion_probability': 0.5,
    'draws_per_sample': int(os.environ.get('FQA_DRAWS_PER_SAMPLE', '8')),
    'mode': os.environ.get('FQA_AUGMENT_MODE', 'bro')
}

# Quality head training
TRAINING_CONFIG = {
    'batch_size': int(os.environ.get('FQA_BATCH_SIZE', '128')),
    'learning_rate': float(os.environ.get('FQA_LEARNING_RATE', '0.01')),
    'epochs': int(os.environ.get('FQA_EPOCHS', '16')),
    'lr_milestones': (8, 12),
    'lr_gamma': 0.1,
    'weight_decay': 1e-4,
    'ridge_lambda': 1e-3
}

# Attack evaluation
EVALUATION_CONFIG = {
    'attacks': ['blur', 'occlusion', 'blur_occ'],
    'variants': ['blur', 'rot', 'occ', 'bro'],
    'blur_sigma_range': (1.0, 5.0),
    'eval_fraction': 0.2,
    'report_float_precision': 6
}

# Edge pipeline simulation
PIPELINE_CONFIG = {
    'iou_threshold': float(os.environ.get('FQA_IOU_THRESHOLD', '0.3')),
    'max_misses': int(os.environ.get('FQA_MAX_MISSES', '5')),
    'top_k': int(os.environ.get('FQA_TOP_K', '3')),
    'min_confidence': 0.0,
    'frame_width': 320,
    'frame_height': 240,
    'jitter_px': 0.0,
    'dropout': 0.0
}

# Tensor archive format
TENSOR_ARCHIVE_CONFIG = {
    'magic': b'FQTA',
    'version': 1
}

TOOLKIT_VERSION = '1.0.0'
