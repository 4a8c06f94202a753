"""
Data ingestion module for the face quality toolkit.

This module loads dataset manifests (jsonl, CelebA annotation triplets, LFW
pairs), extracts face crops, splits identities into train/eval and generates
synthetic annotated faces for desk-scale runs.
"""

from .manifest_loader import (
    ManifestLoader,
    ManifestError,
    ManifestParseError,
    SplitError,
    load_manifest,
    save_manifest,
    load_face_sample,
    load_lfw_pairs,
    split_train_eval
)

from .crops import (
    CropError,
    FaceCrop,
    crop_face,
    crop_image,
    crop_region,
    extract_face_crop,
    CropProvider
)

from .synthetic_faces import (
    GeneratorConfig,
    SyntheticFaceGenerator,
    create_default_config,
    write_scenario
)

__all__ = [
    'ManifestLoader',
    'ManifestError',
    'ManifestParseError',
    'SplitError',
    'load_manifest',
    'save_manifest',
    'load_face_sample',
    'load_lfw_pairs',
    'split_train_eval',
    'CropError',
    'FaceCrop',
    'crop_face',
    'crop_image',
    'crop_region',
    'extract_face_crop',
    'CropProvider',
    'GeneratorConfig',
    'SyntheticFaceGenerator',
    'create_default_config',
    'write_scenario'
]
