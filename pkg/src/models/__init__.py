# Data models
from .face_sample import ImageBuffer, BoundingBox, LandmarkSet, FaceSample, validate_image, LANDMARK_NAMES
from .manifest import ManifestRecord, DatasetManifest, Pair, PairList
from .augmentation_record import AugmentationSpec, AppliedAugmentation
from .scores import Polarity, SimilarityScore, QualityScore
from .evaluation_result import (
    EvalRecord, PearsonResult, ReportCell, AttackEffectRow, EvalReport,
    cells_to_csv, cells_from_csv, VALID_ATTACKS, VALID_SCORE_KINDS
)
from .tracking import (
    Detection, TrackEntry, Track, TrackStatus, TrackEvent, TrackerState,
    AlignmentTemplate, CANONICAL_TEMPLATE_112
)
from .run_config import TrainingConfig, BackendConfig, PipelineParams, RunConfig, RunManifest, ConfigError

__all__ = [
    'ImageBuffer',
    'BoundingBox',
    'LandmarkSet',
    'FaceSample',
    'validate_image',
    'LANDMARK_NAMES',
    'ManifestRecord',
    'DatasetManifest',
    'Pair',
    'PairList',
    'AugmentationSpec',
    'AppliedAugmentation',
    'Polarity',
    'SimilarityScore',
    'QualityScore',
    'EvalRecord',
    'PearsonResult',
    'ReportCell',
    'AttackEffectRow',
    'EvalReport',
    'cells_to_csv',
    'cells_from_csv',
    'VALID_ATTACKS',
    'VALID_SCORE_KINDS',
    'Detection',
    'TrackEntry',
    'Track',
    'TrackStatus',
    'TrackEvent',
    'TrackerState',
    'AlignmentTemplate',
    'CANONICAL_TEMPLATE_112',
    'TrainingConfig',
    'BackendConfig',
    'PipelineParams',
    'RunConfig',
    'RunManifest',
    'ConfigError'
]
