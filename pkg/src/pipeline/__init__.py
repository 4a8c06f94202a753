"""
Edge pipeline simulator: detection, bidirectional tracking, alignment,
joint landmark and quality scoring, and per-track best-face selection.
"""

from .association import Association, associate_bidirectional, iou_matrix
from .tracker import PipelineError, FrameOrderError, TrackUpdate, finish_tracks, update_tracks
from .alignment import AlignmentError, align_face, estimate_similarity, rotation_degrees, transform_points
from .timing import STAGES, StageTimer, timing_probe
from .detectors import (
    Detector,
    GroundTruthDetector,
    Scenario,
    ScenarioFrame,
    SlidingWindowDetector,
    load_scenario,
    parse_scenario_row,
    scenario_from_rows
)
from .selection import (
    FacePipeline,
    FrameResult,
    ScoredFace,
    SelectionRow,
    SelectionSummary,
    crop_ref
)

__all__ = [
    'Association',
    'associate_bidirectional',
    'iou_matrix',
    'PipelineError',
    'FrameOrderError',
    'TrackUpdate',
    'finish_tracks',
    'update_tracks',
    'AlignmentError',
    'align_face',
    'estimate_similarity',
    'rotation_degrees',
    'transform_points',
    'STAGES',
    'StageTimer',
    'timing_probe',
    'Detector',
    'GroundTruthDetector',
    'Scenario',
    'ScenarioFrame',
    'SlidingWindowDetector',
    'load_scenario',
    'parse_scenario_row',
    'scenario_from_rows',
    'FacePipeline',
    'FrameResult',
    'ScoredFace',
    'SelectionRow',
    'SelectionSummary',
    'crop_ref'
]
