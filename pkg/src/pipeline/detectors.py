"""
Face detectors for the pipeline simulator and scenario file loading.

A real detector plugs in by implementing Detector.detect; the bundled
implementations replay scenario annotations or scan a fixed grid.
"""
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np

from ..augmentation.distortions import derive_seed
from ..models.face_sample import BoundingBox, validate_image
from ..models.tracking import Detection
from .tracker import PipelineError


@dataclass(frozen=True)
class ScenarioFrame:
    """One scenario row: annotated boxes (and optional identities) of a frame."""
    frame: int
    boxes: Tuple[BoundingBox, ...]
    identities: Tuple[Optional[str], ...] = ()

    def to_dict(self) -> Dict:
        row = {'frame': self.frame, 'boxes': [box.to_list() for box in self.boxes]}
        if any(identity is not None for identity in self.identities):
            row['identities'] = list(self.identities)
        return row


@dataclass
class Scenario:
    frames: List[ScenarioFrame] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def rows(self) -> List[Dict]:
        return [frame.to_dict() for frame in self.frames]


def parse_scenario_row(data: Dict) -> ScenarioFrame:
    """
    Raises:
        ValueError: On malformed rows
    """
    frame = data.get('frame')
    if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
        raise ValueError("frame must be a non-negative integer")
    raw_boxes = data.get('boxes', [])
    if not isinstance(raw_boxes, list):
        raise ValueError("boxes must be a list")
    boxes = tuple(BoundingBox.from_list(values) for values in raw_boxes)
    identities = data.get('identities') or []
    if identities and len(identities) != len(boxes):
        raise ValueError(f"{len(identities)} identities for {len(boxes)} boxes")
    return ScenarioFrame(frame=frame, boxes=boxes,
                         identities=tuple(identities) if identities else (None,) * len(boxes))


def load_scenario(path: str) -> Scenario:
    """
    Read a scenario jsonl file; frame indices must strictly increase.

    Raises:
        PipelineError: Naming the offending line
    """
    scenario = Scenario()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise PipelineError(f"Failed to read scenario {path}: {str(e)}")

    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = parse_scenario_row(json.loads(line))
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            raise PipelineError(f"{path}: line {line_number}: {str(e)}")
        if scenario.frames and row.frame <= scenario.frames[-1].frame:
            raise PipelineError(f"{path}: line {line_number}: frame indices must increase")
        scenario.frames.append(row)
    return scenario


class Detector(ABC):
    """Face detector interface."""

    name: str = 'detector'

    @abstractmethod
    def detect(self, frame: int, image: Optional[np.ndarray]) -> List[Detection]:
        """Detections of one frame, in a deterministic order."""


class GroundTruthDetector(Detector):
    """
    Replays scenario annotations, optionally with seeded position jitter and
    detection dropout.

    Args:
        scenario: Annotated frames
        jitter_px: Standard deviation of the box position noise
        dropout: Probability of dropping each detection
        seed: Global seed; each frame draws from derive_seed(seed, frame)
        frame_size: (width, height); jittered boxes leaving the frame are dropped
    """

    name = 'ground_truth'

    def __init__(self, scenario: Scenario, jitter_px: float = 0.0, dropout: float = 0.0,
                 seed: int = 0, frame_size: Optional[Tuple[int, int]] = None):
        if jitter_px < 0 or not (0.0 <= dropout <= 1.0):
            raise PipelineError("jitter_px must be >= 0 and dropout in [0, 1]")
        self.frames = {row.frame: row for row in scenario.frames}
        self.jitter_px = jitter_px
        self.dropout = dropout
        self.seed = seed
        self.frame_size = frame_size
        self.logger = logging.getLogger(__name__)

    def detect(self, frame: int, image: Optional[np.ndarray] = None) -> List[Detection]:
        row = self.frames.get(frame)
        if row is None:
            return []
        rng = np.random.default_rng(derive_seed(self.seed, frame))
        detections = []
        for box, identity in zip(row.boxes, row.identities):
            dropped = rng.random() < self.dropout
            offset = rng.normal(0.0, 1.0, size=2) * self.jitter_px
            if dropped:
                continue
            if self.jitter_px > 0:
                box = BoundingBox(box.x + float(offset[0]), box.y + float(offset[1]), box.w, box.h)
            if self.frame_size and not box.intersects_image(*self.frame_size):
                continue
            detections.append(Detection(frame=frame, bbox=box, confidence=1.0, identity=identity))
        return detections


class SlidingWindowDetector(Detector):
    """
    Fixed-grid stub: square windows on a regular grid, confidence from local
    intensity spread (std / 64, capped at 1). Windows below min_confidence
    are dropped.
    """

    name = 'sliding_window'

    def __init__(self, window: int = 64, stride: Optional[int] = None, min_confidence: float = 0.5):
        if window < 1:
            raise PipelineError("window must be >= 1")
        self.window = window
        self.stride = stride or window
        self.min_confidence = min_confidence

    def detect(self, frame: int, image: Optional[np.ndarray]) -> List[Detection]:
        if image is None:
            return []
        validate_image(image)
        gray = image if image.ndim == 2 else cv2.cvtColor(image, cv2.COLOR_RGB2GRAY)
        height, width = gray.shape
        detections = []
        for y in range(0, height - self.window + 1, self.stride):
            for x in range(0, width - self.window + 1, self.stride):
                patch = gray[y:y + self.window, x:x + self.window].astype(np.float64)
                confidence = min(1.0, float(patch.std()) / 64.0)
                if confidence >= self.min_confidence:
                    detections.append(Detection(
                        frame=frame,
                        bbox=BoundingBox(float(x), float(y), float(self.window), float(self.window)),
                        confidence=confidence
                    ))
        return detections


def scenario_from_rows(rows: Sequence[Dict]) -> Scenario:
    """Scenario from in-memory rows (e.g. SyntheticFaceGenerator.generate_scenario)."""
    return Scenario(frames=[parse_scenario_row(row) for row in rows])
