"""
Tracking data models: detections, tracks, tracker state and the alignment template.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple
import math

import numpy as np

from .face_sample import BoundingBox
from .scores import QualityScore


class TrackStatus(str, Enum):
    ACTIVE = 'active'
    LOST = 'lost'
    TERMINATED = 'terminated'


@dataclass(frozen=True)
class Detection:
    """
    One detector output.

    Attributes:
        frame: Frame index
        bbox: Face box in frame coordinates
        confidence: Detector confidence in [0, 1]
        identity: Optional ground-truth identity carried by scripted scenarios
    """
    frame: int
    bbox: BoundingBox
    confidence: float = 1.0
    identity: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.frame, int) or self.frame < 0:
            raise ValueError("frame must be a non-negative integer")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must be between 0 and 1")

    def within_frame(self, width: int, height: int) -> bool:
        return self.bbox.intersects_image(width, height)


@dataclass
class TrackEntry:
    """
    One scored face in a track history.

    Attributes:
        frame: Frame index the face was seen in
        crop_ref: Reference of the aligned crop (file name in the selection output)
        quality: Predicted quality
        crop: Aligned crop pixels, kept in memory until written
    """
    frame: int
    crop_ref: str
    quality: QualityScore
    crop: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def sort_key(self) -> Tuple[float, int]:
        # highest quality first, earlier frame wins ties
        return (-self.quality.value, self.frame)


@dataclass
class Track:
    """
    Time-ordered history of one individual under a single id.

    Attributes:
        track_id: Unique id within a run
        last_box: Most recent matched box
        status: Lifecycle state
        misses: Consecutive frames without a match
        last_frame: Frame index of the most recent match
        history: Scored faces, frame indices strictly increasing
    """
    track_id: int
    last_box: BoundingBox
    last_frame: int
    status: TrackStatus = TrackStatus.ACTIVE
    misses: int = 0
    history: List[TrackEntry] = field(default_factory=list)

    def add_entry(self, entry: TrackEntry) -> None:
        """
        Append a scored face.

        Raises:
            ValueError: If the frame index does not increase
        """
        if self.history and entry.frame <= self.history[-1].frame:
            raise ValueError(
                f"track {self.track_id} history frames must strictly increase "
                f"({entry.frame} after {self.history[-1].frame})"
            )
        self.history.append(entry)

    def entry_for_frame(self, frame: int) -> Optional[TrackEntry]:
        for entry in reversed(self.history):
            if entry.frame == frame:
                return entry
        return None

    def top_k(self, k: int) -> List[TrackEntry]:
        """The k highest-quality entries, earlier frames first on ties."""
        if k < 1:
            raise ValueError("k must be >= 1")
        return sorted(self.history, key=lambda e: e.sort_key)[:k]

    @property
    def is_open(self) -> bool:
        return self.status != TrackStatus.TERMINATED


@dataclass
class TrackEvent:
    """Lifecycle event emitted by the tracker: born, extended or terminated."""
    kind: str
    track_id: int
    frame: int
    detection_index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ('born', 'extended', 'terminated'):
            raise ValueError("kind must be 'born', 'extended' or 'terminated'")


@dataclass
class TrackerState:
    """
    Mutable tracker state for a single video stream.

    Attributes:
        tracks: Open (active or lost) tracks by id
        finished: Terminated tracks in termination order
        next_id: Next id to hand out
        iou_threshold: Minimum IoU for association
        max_misses: Misses after which a track terminates
        min_confidence: Detections below this confidence are ignored
        last_frame: Last processed frame index
    """
    iou_threshold: float = 0.3
    max_misses: int = 5
    min_confidence: float = 0.0
    tracks: Dict[int, Track] = field(default_factory=dict)
    finished: List[Track] = field(default_factory=list)
    next_id: int = 0
    last_frame: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError("iou_threshold must be in (0, 1]")
        if not isinstance(self.max_misses, int) or self.max_misses < 1:
            raise ValueError("max_misses must be a positive integer")
        if not (0.0 <= self.min_confidence <= 1.0):
            raise ValueError("min_confidence must be between 0 and 1")

    def open_tracks(self) -> List[Track]:
        """Open tracks ordered by id."""
        return [self.tracks[tid] for tid in sorted(self.tracks)]

    def all_tracks(self) -> List[Track]:
        return sorted(list(self.tracks.values()) + self.finished, key=lambda t: t.track_id)

    def get(self, track_id: int) -> Optional[Track]:
        if track_id in self.tracks:
            return self.tracks[track_id]
        for track in self.finished:
            if track.track_id == track_id:
                return track
        return None


# Widely used five-point template for 112x112 recognition crops
CANONICAL_TEMPLATE_112 = (
    (38.2946, 51.6963),
    (73.5318, 51.5014),
    (56.0252, 71.7366),
    (41.5493, 92.3655),
    (70.7299, 92.2041),
)

# The canonical eyes differ by ~0.19 px in y
EYE_LEVEL_TOLERANCE = 0.5


@dataclass(frozen=True)
class AlignmentTemplate:
    """
    Canonical landmark positions inside the aligned output crop.

    Attributes:
        points: Five (x, y) points in output coordinates
        output_size: Side of the square output crop in pixels
    """
    points: Tuple[Tuple[float, float], ...] = CANONICAL_TEMPLATE_112
    output_size: int = 112

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(self.points) != 5:
            raise ValueError("template must contain exactly 5 points")
        if not all(math.isfinite(c) for p in self.points for c in p):
            raise ValueError("template points must be finite")
        if self.output_size < 1:
            raise ValueError("output_size must be >= 1")
        if abs(self.points[0][1] - self.points[1][1]) > EYE_LEVEL_TOLERANCE:
            raise ValueError("template eye points must share a y-coordinate")

    def to_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    def levelled(self) -> 'AlignmentTemplate':
        """Copy with both eyes moved to their mean y, making them exactly horizontal."""
        eye_y = (self.points[0][1] + self.points[1][1]) / 2.0
        points = ((self.points[0][0], eye_y), (self.points[1][0], eye_y)) + tuple(self.points[2:])
        return AlignmentTemplate(points=points, output_size=self.output_size)

    def scaled(self, output_size: int) -> 'AlignmentTemplate':
        """Template rescaled to another output size."""
        factor = output_size / self.output_size
        points = tuple((x * factor, y * factor) for x, y in self.points)
        return AlignmentTemplate(points=points, output_size=output_size)

    def to_dict(self) -> Dict[str, Any]:
        return {'points': [list(p) for p in self.points], 'output_size': self.output_size}
