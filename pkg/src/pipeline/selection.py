"""
Edge pipeline: per-frame tracking, joint landmark+quality scoring and
per-track best-face selection.

Each detection is cropped and passed once through the network, which yields
both its landmarks and its quality; the landmarks drive the alignment of the
face onto the template. Tracks keep their full scored history, and the k
best faces of every track are what would be forwarded to a recognition
server.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import CROP_CONFIG
from ..concurrency import ordered_map
from ..data_ingestion.crops import CropError, crop_image
from ..models.face_sample import LandmarkSet
from ..models.run_config import PipelineParams
from ..models.scores import QualityScore
from ..models.tracking import AlignmentTemplate, Detection, Track, TrackEntry, TrackerState, TrackEvent, TrackStatus
from ..monet.network import MonetError, MonetModel, QualityHead, predict
from .alignment import AlignmentError, align_face
from .detectors import Detector
from .timing import StageTimer
from .tracker import finish_tracks, update_tracks


@dataclass(frozen=True)
class ScoredFace:
    """Aligned crop of one detection with its predicted quality."""
    aligned: np.ndarray
    landmarks: LandmarkSet
    quality: QualityScore


@dataclass
class FrameResult:
    """
    Outcome of one processed frame.

    Attributes:
        frame: Frame index
        events: Tracker lifecycle events
        selections: Current top-k entries per active track
        failures: (detection index, reason) of faces that could not be scored
    """
    frame: int
    events: List[TrackEvent] = field(default_factory=list)
    selections: Dict[int, List[TrackEntry]] = field(default_factory=dict)
    failures: List[Tuple[int, str]] = field(default_factory=list)


@dataclass(frozen=True)
class SelectionRow:
    """One row of the selection output."""
    track_id: int
    rank: int
    frame: int
    quality: float
    crop_path: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            'track_id': self.track_id,
            'rank': self.rank,
            'frame': self.frame,
            'quality': self.quality,
            'crop_path': self.crop_path
        }


@dataclass(frozen=True)
class SelectionSummary:
    """
    Per-track selection accounting.

    Attributes:
        track_id: Track id
        faces_seen: Scored faces in the track history
        forwarded: Faces selected for forwarding
        best_quality / worst_quality: Quality range over the history
    """
    track_id: int
    faces_seen: int
    forwarded: int
    best_quality: float
    worst_quality: float

    @property
    def quality_gap(self) -> float:
        return self.best_quality - self.worst_quality

    @property
    def bandwidth_saving(self) -> float:
        """Fraction of seen faces that are not forwarded."""
        return 1.0 - self.forwarded / self.faces_seen if self.faces_seen else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'track_id': self.track_id,
            'faces_seen': self.faces_seen,
            'forwarded': self.forwarded,
            'best_quality': self.best_quality,
            'worst_quality': self.worst_quality,
            'quality_gap': self.quality_gap,
            'bandwidth_saving': self.bandwidth_saving
        }


def crop_ref(track_id: int, frame: int) -> str:
    return f"track{track_id:04d}_frame{frame:06d}.png"


class FacePipeline:
    """
    Single-stream pipeline state: tracker, scorer and per-track selection.

    Args:
        model: Frozen extractor
        head: Quality head
        params: Tracking and selection parameters
        template: Alignment template
        crop_margin: Margin added around detection boxes before scoring
        timer: Stage timer shared with the caller
    """

    def __init__(self, model: MonetModel, head: QualityHead,
                 params: Optional[PipelineParams] = None,
                 template: Optional[AlignmentTemplate] = None,
                 crop_margin: float = CROP_CONFIG['margin'],
                 timer: Optional[StageTimer] = None):
        self.model = model
        self.head = head
        self.params = params or PipelineParams()
        self.template = template or AlignmentTemplate()
        self.crop_margin = crop_margin
        self.timer = timer or StageTimer()
        self.state = TrackerState(
            iou_threshold=self.params.iou_threshold,
            max_misses=self.params.max_misses,
            min_confidence=self.params.min_confidence
        )
        self.logger = logging.getLogger(__name__)

    def score_detection(self, image: np.ndarray, detection: Detection) -> ScoredFace:
        """
        One forward pass on the detection crop, then alignment with the
        predicted landmarks.

        Raises:
            CropError, MonetError, AlignmentError: Per-face failures
        """
        size = self.template.output_size
        face = crop_image(image, detection.bbox, output_size=size, margin=self.crop_margin)
        # Landmarks and quality come from the same forward pass, so quality is
        # scored on the detection crop; the aligned crop needs those landmarks.
        landmarks, quality = predict(self.model, self.head, face.image)
        scale = np.array([face.region.w / size, face.region.h / size])
        in_frame = LandmarkSet.from_array(landmarks.to_array() * scale + np.array([face.region.x, face.region.y]))
        aligned, _ = align_face(image, in_frame, self.template)
        return ScoredFace(aligned=aligned, landmarks=in_frame, quality=quality)

    def _record(self, track: Track, frame: int, face: ScoredFace) -> None:
        track.add_entry(TrackEntry(frame=frame, crop_ref=crop_ref(track.track_id, frame),
                                   quality=face.quality, crop=face.aligned))
        keep = {id(entry) for entry in track.top_k(self.params.k)}
        for entry in track.history:
            if id(entry) not in keep:
                entry.crop = None

    def process_frame(self, frame: int, image: np.ndarray,
                      detections: Sequence[Detection]) -> FrameResult:
        """
        Score every detection, update the tracks and append the scored faces.

        Per-face failures are logged and counted; the frame still updates the
        tracker.

        Raises:
            FrameOrderError: If frame does not increase
        """
        result = FrameResult(frame=frame)

        def score(item: Tuple[int, Detection]):
            index, detection = item
            with self.timer.measure('landmark_quality'):
                try:
                    return self.score_detection(image, detection), None
                except (CropError, MonetError, AlignmentError, ValueError) as e:
                    return None, (index, str(e))

        accepted = [(i, d) for i, d in enumerate(detections) if d.confidence >= self.params.min_confidence]
        scored = dict(zip([i for i, _ in accepted], ordered_map(score, accepted)))

        with self.timer.measure('track'):
            update = update_tracks(self.state, detections, frame)
        result.events = update.events

        for index in sorted(update.assignments):
            face, failure = scored.get(index, (None, (index, 'not scored')))
            if failure is not None:
                self.logger.warning(f"Frame {frame}: detection {failure[0]} skipped: {failure[1]}")
                result.failures.append(failure)
                continue
            self._record(self.state.tracks[update.assignments[index]], frame, face)

        for track in self.state.open_tracks():
            if track.status == TrackStatus.ACTIVE and track.history:
                result.selections[track.track_id] = track.top_k(self.params.k)
        return result

    def run(self, detector: Detector, frames: Iterable[Tuple[int, np.ndarray]]) -> List[FrameResult]:
        """Detect and process every (frame index, image) pair in order."""
        results = []
        for frame, image in frames:
            with self.timer.measure('detect'):
                detections = detector.detect(frame, image)
            results.append(self.process_frame(frame, image, detections))
        return results

    def finish(self) -> List[TrackEvent]:
        return finish_tracks(self.state)

    def selection_rows(self) -> List[SelectionRow]:
        """Top-k rows of every track of the run, by track id then rank."""
        rows = []
        for track in self.state.all_tracks():
            if not track.history:
                continue
            for rank, entry in enumerate(track.top_k(self.params.k), start=1):
                rows.append(SelectionRow(track.track_id, rank, entry.frame,
                                         entry.quality.value, f"crops/{entry.crop_ref}"))
        return rows

    def selected_entries(self) -> List[TrackEntry]:
        return [entry for track in self.state.all_tracks() if track.history
                for entry in track.top_k(self.params.k)]

    def summaries(self) -> List[SelectionSummary]:
        summaries = []
        for track in self.state.all_tracks():
            if not track.history:
                continue
            qualities = [entry.quality.value for entry in track.history]
            summaries.append(SelectionSummary(
                track_id=track.track_id,
                faces_seen=len(track.history),
                forwarded=min(self.params.k, len(track.history)),
                best_quality=max(qualities),
                worst_quality=min(qualities)
            ))
        return summaries
