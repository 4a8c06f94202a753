"""
Track lifecycle around the bidirectional association step.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from ..models.tracking import Detection, Track, TrackerState, TrackEvent, TrackStatus
from .association import associate_bidirectional


class PipelineError(Exception):
    """Custom exception for edge pipeline operations"""
    pass


class FrameOrderError(PipelineError):
    """Raised when a frame index does not increase."""
    pass


@dataclass
class TrackUpdate:
    """
    Outcome of one tracker step.

    Attributes:
        events: Lifecycle events in emission order
        assignments: Detection index -> track id for every accepted detection
    """
    events: List[TrackEvent] = field(default_factory=list)
    assignments: Dict[int, int] = field(default_factory=dict)


logger = logging.getLogger(__name__)


def _terminate(state: TrackerState, track: Track, frame: int, update: TrackUpdate) -> None:
    track.status = TrackStatus.TERMINATED
    del state.tracks[track.track_id]
    state.finished.append(track)
    update.events.append(TrackEvent('terminated', track.track_id, frame))


def update_tracks(state: TrackerState, detections: Sequence[Detection], frame: int) -> TrackUpdate:
    """
    Advance the tracker by one frame.

    Open tracks whose last match is more than max_misses frames old are
    terminated; the rest are associated with the detections. Matched tracks
    are extended, unmatched detections start new tracks, unmatched tracks
    count a miss and terminate when misses reach max_misses. A track last
    matched at frame f can still be matched at frame f + max_misses.

    Raises:
        FrameOrderError: If frame is not greater than the last processed frame
    """
    if state.last_frame is not None and frame <= state.last_frame:
        raise FrameOrderError(f"frame {frame} received after frame {state.last_frame}")
    state.last_frame = frame
    update = TrackUpdate()

    for track in state.open_tracks():
        if frame - track.last_frame > state.max_misses:
            track.misses = frame - track.last_frame - 1
            _terminate(state, track, frame, update)

    accepted = [i for i, d in enumerate(detections) if d.confidence >= state.min_confidence]
    tracks = state.open_tracks()
    association = associate_bidirectional(
        [t.last_box for t in tracks],
        [detections[i].bbox for i in accepted],
        state.iou_threshold
    )

    for track_index, detection_slot in association.matches:
        track = tracks[track_index]
        detection_index = accepted[detection_slot]
        track.last_box = detections[detection_index].bbox
        track.last_frame = frame
        track.misses = 0
        track.status = TrackStatus.ACTIVE
        update.assignments[detection_index] = track.track_id
        update.events.append(TrackEvent('extended', track.track_id, frame, detection_index))

    for detection_slot in association.unmatched_curr:
        detection_index = accepted[detection_slot]
        track = Track(track_id=state.next_id, last_box=detections[detection_index].bbox, last_frame=frame)
        state.next_id += 1
        state.tracks[track.track_id] = track
        update.assignments[detection_index] = track.track_id
        update.events.append(TrackEvent('born', track.track_id, frame, detection_index))

    for track_index in association.unmatched_prev:
        track = tracks[track_index]
        track.misses = frame - track.last_frame
        if track.misses >= state.max_misses:
            _terminate(state, track, frame, update)
        else:
            track.status = TrackStatus.LOST

    return update


def finish_tracks(state: TrackerState) -> List[TrackEvent]:
    """Terminate every open track at the end of a stream."""
    update = TrackUpdate()
    frame = state.last_frame if state.last_frame is not None else 0
    for track in state.open_tracks():
        _terminate(state, track, frame, update)
    return update.events
