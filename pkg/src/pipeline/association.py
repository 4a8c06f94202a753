"""
Bidirectional (mutual-best) IoU association between consecutive frames.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..models.face_sample import BoundingBox


@dataclass
class Association:
    """
    Result of associating previous boxes with current boxes.

    Attributes:
        matches: (prev index, curr index) pairs ordered by prev index
        unmatched_prev: Previous indices without a match
        unmatched_curr: Current indices without a match
    """
    matches: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_prev: List[int] = field(default_factory=list)
    unmatched_curr: List[int] = field(default_factory=list)


def iou_matrix(prev: Sequence[BoundingBox], curr: Sequence[BoundingBox]) -> np.ndarray:
    """(len(prev), len(curr)) IoU matrix."""
    matrix = np.zeros((len(prev), len(curr)), dtype=np.float64)
    for i, a in enumerate(prev):
        for j, b in enumerate(curr):
            matrix[i, j] = a.iou(b)
    return matrix


def associate_bidirectional(prev: Sequence[BoundingBox], curr: Sequence[BoundingBox],
                            iou_threshold: float) -> Association:
    """
    Match i and j iff j is i's highest-IoU current box, i is j's highest-IoU
    previous box, and their IoU reaches the threshold. Ties go to the lower index.
    """
    if not prev or not curr:
        return Association(unmatched_prev=list(range(len(prev))),
                           unmatched_curr=list(range(len(curr))))

    ious = iou_matrix(prev, curr)
    best_curr = np.argmax(ious, axis=1)
    best_prev = np.argmax(ious, axis=0)

    matches = [
        (i, int(j)) for i, j in enumerate(best_curr)
        if best_prev[j] == i and ious[i, j] >= iou_threshold
    ]
    matched_prev = {i for i, _ in matches}
    matched_curr = {j for _, j in matches}
    return Association(
        matches=matches,
        unmatched_prev=[i for i in range(len(prev)) if i not in matched_prev],
        unmatched_curr=[j for j in range(len(curr)) if j not in matched_curr]
    )
