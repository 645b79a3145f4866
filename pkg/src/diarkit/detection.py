"""Frame-based overlapped-speech detection metrics.

Both annotations are rasterized onto a shared frame grid; a frame counts as
overlapped when its midpoint falls inside an overlap region. Precision-style
rates follow the usual convention that an empty denominator means a perfect
score: a hypothesis that never fires cannot have false alarms, and a
reference without overlap cannot be missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Annotation

__all__ = [
    "DetectionReport",
    "BothZeroError",
    "NoReferenceOverlapError",
    "NoDetectionsError",
    "frame_labels",
    "score_detection",
    "f1_from_pr",
    "confusion_rates",
]


class BothZeroError(ValueError):
    """Precision and recall are both zero, so F1 is undefined."""


class NoReferenceOverlapError(ValueError):
    """The reference contains no overlapped frames (tp + fn = 0)."""


class NoDetectionsError(ValueError):
    """The hypothesis never fired (tp + fp = 0)."""


@dataclass(frozen=True)
class DetectionReport:
    tp_frames: int
    fp_frames: int
    fn_frames: int
    tn_frames: int
    frame_size: float

    def __post_init__(self) -> None:
        for name in ("tp_frames", "fp_frames", "fn_frames", "tn_frames"):
            count = getattr(self, name)
            if not isinstance(count, int) or count < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        if self.frame_size <= 0:
            raise ValueError("frame_size must be positive")

    @property
    def total_frames(self) -> int:
        return self.tp_frames + self.fp_frames + self.fn_frames + self.tn_frames

    @property
    def precision(self) -> float:
        fired = self.tp_frames + self.fp_frames
        return self.tp_frames / fired if fired else 1.0

    @property
    def recall(self) -> float:
        positives = self.tp_frames + self.fn_frames
        return self.tp_frames / positives if positives else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    # defined via the complements so the pair sums to 1.0 exactly
    @property
    def miss_rate(self) -> float:
        return 1.0 - self.recall

    @property
    def false_discovery_rate(self) -> float:
        return 1.0 - self.precision


def frame_labels(annotation: Annotation, horizon: float, frame_size: float) -> np.ndarray:
    """Boolean mask, one entry per frame, true where the midpoint is overlapped."""
    if frame_size <= 0:
        raise ValueError("frame_size must be positive")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    count = math.ceil(horizon / frame_size)
    if count == 0:
        return np.zeros(0, dtype=bool)
    regions = list(annotation.overlap_regions())
    midpoints = (np.arange(count) + 0.5) * frame_size
    if not regions:
        return np.zeros(count, dtype=bool)
    starts = np.array([r.start for r in regions])
    ends = np.array([r.end for r in regions])
    slot = np.searchsorted(starts, midpoints, side="right") - 1
    inside = slot >= 0
    inside[inside] = midpoints[inside] < ends[slot[inside]]
    return inside


def score_detection(
    reference: Annotation, hypothesis: Annotation, frame_size: float = 0.01
) -> DetectionReport:
    """Quadrant counts for hypothesis overlap regions against the reference's."""
    horizon = max(
        [s.span.end for s in reference.segments]
        + [s.span.end for s in hypothesis.segments],
        default=0.0,
    )
    ref_mask = frame_labels(reference, horizon, frame_size)
    hyp_mask = frame_labels(hypothesis, horizon, frame_size)
    return DetectionReport(
        tp_frames=int(np.count_nonzero(ref_mask & hyp_mask)),
        fp_frames=int(np.count_nonzero(~ref_mask & hyp_mask)),
        fn_frames=int(np.count_nonzero(ref_mask & ~hyp_mask)),
        tn_frames=int(np.count_nonzero(~ref_mask & ~hyp_mask)),
        frame_size=frame_size,
    )


def f1_from_pr(precision: float, recall: float) -> float:
    """Harmonic mean of a precision/recall pair."""
    if not 0 <= precision <= 1 or not 0 <= recall <= 1:
        raise ValueError("precision and recall must lie in [0, 1]")
    if precision == 0 and recall == 0:
        raise BothZeroError("F1 undefined when precision and recall are both zero")
    return 2 * precision * recall / (precision + recall)


def confusion_rates(report: DetectionReport) -> tuple[float, float]:
    """(miss rate, false discovery rate) straight from the quadrant counts."""
    positives = report.tp_frames + report.fn_frames
    fired = report.tp_frames + report.fp_frames
    if positives == 0:
        raise NoReferenceOverlapError("reference has no overlapped frames")
    if fired == 0:
        raise NoDetectionsError("hypothesis never detected overlap")
    return report.fn_frames / positives, report.fp_frames / fired
