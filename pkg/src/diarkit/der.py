"""Diarization error rate with optimal speaker mapping.

Scoring follows the region-partition formulation: time not excluded by the
collar (or by reference overlap regions when requested) is split at every
segment boundary, and each homogeneous region contributes miss, false alarm
and confusion time weighted by its active speaker counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from scipy.optimize import linear_sum_assignment

from .core import EPSILON, Annotation, Segment, TimeSpan, Timeline

__all__ = [
    "CostMatrix",
    "SpeakerMapping",
    "DerReport",
    "EmptyReferenceError",
    "overlap_cost_matrix",
    "optimal_mapping",
    "compute_der",
]


class EmptyReferenceError(ValueError):
    """No reference speech remains after cropping, so DER is undefined."""


@dataclass(frozen=True)
class CostMatrix:
    """Seconds of shared speech for every (reference, hypothesis) speaker pair."""

    ref_labels: tuple[str, ...]
    hyp_labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.ref_labels):
            raise ValueError("one row per reference speaker required")
        for row in self.values:
            if len(row) != len(self.hyp_labels):
                raise ValueError("one column per hypothesis speaker required")
            for entry in row:
                if entry < 0:
                    raise ValueError(f"negative overlap {entry!r}")


@dataclass(frozen=True)
class SpeakerMapping:
    """One-to-one attribution of hypothesis speakers to reference speakers."""

    pairs: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        pairs = frozenset(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        refs = [r for r, _ in pairs]
        hyps = [h for _, h in pairs]
        if len(set(refs)) != len(refs) or len(set(hyps)) != len(hyps):
            raise ValueError("mapping must be one-to-one in both directions")

    def sorted_pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.pairs))


@dataclass(frozen=True)
class DerReport:
    t_false_alarm: float
    t_miss: float
    t_confusion: float
    t_total: float
    mapping: SpeakerMapping = field(default_factory=lambda: SpeakerMapping(frozenset()))

    def __post_init__(self) -> None:
        for name in ("t_false_alarm", "t_miss", "t_confusion"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.t_total <= 0:
            raise ValueError("t_total must be positive")

    @property
    def der(self) -> float:
        return (self.t_false_alarm + self.t_miss + self.t_confusion) / self.t_total


def overlap_cost_matrix(reference: Annotation, hypothesis: Annotation) -> CostMatrix:
    """Pairwise shared-speech durations between all speakers of both sides."""
    ref_labels = reference.speakers()
    hyp_labels = hypothesis.speakers()
    hyp_timelines = {h: hypothesis.speaker_timeline(h) for h in hyp_labels}
    values = tuple(
        tuple(
            reference.speaker_timeline(r).intersection_duration(hyp_timelines[h])
            for h in hyp_labels
        )
        for r in ref_labels
    )
    return CostMatrix(ref_labels, hyp_labels, values)


def _max_assignment(values: list[list[float]]) -> float:
    if not values or not values[0]:
        return 0.0
    rows, cols = linear_sum_assignment(values, maximize=True)
    return float(sum(values[i][j] for i, j in zip(rows, cols)))


def optimal_mapping(cost: CostMatrix) -> SpeakerMapping:
    """Maximum-weight one-to-one mapping, ties broken lexicographically.

    Zero-overlap pairs never enter the result. Among all assignments of
    maximal total weight, the one whose sorted pair list compares smallest
    is returned; it is built greedily by keeping a candidate pair only if
    an optimal completion still exists for the remaining speakers.
    """
    values = [list(row) for row in cost.values]
    best = _max_assignment(values)
    candidates = sorted(
        (cost.ref_labels[i], cost.hyp_labels[j], i, j)
        for i in range(len(cost.ref_labels))
        for j in range(len(cost.hyp_labels))
        if cost.values[i][j] > 0
    )
    chosen: list[tuple[str, str]] = []
    fixed_weight = 0.0
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    for ref, hyp, i, j in candidates:
        if i in used_rows or j in used_cols:
            continue
        free_rows = [r for r in range(len(cost.ref_labels)) if r not in used_rows and r != i]
        free_cols = [c for c in range(len(cost.hyp_labels)) if c not in used_cols and c != j]
        residual = [[values[r][c] for c in free_cols] for r in free_rows]
        attempt = fixed_weight + values[i][j] + _max_assignment(residual)
        if attempt >= best - 1e-9:
            chosen.append((ref, hyp))
            fixed_weight += values[i][j]
            used_rows.add(i)
            used_cols.add(j)
    return SpeakerMapping(frozenset(chosen))


def _boundary_collar(reference: Annotation, collar: float) -> Timeline:
    spans = []
    for segment in reference.segments:
        for bound in (segment.span.start, segment.span.end):
            lo = max(0.0, bound - collar)
            hi = bound + collar
            if hi > lo:
                spans.append(TimeSpan(lo, hi))
    return Timeline(spans)


def _crop_to(annotation: Annotation, windows: Timeline) -> Annotation:
    segments = []
    for segment in annotation.segments:
        for window in windows:
            piece = segment.span.intersect(window)
            if piece is not None:
                segments.append(Segment(piece, segment.speaker))
    return Annotation(annotation.recording_id, segments)


def _scoring_windows(
    reference: Annotation, hypothesis: Annotation, collar: float, skip_overlap: bool
) -> Timeline | None:
    excluded = Timeline([])
    if collar > 0:
        excluded = _boundary_collar(reference, collar)
    if skip_overlap:
        excluded = excluded.union(reference.overlap_regions())
    if not excluded:
        return None
    horizon = max(
        [s.span.end for s in reference.segments]
        + [s.span.end for s in hypothesis.segments],
        default=0.0,
    )
    if horizon <= 0:
        return Timeline([])
    return Timeline([TimeSpan(0.0, horizon)]).difference(excluded)


def compute_der(
    reference: Annotation,
    hypothesis: Annotation,
    collar: float = 0.0,
    skip_overlap: bool = False,
) -> DerReport:
    """Score a hypothesis against a reference.

    With a positive collar, time within +-collar of every reference segment
    boundary is removed before scoring; skip_overlap additionally removes the
    reference's own overlap regions. The speaker mapping is optimized on the
    cropped annotations. Raises EmptyReferenceError when no reference speech
    survives the cropping.
    """
    if collar < 0:
        raise ValueError("collar must be non-negative")
    windows = _scoring_windows(reference, hypothesis, collar, skip_overlap)
    if windows is not None:
        reference = _crop_to(reference, windows)
        hypothesis = _crop_to(hypothesis, windows)
    if not reference.segments:
        raise EmptyReferenceError("no reference speech to score against")

    mapping = optimal_mapping(overlap_cost_matrix(reference, hypothesis))

    # deltas per boundary: per-speaker segment counts entering/leaving
    events: dict[float, tuple[dict[str, int], dict[str, int]]] = {}
    for side, annotation in enumerate((reference, hypothesis)):
        for segment in annotation.segments:
            for time, delta in ((segment.span.start, 1), (segment.span.end, -1)):
                bucket = events.setdefault(time, ({}, {}))[side]
                bucket[segment.speaker] = bucket.get(segment.speaker, 0) + delta

    t_miss = 0.0
    t_fa = 0.0
    t_conf = 0.0
    t_total = 0.0
    active: tuple[dict[str, int], dict[str, int]] = ({}, {})
    previous: float | None = None
    for time in sorted(events):
        if previous is not None:
            duration = time - previous
            n_ref = sum(1 for count in active[0].values() if count > 0)
            n_hyp = sum(1 for count in active[1].values() if count > 0)
            n_correct = sum(
                1
                for ref, hyp in mapping.pairs
                if active[0].get(ref, 0) > 0 and active[1].get(hyp, 0) > 0
            )
            t_miss += duration * max(0, n_ref - n_hyp)
            t_fa += duration * max(0, n_hyp - n_ref)
            t_conf += duration * (min(n_ref, n_hyp) - n_correct)
            t_total += duration * n_ref
        for side in (0, 1):
            for speaker, delta in events[time][side].items():
                active[side][speaker] = active[side].get(speaker, 0) + delta
        previous = time

    if t_total <= EPSILON:
        raise EmptyReferenceError("no reference speech to score against")
    return DerReport(t_fa, t_miss, t_conf, t_total, mapping)
