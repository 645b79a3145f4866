"""Time-interval and annotation algebra shared by the whole toolkit.

All intervals are half-open [start, end) seconds: adjacent spans do not
overlap, and boundary sweeps partition time exactly. Values are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Iterator

__all__ = ["EPSILON", "TimeSpan", "Segment", "Timeline", "Annotation"]

# Slack for span comparisons; well below the millisecond grid used by file I/O.
EPSILON = 1e-9


@dataclass(frozen=True, order=True)
class TimeSpan:
    """Half-open interval [start, end) in seconds."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"span start must be non-negative, got {self.start}")
        if not self.end > self.start:
            raise ValueError(f"span needs positive length, got [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def overlaps(self, other: TimeSpan) -> bool:
        return self.start < other.end and other.start < self.end

    def intersect(self, other: TimeSpan) -> TimeSpan | None:
        """Intersection span, or None when the spans are disjoint."""
        start = max(self.start, other.start)
        end = min(self.end, other.end)
        return TimeSpan(start, end) if end > start else None


@dataclass(frozen=True, order=True)
class Segment:
    """One speaker turn: a span labeled with who is speaking."""

    span: TimeSpan
    speaker: str

    def __post_init__(self) -> None:
        if not self.speaker or any(ch.isspace() for ch in self.speaker):
            raise ValueError(f"speaker label must be non-empty, no whitespace: {self.speaker!r}")


def _coalesced(spans: Iterable[TimeSpan]) -> tuple[TimeSpan, ...]:
    merged: list[TimeSpan] = []
    for span in sorted(spans):
        if merged and span.start <= merged[-1].end + EPSILON:
            if span.end > merged[-1].end:
                merged[-1] = TimeSpan(merged[-1].start, span.end)
        else:
            merged.append(span)
    return tuple(merged)


@dataclass(frozen=True)
class Timeline:
    """Minimal sorted set of disjoint spans: "when", with no "who".

    Any iterable of spans normalizes at construction; overlapping or touching
    spans coalesce, so equal coverage compares equal.
    """

    spans: tuple[TimeSpan, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "spans", _coalesced(self.spans))

    def __iter__(self) -> Iterator[TimeSpan]:
        return iter(self.spans)

    def __len__(self) -> int:
        return len(self.spans)

    def __bool__(self) -> bool:
        return bool(self.spans)

    @property
    def duration(self) -> float:
        return sum(span.duration for span in self.spans)

    def union(self, other: Timeline) -> Timeline:
        return Timeline(self.spans + other.spans)

    def intersection(self, other: Timeline) -> Timeline:
        out: list[TimeSpan] = []
        i = j = 0
        while i < len(self.spans) and j < len(other.spans):
            piece = self.spans[i].intersect(other.spans[j])
            if piece is not None:
                out.append(piece)
            if self.spans[i].end <= other.spans[j].end:
                i += 1
            else:
                j += 1
        return Timeline(out)

    def intersection_duration(self, other: Timeline) -> float:
        """Total duration of the pointwise intersection; symmetric."""
        total = 0.0
        i = j = 0
        while i < len(self.spans) and j < len(other.spans):
            a, b = self.spans[i], other.spans[j]
            total += max(0.0, min(a.end, b.end) - max(a.start, b.start))
            if a.end <= b.end:
                i += 1
            else:
                j += 1
        return total

    def difference(self, other: Timeline) -> Timeline:
        """Coverage of self with every span of other removed."""
        out: list[TimeSpan] = []
        for span in self.spans:
            cursor = span.start
            for cut in other.spans:
                if cut.end <= cursor:
                    continue
                if cut.start >= span.end:
                    break
                if cut.start > cursor:
                    out.append(TimeSpan(cursor, cut.start))
                cursor = max(cursor, cut.end)
                if cursor >= span.end:
                    break
            if cursor < span.end:
                out.append(TimeSpan(cursor, span.end))
        return Timeline(out)


def _merge_same_speaker(segments: Iterable[Segment]) -> tuple[Segment, ...]:
    # Merge only true same-speaker overlaps; adjacent turns stay distinct.
    by_speaker: dict[str, list[TimeSpan]] = {}
    for seg in segments:
        by_speaker.setdefault(seg.speaker, []).append(seg.span)
    merged: list[Segment] = []
    for speaker, spans in by_speaker.items():
        spans.sort()
        current = spans[0]
        for span in spans[1:]:
            if span.start < current.end:
                if span.end > current.end:
                    current = TimeSpan(current.start, span.end)
            else:
                merged.append(Segment(current, speaker))
                current = span
        merged.append(Segment(current, speaker))
    return tuple(sorted(merged))


@dataclass(frozen=True)
class Annotation:
    """All speaker turns of one recording, sorted by (start, end, speaker).

    Different speakers may overlap freely; overlapping turns of the same
    speaker are merged at construction so that any instant has each speaker
    active at most once.
    """

    recording_id: str
    segments: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", _merge_same_speaker(tuple(self.segments)))

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __bool__(self) -> bool:
        return bool(self.segments)

    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({seg.speaker for seg in self.segments}))

    def speaker_timeline(self, speaker: str) -> Timeline:
        return Timeline(seg.span for seg in self.segments if seg.speaker == speaker)

    def speech_duration(self) -> float:
        return sum(seg.span.duration for seg in self.segments)

    def support(self) -> Timeline:
        """Minimal disjoint coverage of all segments."""
        return Timeline(seg.span for seg in self.segments)

    def overlap_regions(self) -> Timeline:
        """Disjoint spans where two or more distinct speakers are active.

        Sweep over boundary events; each speaker contributes at most one
        active segment at a time, so the active count equals the number of
        distinct speakers.
        """
        events: list[tuple[float, int]] = []
        for seg in self.segments:
            events.append((seg.span.start, 1))
            events.append((seg.span.end, -1))
        events.sort()
        regions: list[TimeSpan] = []
        active = 0
        overlap_since = 0.0
        for time, group in groupby(events, key=lambda event: event[0]):
            was_overlapping = active >= 2
            active += sum(delta for _, delta in group)
            if not was_overlapping and active >= 2:
                overlap_since = time
            elif was_overlapping and active < 2:
                regions.append(TimeSpan(overlap_since, time))
        return Timeline(regions)

    def crop(self, window: Timeline) -> Annotation:
        """Intersect every segment with the window, dropping empty pieces."""
        pieces: list[Segment] = []
        for seg in self.segments:
            for span in window.spans:
                if span.start >= seg.span.end:
                    break
                piece = seg.span.intersect(span)
                if piece is not None:
                    pieces.append(Segment(piece, seg.speaker))
        return Annotation(self.recording_id, pieces)
