"""Reading and writing RTTM speaker-turn files and plain URI lists.

One RTTM line per turn, ten whitespace-separated fields:

    SPEAKER <file_id> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>

Onsets and durations are written with exactly 3 decimals (millisecond grid),
so writing is byte-deterministic and parse(write(x)) is the identity for
millisecond-aligned annotations.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .core import Annotation, Segment, TimeSpan

__all__ = [
    "RttmParseError",
    "MalformedLineError",
    "NegativeDurationError",
    "NegativeOnsetError",
    "DuplicateUriError",
    "parse_rttm",
    "write_rttm",
    "load_rttm",
    "save_rttm",
    "read_uri_list",
    "write_uri_list",
]

logger = logging.getLogger(__name__)

_FIELD_COUNT = 10
_PLACEHOLDER = "<NA>"


class RttmParseError(ValueError):
    """Base for line-level parse failures; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class MalformedLineError(RttmParseError):
    pass


class NegativeDurationError(RttmParseError):
    pass


class NegativeOnsetError(RttmParseError):
    pass


class DuplicateUriError(ValueError):
    pass


def parse_rttm(text: str) -> dict[str, Annotation]:
    """Parse RTTM text into one Annotation per file_id.

    Blank lines and ';' comment lines are ignored. Records of any other type
    (e.g. SPKR-INFO) are skipped; one warning with the skipped count is
    logged. Same-speaker overlaps merge under the Annotation invariant, so
    slightly sloppy third-party references still load.
    """
    turns: dict[str, list[Segment]] = {}
    skipped = 0
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            skipped += 1
            continue
        if len(fields) != _FIELD_COUNT:
            raise MalformedLineError(
                f"expected {_FIELD_COUNT} fields, got {len(fields)}", line_number
            )
        file_id = fields[1]
        try:
            int(fields[2])
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError:
            raise MalformedLineError(
                f"non-numeric channel/onset/duration in {line!r}", line_number
            ) from None
        if onset < 0:
            raise NegativeOnsetError(f"onset {onset} < 0", line_number)
        if duration <= 0:
            raise NegativeDurationError(f"duration {duration} must be positive", line_number)
        speaker = fields[7]
        turns.setdefault(file_id, []).append(
            Segment(TimeSpan(onset, onset + duration), speaker)
        )
    if skipped:
        logger.warning("skipped %d non-SPEAKER record(s)", skipped)
    return {file_id: Annotation(file_id, segments) for file_id, segments in turns.items()}


def write_rttm(annotations: dict[str, Annotation]) -> str:
    """Render annotations as RTTM text, sorted by (file_id, onset, speaker)."""
    lines = []
    for file_id in sorted(annotations):
        segments = sorted(
            annotations[file_id].segments,
            key=lambda seg: (seg.span.start, seg.speaker),
        )
        for seg in segments:
            lines.append(
                f"SPEAKER {file_id} 1 {seg.span.start:.3f} {seg.span.duration:.3f} "
                f"{_PLACEHOLDER} {_PLACEHOLDER} {seg.speaker} {_PLACEHOLDER} {_PLACEHOLDER}\n"
            )
    return "".join(lines)


def load_rttm(path: str | Path) -> dict[str, Annotation]:
    return parse_rttm(Path(path).read_text(encoding="utf-8"))


def save_rttm(annotations: dict[str, Annotation], path: str | Path) -> None:
    Path(path).write_text(write_rttm(annotations), encoding="utf-8", newline="\n")


def read_uri_list(path: str | Path) -> list[str]:
    """Read one recording id per line, preserving file order."""
    uris: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        uri = line.strip()
        if not uri:
            continue
        if uri in uris:
            raise DuplicateUriError(f"duplicate uri {uri!r} in {path}")
        uris.append(uri)
    return uris


def write_uri_list(uris: list[str], path: str | Path) -> None:
    """Write ids one per line, sorted, rejecting duplicates."""
    if len(set(uris)) != len(uris):
        seen: set[str] = set()
        for uri in uris:
            if uri in seen:
                raise DuplicateUriError(f"duplicate uri {uri!r}")
            seen.add(uri)
    Path(path).write_text("".join(f"{uri}\n" for uri in sorted(uris)), encoding="utf-8", newline="\n")
