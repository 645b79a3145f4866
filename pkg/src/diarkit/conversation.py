"""Seeded conversation planning: who speaks when, with what text and overlap.

Scripts are generated from counter-based draws keyed by (seed, utterance
index, draw kind), so growing num_utterances or changing one range never
perturbs the draws of earlier utterances. All gap and overlap durations are
rounded to the millisecond grid at draw time; downstream timing, annotation
and audio placement stay mutually consistent because of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import seeding
from .core import Annotation, Segment, TimeSpan

__all__ = [
    "VoiceSpec",
    "Gap",
    "Overlap",
    "UtteranceSpec",
    "ScriptConfig",
    "ConversationScript",
    "InsufficientSpeakersError",
    "EmptyTextSourceError",
    "DurationMismatchError",
    "generate_script",
    "utterance_times",
    "resolve_timeline",
    "script_to_json",
    "script_from_json",
]

SCRIPT_SCHEMA = "script@1"


class InsufficientSpeakersError(ValueError):
    """A conversation needs at least two distinct speakers."""


class EmptyTextSourceError(ValueError):
    """No candidate sentences to draw utterance texts from."""


class DurationMismatchError(ValueError):
    """Durations do not line up one-to-one with the script's utterances."""


@dataclass(frozen=True)
class VoiceSpec:
    speaker: str
    voice_name: str
    rate: float = 0.0
    pitch: float = 0.0

    def __post_init__(self) -> None:
        if not self.speaker or self.speaker != self.speaker.strip():
            raise ValueError(f"bad speaker id {self.speaker!r}")
        if not self.voice_name:
            raise ValueError("voice_name must be non-empty")


@dataclass(frozen=True)
class Gap:
    seconds: float

    def __post_init__(self) -> None:
        if self.seconds < 0:
            raise ValueError("gap must be non-negative")


@dataclass(frozen=True)
class Overlap:
    seconds: float

    def __post_init__(self) -> None:
        if self.seconds <= 0:
            raise ValueError("overlap must be positive")


@dataclass(frozen=True)
class UtteranceSpec:
    index: int
    speaker: str
    text: str
    join: Gap | Overlap

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("index must be non-negative")
        if not self.text.strip():
            raise ValueError("text must be non-empty")


@dataclass(frozen=True)
class ScriptConfig:
    speakers: tuple[VoiceSpec, ...]
    text_source: tuple[str, ...]
    num_utterances: int = 20
    gap_range: tuple[float, float] = (0.2, 1.0)
    overlap_probability: float = 0.3
    overlap_range: tuple[float, float] = (0.3, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "speakers", tuple(self.speakers))
        object.__setattr__(self, "text_source", tuple(self.text_source))
        object.__setattr__(self, "gap_range", tuple(self.gap_range))
        object.__setattr__(self, "overlap_range", tuple(self.overlap_range))
        ids = [v.speaker for v in self.speakers]
        if len(set(ids)) != len(ids):
            raise ValueError("speaker ids must be unique within a script")
        if self.num_utterances < 1:
            raise ValueError("num_utterances must be positive")
        for name, (lo, hi) in (("gap_range", self.gap_range), ("overlap_range", self.overlap_range)):
            if lo > hi:
                raise ValueError(f"{name} must satisfy min <= max")
        if self.gap_range[0] < 0:
            raise ValueError("gaps cannot be negative")
        if self.overlap_range[0] <= 0:
            raise ValueError("overlaps must be positive")
        if not 0 <= self.overlap_probability <= 1:
            raise ValueError("overlap_probability must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ConversationScript:
    conversation_id: str
    config: ScriptConfig
    utterances: tuple[UtteranceSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if not self.conversation_id:
            raise ValueError("conversation_id must be non-empty")
        if not self.utterances:
            raise ValueError("a script needs at least one utterance")
        if self.utterances[0].join != Gap(0.0):
            raise ValueError("the first utterance must join with Gap(0)")
        for pos, utterance in enumerate(self.utterances):
            if utterance.index != pos:
                raise ValueError("utterance indices must be consecutive from 0")
        for left, right in zip(self.utterances, self.utterances[1:]):
            if left.speaker == right.speaker:
                raise ValueError("consecutive utterances must change speaker")

    def voice_for(self, speaker: str) -> VoiceSpec:
        for voice in self.config.speakers:
            if voice.speaker == speaker:
                return voice
        raise KeyError(speaker)


def _draw_join(config: ScriptConfig, index: int) -> Gap | Overlap:
    if seeding.unit_uniform(config.seed, index, "join") < config.overlap_probability:
        seconds = round(seeding.uniform(*config.overlap_range, config.seed, index, "overlap"), 3)
        # the grid can round a tiny draw down to zero; keep overlaps strictly positive
        return Overlap(max(seconds, 0.001))
    seconds = round(seeding.uniform(*config.gap_range, config.seed, index, "gap"), 3)
    return Gap(seconds)


def _draw_text(config: ScriptConfig, index: int) -> str:
    cycle, position = divmod(index, len(config.text_source))
    order = seeding.shuffled(list(config.text_source), config.seed, "texts", cycle)
    return order[position]


def generate_script(config: ScriptConfig, conversation_id: str = "conv") -> ConversationScript:
    """Draw speakers, texts and joins for one conversation.

    The first speaker is uniform over all voices; every later one is uniform
    over the voices excluding the previous speaker. Joins become overlaps
    with probability overlap_probability, gaps otherwise, each uniform over
    its configured range.
    """
    if len(config.speakers) < 2:
        raise InsufficientSpeakersError("need at least two speakers")
    if not config.text_source:
        raise EmptyTextSourceError("text_source is empty")
    utterances = []
    previous: str | None = None
    for index in range(config.num_utterances):
        candidates = [v.speaker for v in config.speakers if v.speaker != previous]
        speaker = candidates[seeding.pick_index(len(candidates), config.seed, index, "speaker")]
        join = Gap(0.0) if index == 0 else _draw_join(config, index)
        utterances.append(UtteranceSpec(index, speaker, _draw_text(config, index), join))
        previous = speaker
    return ConversationScript(conversation_id, config, tuple(utterances))


def utterance_times(script: ConversationScript, durations: list[float]) -> list[TimeSpan]:
    """Onset/offset per utterance, in script order.

    Gap(g) starts g after the previous end; Overlap(o) starts o before the
    previous end, but never before the previous start. Durations must be
    positive and match the utterance count.
    """
    if len(durations) != len(script.utterances):
        raise DurationMismatchError(
            f"{len(durations)} durations for {len(script.utterances)} utterances"
        )
    for duration in durations:
        if duration <= 0:
            raise ValueError(f"utterance duration must be positive, got {duration!r}")
    spans: list[TimeSpan] = []
    for utterance, duration in zip(script.utterances, durations):
        if not spans:
            start = 0.0
        elif isinstance(utterance.join, Gap):
            start = spans[-1].end + utterance.join.seconds
        else:
            start = max(spans[-1].end - utterance.join.seconds, spans[-1].start)
        spans.append(TimeSpan(start, start + duration))
    return spans


def resolve_timeline(script: ConversationScript, durations: list[float]) -> Annotation:
    """Ground-truth annotation of the scripted conversation."""
    spans = utterance_times(script, durations)
    segments = [
        Segment(span, utterance.speaker)
        for utterance, span in zip(script.utterances, spans)
    ]
    return Annotation(script.conversation_id, segments)


def script_to_json(script: ConversationScript) -> dict:
    config = script.config
    return {
        "schema": SCRIPT_SCHEMA,
        "conversation_id": script.conversation_id,
        "seed": config.seed,
        "num_utterances": config.num_utterances,
        "gap_range": list(config.gap_range),
        "overlap_probability": config.overlap_probability,
        "overlap_range": list(config.overlap_range),
        "speakers": [
            {"speaker": v.speaker, "voice_name": v.voice_name, "rate": v.rate, "pitch": v.pitch}
            for v in config.speakers
        ],
        "text_source": list(config.text_source),
        "utterances": [
            {
                "index": u.index,
                "speaker": u.speaker,
                "text": u.text,
                "join": "overlap" if isinstance(u.join, Overlap) else "gap",
                "seconds": u.join.seconds,
            }
            for u in script.utterances
        ],
    }


def script_from_json(payload: dict) -> ConversationScript:
    if payload.get("schema") != SCRIPT_SCHEMA:
        raise ValueError(f"unsupported script schema {payload.get('schema')!r}")
    config = ScriptConfig(
        speakers=tuple(
            VoiceSpec(v["speaker"], v["voice_name"], v["rate"], v["pitch"])
            for v in payload["speakers"]
        ),
        text_source=tuple(payload["text_source"]),
        num_utterances=payload["num_utterances"],
        gap_range=tuple(payload["gap_range"]),
        overlap_probability=payload["overlap_probability"],
        overlap_range=tuple(payload["overlap_range"]),
        seed=payload["seed"],
    )
    utterances = tuple(
        UtteranceSpec(
            u["index"],
            u["speaker"],
            u["text"],
            Overlap(u["seconds"]) if u["join"] == "overlap" else Gap(u["seconds"]),
        )
        for u in payload["utterances"]
    )
    return ConversationScript(payload["conversation_id"], config, utterances)
