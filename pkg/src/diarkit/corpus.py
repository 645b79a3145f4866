"""Corpus generation at scale and the experiment protocol around it.

One corpus run turns a script-config template into a directory tree:

    output_root/
      wav/conv_0000.wav ...     rendered conversations, PCM16 mono 16 kHz
      rttm/conv_0000.rttm ...   bit-exact ground truth per conversation
      scripts/conv_0000.json    full generation audit trail
      manifest.json             per-conversation records and totals
      lists/                    protocol files (written by emit_protocol)
      registry.json             protocol name -> file paths

Conversation i derives its seed from (master_seed, i), so corpora are
reproducible regardless of worker count, and growing a corpus never changes
already-generated conversations.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .audio import PlacedWaveform, mix, resample_linear, write_wav
from .conversation import (
    ScriptConfig,
    generate_script,
    resolve_timeline,
    script_to_json,
    utterance_times,
)
from .rttm import save_rttm, write_uri_list
from .seeding import shuffled, stable_hash64
from .tts import (
    BackendUnavailableError,
    EmptyTextError,
    MalformedAudioResponseError,
    TtsBackend,
    TtsRequest,
    UnknownVoiceError,
)

__all__ = [
    "SESSION_RATE",
    "CorpusConfig",
    "ConversationRecord",
    "CorpusManifest",
    "ProtocolSplit",
    "ChunkEntry",
    "ChunkManifest",
    "EmptyManifestError",
    "generate_corpus",
    "save_manifest",
    "load_manifest",
    "partition",
    "emit_protocol",
    "load_registry",
    "enumerate_chunks",
    "chunks_to_json",
]

log = logging.getLogger(__name__)

SESSION_RATE = 16000
MANIFEST_SCHEMA = "manifest@1"
REGISTRY_SCHEMA = "registry@1"
CHUNKS_SCHEMA = "chunks@1"

_NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

BACKEND_ERRORS = (
    BackendUnavailableError,
    UnknownVoiceError,
    MalformedAudioResponseError,
    EmptyTextError,
)


class EmptyManifestError(ValueError):
    """No conversations to work with."""


@dataclass(frozen=True)
class CorpusConfig:
    name: str
    script_config: ScriptConfig
    num_conversations: int
    output_root: Path
    master_seed: int = 0
    partition_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_root", Path(self.output_root))
        object.__setattr__(self, "partition_ratios", tuple(self.partition_ratios))
        if not _NAME_PATTERN.match(self.name):
            raise ValueError(f"corpus name {self.name!r} is not a valid identifier")
        if self.num_conversations < 0:
            raise ValueError("num_conversations cannot be negative")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        _check_ratios(self.partition_ratios)


def _check_ratios(ratios) -> None:
    if len(ratios) != 3:
        raise ValueError("exactly three partition ratios required")
    if any(r < 0 for r in ratios):
        raise ValueError("partition ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"partition ratios must sum to 1, got {sum(ratios)!r}")


@dataclass(frozen=True)
class ConversationRecord:
    conversation_id: str
    wav_path: str
    rttm_path: str
    duration: float
    num_speakers: int
    overlap_duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.num_speakers < 1:
            raise ValueError("num_speakers must be at least 1")
        if self.overlap_duration < 0:
            raise ValueError("overlap_duration cannot be negative")


@dataclass(frozen=True)
class CorpusManifest:
    name: str
    records: tuple[ConversationRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.conversation_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("conversation ids must be unique")

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def total_audio_seconds(self) -> float:
        return sum(r.duration for r in self.records)

    @property
    def total_overlap_seconds(self) -> float:
        return sum(r.overlap_duration for r in self.records)

    @property
    def audio_hours(self) -> float:
        return self.total_audio_seconds / 3600

    @property
    def overlap_hours(self) -> float:
        return self.total_overlap_seconds / 3600

    def record_for(self, conversation_id: str) -> ConversationRecord:
        for record in self.records:
            if record.conversation_id == conversation_id:
                return record
        raise KeyError(conversation_id)


@dataclass(frozen=True)
class ProtocolSplit:
    train: tuple[str, ...]
    development: tuple[str, ...]
    test: tuple[str, ...]

    def __post_init__(self) -> None:
        for name in ("train", "development", "test"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        combined = self.train + self.development + self.test
        if len(set(combined)) != len(combined):
            raise ValueError("protocol subsets must be pairwise disjoint")

    def subsets(self) -> dict[str, tuple[str, ...]]:
        return {"train": self.train, "development": self.development, "test": self.test}


@dataclass(frozen=True)
class ChunkEntry:
    conversation_id: str
    start: float
    duration: float


@dataclass(frozen=True)
class ChunkManifest:
    entries: tuple[ChunkEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)


def _conversation_id(index: int) -> str:
    return f"conv_{index:04d}"


def _render_conversation(
    config: CorpusConfig, backend: TtsBackend, index: int
) -> ConversationRecord:
    conversation_id = _conversation_id(index)
    seed = stable_hash64(config.master_seed, index)
    script_config = dataclasses.replace(config.script_config, seed=seed)
    script = generate_script(script_config, conversation_id)

    waveforms = []
    for utterance in script.utterances:
        voice = script.voice_for(utterance.speaker)
        rendered = backend.synthesize(TtsRequest(utterance.text, voice, SESSION_RATE))
        if rendered.sample_rate != SESSION_RATE:
            rendered = resample_linear(rendered, SESSION_RATE)
        waveforms.append(rendered)

    durations = [w.duration for w in waveforms]
    annotation = resolve_timeline(script, durations)
    spans = utterance_times(script, durations)
    mixed = mix(
        [PlacedWaveform(w, span.start) for w, span in zip(waveforms, spans)],
        SESSION_RATE,
    )

    root = config.output_root
    write_wav(mixed, root / "wav" / f"{conversation_id}.wav")
    save_rttm({conversation_id: annotation}, root / "rttm" / f"{conversation_id}.rttm")
    script_path = root / "scripts" / f"{conversation_id}.json"
    script_path.write_text(
        json.dumps(script_to_json(script), indent=2, sort_keys=True) + "\n"
    )
    return ConversationRecord(
        conversation_id=conversation_id,
        wav_path=f"wav/{conversation_id}.wav",
        rttm_path=f"rttm/{conversation_id}.rttm",
        duration=mixed.duration,
        num_speakers=len(annotation.speakers()),
        overlap_duration=annotation.overlap_regions().duration,
    )


def _delete_conversation_files(config: CorpusConfig, record: ConversationRecord) -> None:
    root = config.output_root
    for path in (
        root / record.wav_path,
        root / record.rttm_path,
        root / "scripts" / f"{record.conversation_id}.json",
    ):
        path.unlink(missing_ok=True)


def _render_batch(
    config: CorpusConfig,
    backend: TtsBackend,
    indices: range,
    jobs: int,
    on_error: str,
) -> list[ConversationRecord | None]:
    def run(index: int) -> ConversationRecord | None:
        try:
            return _render_conversation(config, backend, index)
        except BACKEND_ERRORS:
            if on_error == "skip":
                log.warning("skipping %s: backend failure", _conversation_id(index))
                return None
            raise

    if jobs <= 1 or len(indices) <= 1:
        return [run(i) for i in indices]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, indices))


def generate_corpus(
    config: CorpusConfig,
    backend: TtsBackend,
    *,
    jobs: int = 1,
    on_error: str = "fail",
    target_hours: float | None = None,
    max_conversations: int = 100_000,
) -> CorpusManifest:
    """Render conversations and write the corpus tree plus manifest.json.

    With target_hours set, conversations are generated in index order until
    the accumulated audio reaches the target; the crossing conversation is
    kept, so the total may overshoot. The resulting corpus is identical for
    any jobs value because conversation seeds depend only on the index.
    """
    if on_error not in ("fail", "skip"):
        raise ValueError(f"on_error must be 'fail' or 'skip', got {on_error!r}")
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    if target_hours is not None and target_hours <= 0:
        raise ValueError("target_hours must be positive")

    root = config.output_root
    for leaf in ("wav", "rttm", "scripts"):
        (root / leaf).mkdir(parents=True, exist_ok=True)

    records: list[ConversationRecord] = []
    if target_hours is None:
        rendered = _render_batch(
            config, backend, range(config.num_conversations), jobs, on_error
        )
        records = [r for r in rendered if r is not None]
    else:
        target_seconds = target_hours * 3600
        accumulated = 0.0
        batch_size = max(jobs, 4)
        index = 0
        done = False
        while not done:
            if index >= max_conversations:
                raise RuntimeError(
                    f"target of {target_hours} h not reached after {index} conversations"
                )
            batch = range(index, min(index + batch_size, max_conversations))
            rendered = _render_batch(config, backend, batch, jobs, on_error)
            for record in rendered:
                if record is None:
                    continue
                if done:
                    # rendered past the stopping point; remove the overshoot
                    _delete_conversation_files(config, record)
                    continue
                records.append(record)
                accumulated += record.duration
                if accumulated >= target_seconds:
                    done = True
            index = batch.stop

    manifest = CorpusManifest(config.name, tuple(records))
    save_manifest(manifest, root / "manifest.json")
    return manifest


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    payload = {
        "schema": MANIFEST_SCHEMA,
        "name": manifest.name,
        "records": [
            {
                "conversation_id": r.conversation_id,
                "wav": r.wav_path,
                "rttm": r.rttm_path,
                "duration": r.duration,
                "num_speakers": r.num_speakers,
                "overlap_duration": r.overlap_duration,
            }
            for r in manifest.records
        ],
        "totals": {
            "count": manifest.count,
            "audio_hours": manifest.audio_hours,
            "overlap_hours": manifest.overlap_hours,
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_manifest(path: str | Path) -> CorpusManifest:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"unsupported manifest schema {payload.get('schema')!r}")
    manifest = CorpusManifest(
        payload["name"],
        tuple(
            ConversationRecord(
                conversation_id=r["conversation_id"],
                wav_path=r["wav"],
                rttm_path=r["rttm"],
                duration=r["duration"],
                num_speakers=r["num_speakers"],
                overlap_duration=r["overlap_duration"],
            )
            for r in payload["records"]
        ),
    )
    totals = payload.get("totals", {})
    if totals.get("count") != manifest.count:
        raise ValueError("manifest totals disagree with its records")
    if totals.get("audio_hours") != manifest.audio_hours:
        raise ValueError("manifest audio total disagrees with its records")
    return manifest


def partition(
    manifest: CorpusManifest,
    ratios: tuple[float, float, float],
    seed: int,
) -> ProtocolSplit:
    """Conversation-level split: floor(N*r) train and dev, remainder test."""
    _check_ratios(ratios)
    if not manifest.records:
        raise EmptyManifestError("cannot partition an empty manifest")
    ids = [r.conversation_id for r in manifest.records]
    order = shuffled(ids, seed, "partition")
    count = len(order)
    # the epsilon keeps N*r from landing a hair under an exact integer
    n_train = int(count * ratios[0] + 1e-9)
    n_dev = int(count * ratios[1] + 1e-9)
    return ProtocolSplit(
        train=tuple(order[:n_train]),
        development=tuple(order[n_train : n_train + n_dev]),
        test=tuple(order[n_train + n_dev :]),
    )


def emit_protocol(
    split: ProtocolSplit, manifest: CorpusManifest, output_root: str | Path, name: str
) -> dict:
    """Write .lst/.rttm/.uem per subset plus the registry document.

    output_root must be the corpus root the manifest's relative paths hang off.
    """
    if not _NAME_PATTERN.match(name):
        raise ValueError(f"protocol name {name!r} is not a valid identifier")
    root = Path(output_root)
    lists_dir = root / "lists"
    lists_dir.mkdir(parents=True, exist_ok=True)
    written: dict = {}
    registry_subsets = {}
    for subset, ids in split.subsets().items():
        base = f"{name}.{subset}"
        uri_path = lists_dir / f"{base}.lst"
        write_uri_list(list(ids), uri_path)

        rttm_path = lists_dir / f"{base}.rttm"
        rttm_path.write_text(
            "".join((root / manifest.record_for(uri).rttm_path).read_text() for uri in sorted(ids))
        )

        uem_path = lists_dir / f"{base}.uem"
        uem_path.write_text(
            "".join(
                f"{uri} 1 0.000 {manifest.record_for(uri).duration:.3f}\n"
                for uri in sorted(ids)
            )
        )
        written[subset] = {"uris": uri_path, "rttm": rttm_path, "uem": uem_path}
        registry_subsets[subset] = {
            "uris": f"lists/{base}.lst",
            "rttm": f"lists/{base}.rttm",
            "uem": f"lists/{base}.uem",
        }

    registry_path = root / "registry.json"
    registry_path.write_text(
        json.dumps(
            {"schema": REGISTRY_SCHEMA, "protocol": name, "subsets": registry_subsets},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    written["registry"] = registry_path
    return written


def load_registry(path: str | Path) -> dict:
    """Registry with every referenced path resolved against its location."""
    path = Path(path)
    payload = json.loads(path.read_text())
    if payload.get("schema") != REGISTRY_SCHEMA:
        raise ValueError(f"unsupported registry schema {payload.get('schema')!r}")
    resolved = {"protocol": payload["protocol"], "subsets": {}}
    for subset, files in payload["subsets"].items():
        resolved["subsets"][subset] = {
            kind: path.parent / relative for kind, relative in files.items()
        }
    return resolved


def enumerate_chunks(
    manifest: CorpusManifest,
    subset_ids,
    chunk_duration: float = 2.0,
    step: float | None = None,
) -> ChunkManifest:
    """Fixed-length training windows; a chunk must fit inside its conversation."""
    if chunk_duration <= 0:
        raise ValueError("chunk_duration must be positive")
    if step is None:
        step = chunk_duration
    if step <= 0:
        raise ValueError("step must be positive")
    entries = []
    for conversation_id in sorted(subset_ids):
        duration = manifest.record_for(conversation_id).duration
        index = 0
        while index * step + chunk_duration <= duration + 1e-9:
            entries.append(ChunkEntry(conversation_id, index * step, chunk_duration))
            index += 1
    return ChunkManifest(tuple(entries))


def chunks_to_json(chunks: ChunkManifest, chunk_duration: float, step: float) -> dict:
    return {
        "schema": CHUNKS_SCHEMA,
        "chunk_duration": chunk_duration,
        "step": step,
        "entries": [
            {"conversation_id": e.conversation_id, "start": e.start, "duration": e.duration}
            for e in chunks.entries
        ],
    }
