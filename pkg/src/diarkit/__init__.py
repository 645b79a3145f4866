"""Synthetic conversation corpus generation and diarization scoring toolkit.

The pipeline in one sentence: a seeded script generator plans multi-speaker
conversations with engineered overlaps, a TTS backend (deterministic stub or
HTTP service) renders each utterance, the mixer lays them on a shared session
timeline, and every conversation ships with bit-exact RTTM ground truth plus
leakage-free train/dev/test protocol files; the scoring half computes DER
against an optimal speaker mapping and frame-based overlap-detection metrics.
"""

from .audio import PlacedWaveform, mix, read_wav, resample_linear, write_wav
from .conversation import (
    ConversationScript,
    ScriptConfig,
    UtteranceSpec,
    VoiceSpec,
    generate_script,
    resolve_timeline,
    script_from_json,
    script_to_json,
    utterance_times,
)
from .core import Annotation, Segment, TimeSpan, Timeline
from .corpus import (
    ChunkEntry,
    ChunkManifest,
    ConversationRecord,
    CorpusConfig,
    CorpusManifest,
    ProtocolSplit,
    emit_protocol,
    enumerate_chunks,
    generate_corpus,
    load_manifest,
    load_registry,
    partition,
    save_manifest,
)
from .der import DerReport, SpeakerMapping, compute_der, optimal_mapping
from .detection import (
    DetectionReport,
    confusion_rates,
    f1_from_pr,
    frame_labels,
    score_detection,
)
from .report import SystemResult, aggregate, aggregate_detection, render_comparison
from .rttm import load_rttm, parse_rttm, read_uri_list, save_rttm, write_rttm, write_uri_list
from .tts import (
    HttpTtsBackend,
    RetryPolicy,
    StubBackend,
    TtsBackend,
    TtsRequest,
    Waveform,
    stub_waveform,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # timeline primitives
    "TimeSpan",
    "Timeline",
    "Segment",
    "Annotation",
    # rttm and list files
    "parse_rttm",
    "write_rttm",
    "load_rttm",
    "save_rttm",
    "read_uri_list",
    "write_uri_list",
    # scoring
    "DerReport",
    "SpeakerMapping",
    "compute_der",
    "optimal_mapping",
    "DetectionReport",
    "score_detection",
    "frame_labels",
    "f1_from_pr",
    "confusion_rates",
    # conversation planning
    "VoiceSpec",
    "ScriptConfig",
    "UtteranceSpec",
    "ConversationScript",
    "generate_script",
    "utterance_times",
    "resolve_timeline",
    "script_to_json",
    "script_from_json",
    # synthesis
    "Waveform",
    "TtsRequest",
    "TtsBackend",
    "StubBackend",
    "HttpTtsBackend",
    "RetryPolicy",
    "stub_waveform",
    # audio
    "PlacedWaveform",
    "mix",
    "resample_linear",
    "read_wav",
    "write_wav",
    # corpus and protocol
    "CorpusConfig",
    "ConversationRecord",
    "CorpusManifest",
    "ProtocolSplit",
    "ChunkEntry",
    "ChunkManifest",
    "generate_corpus",
    "save_manifest",
    "load_manifest",
    "partition",
    "emit_protocol",
    "load_registry",
    "enumerate_chunks",
    # reporting
    "SystemResult",
    "aggregate",
    "aggregate_detection",
    "render_comparison",
]
