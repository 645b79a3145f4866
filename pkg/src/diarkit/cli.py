"""Command-line entry point.

Subcommands cover the full pipeline: synth renders a corpus (and its protocol
files when a partition is possible), protocol re-partitions an existing
manifest, score evaluates hypothesis RTTM against reference RTTM, chunks
enumerates fixed-length training windows.

Exit codes are part of the contract so CI can gate on them:
    0 success, 2 configuration error, 3 backend failure,
    4 hypothesis names an unknown recording, 5 empty reference.

With --format json, stdout carries only the JSON document; everything else
goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .conversation import ScriptConfig, VoiceSpec
from .core import Annotation
from .corpus import (
    BACKEND_ERRORS,
    CorpusConfig,
    CorpusManifest,
    EmptyManifestError,
    chunks_to_json,
    emit_protocol,
    enumerate_chunks,
    generate_corpus,
    load_manifest,
    partition,
)
from .der import DerReport, EmptyReferenceError, compute_der
from .detection import DetectionReport, score_detection
from .report import aggregate, aggregate_detection, format_percent
from .rttm import load_rttm, read_uri_list
from .tts import HttpTtsBackend, StubBackend, TtsBackend

__all__ = ["main", "entrypoint", "FileIdMismatchError"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_FILE_ID = 4
EXIT_EMPTY_REFERENCE = 5

DEFAULT_TEXTS = (
    "selamat pagi dan selamat datang",
    "terima kasih atas waktunya hari ini",
    "menurut saya hasilnya sudah cukup jelas",
    "apakah ada pertanyaan sejauh ini",
    "mari kita bahas poin berikutnya",
    "saya kurang setuju dengan usulan itu",
    "baik nanti saya kirim ringkasannya",
    "sampai jumpa di pertemuan berikutnya",
)


class ConfigError(ValueError):
    """Bad flag combination or config file content."""


class FileIdMismatchError(ValueError):
    """Hypothesis refers to a recording the reference does not contain."""


def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{flag} expects two comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--ratios expects three comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--ratios: {exc}") from exc


def _script_config_from_payload(payload: dict, base_dir: Path) -> ScriptConfig:
    if "speakers" not in payload:
        raise ConfigError("script config needs a 'speakers' list")
    speakers = tuple(
        VoiceSpec(
            speaker=entry["speaker"],
            voice_name=entry["voice"],
            rate=float(entry.get("rate", 0.0)),
            pitch=float(entry.get("pitch", 0.0)),
        )
        for entry in payload["speakers"]
    )
    if "texts" in payload:
        texts = tuple(payload["texts"])
    elif "texts_file" in payload:
        texts = _read_texts(base_dir / payload["texts_file"])
    else:
        raise ConfigError("script config needs 'texts' or 'texts_file'")
    return ScriptConfig(
        speakers=speakers,
        text_source=texts,
        num_utterances=int(payload.get("num_utterances", 20)),
        gap_range=tuple(payload.get("gap_range", (0.2, 1.0))),
        overlap_probability=float(payload.get("overlap_probability", 0.3)),
        overlap_range=tuple(payload.get("overlap_range", (0.3, 1.0))),
    )


def _read_texts(path: Path) -> tuple[str, ...]:
    lines = tuple(line.strip() for line in path.read_text().splitlines() if line.strip())
    if not lines:
        raise ConfigError(f"text file {path} is empty")
    return lines


def _corpus_config_from_args(args) -> CorpusConfig:
    if args.config is not None:
        config_path = Path(args.config)
        try:
            payload = json.loads(config_path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if "script" not in payload:
            raise ConfigError("config file needs a 'script' section")
        script_config = _script_config_from_payload(payload["script"], config_path.parent)
        name = payload.get("name", "corpus")
        num_conversations = int(payload.get("num_conversations", 0))
        master_seed = int(payload.get("master_seed", 0))
        ratios = tuple(payload.get("partition_ratios", (0.8, 0.1, 0.1)))
        output_root = payload.get("output_root")
    else:
        if args.num_speakers < 2:
            raise ConfigError("--num-speakers must be at least 2")
        speakers = tuple(
            VoiceSpec(f"spk{i}", f"voice{i}") for i in range(args.num_speakers)
        )
        texts = _read_texts(Path(args.texts_file)) if args.texts_file else DEFAULT_TEXTS
        script_config = ScriptConfig(
            speakers=speakers,
            text_source=texts,
            num_utterances=args.num_utterances,
            gap_range=_parse_pair(args.gap, "--gap"),
            overlap_probability=args.overlap_probability,
            overlap_range=_parse_pair(args.overlap, "--overlap"),
        )
        name = args.name
        num_conversations = args.num_conversations
        master_seed = 0
        ratios = _parse_ratios(args.ratios)
        output_root = None

    if args.seed is not None:
        master_seed = args.seed
    if args.output_root is not None:
        output_root = args.output_root
    if output_root is None:
        raise ConfigError("an output root is required (--output-root or config output_root)")
    if args.hours is None and num_conversations <= 0:
        raise ConfigError("need --hours or a positive num_conversations")
    return CorpusConfig(
        name=name,
        script_config=script_config,
        num_conversations=num_conversations,
        output_root=Path(output_root),
        master_seed=master_seed,
        partition_ratios=ratios,
    )


def _make_backend(args) -> TtsBackend:
    if args.backend == "stub":
        return StubBackend()
    if args.endpoint is None:
        raise ConfigError("--backend http requires --endpoint")
    return HttpTtsBackend(args.endpoint, max_in_flight=max(args.jobs, 1))


def _cmd_synth(args) -> int:
    config = _corpus_config_from_args(args)
    backend = _make_backend(args)
    manifest = generate_corpus(
        config,
        backend,
        jobs=args.jobs,
        on_error=args.on_error,
        target_hours=args.hours,
    )
    summary = [
        f"conversations: {manifest.count}",
        f"audio_hours: {manifest.audio_hours:.4f}",
        f"manifest: {config.output_root / 'manifest.json'}",
    ]
    if manifest.records:
        split = partition(manifest, config.partition_ratios, config.master_seed)
        written = emit_protocol(split, manifest, config.output_root, config.name)
        summary.append(f"registry: {written['registry']}")
    else:
        log.warning("empty corpus, protocol files not written")
    print("\n".join(summary))
    return EXIT_OK


def _cmd_protocol(args) -> int:
    manifest = load_manifest(args.manifest)
    ratios = _parse_ratios(args.ratios)
    split = partition(manifest, ratios, args.seed if args.seed is not None else 0)
    output_root = Path(args.manifest).parent
    written = emit_protocol(split, manifest, output_root, args.name)
    for subset in ("train", "development", "test"):
        print(f"{subset}: {len(getattr(split, subset))}")
    print(f"registry: {written['registry']}")
    return EXIT_OK


def _der_payload(report: DerReport, include_mapping: bool = True) -> dict:
    payload = {
        "der": report.der,
        "fa": report.t_false_alarm,
        "miss": report.t_miss,
        "conf": report.t_confusion,
        "total": report.t_total,
    }
    if include_mapping:
        payload["mapping"] = [list(pair) for pair in report.mapping.sorted_pairs()]
    return payload


def _detection_payload(report: DetectionReport) -> dict:
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "tp": report.tp_frames,
        "fp": report.fp_frames,
        "fn": report.fn_frames,
        "tn": report.tn_frames,
        "frame_size": report.frame_size,
    }


def _score_text(rows, overall_der, overall_det, frame_size) -> str:
    names = [name for name, _, _ in rows] + ["OVERALL"]
    width = max(len(name) for name in names)
    lines = [
        f"{'file'.ljust(width)}      DER        fa      miss      conf     total"
    ]
    for name, der_report, _ in rows:
        lines.append(
            f"{name.ljust(width)}  {format_percent(der_report.der):>7}"
            f"  {der_report.t_false_alarm:8.3f}  {der_report.t_miss:8.3f}"
            f"  {der_report.t_confusion:8.3f}  {der_report.t_total:8.3f}"
        )
    lines.append(
        f"{'OVERALL'.ljust(width)}  {format_percent(overall_der.der):>7}"
        f"  {overall_der.t_false_alarm:8.3f}  {overall_der.t_miss:8.3f}"
        f"  {overall_der.t_confusion:8.3f}  {overall_der.t_total:8.3f}"
    )
    lines.append("")
    lines.append(f"overlap detection at frame {frame_size:.3f} s")
    lines.append(f"{'file'.ljust(width)}  precision    recall  f1-score")
    for name, _, det_report in rows:
        lines.append(
            f"{name.ljust(width)}  {format_percent(det_report.precision):>9}"
            f"  {format_percent(det_report.recall):>8}  {format_percent(det_report.f1):>8}"
        )
    lines.append(
        f"{'OVERALL'.ljust(width)}  {format_percent(overall_det.precision):>9}"
        f"  {format_percent(overall_det.recall):>8}  {format_percent(overall_det.f1):>8}"
    )
    return "".join(line + "\n" for line in lines)


def _cmd_score(args) -> int:
    reference = load_rttm(args.reference)
    hypothesis = load_rttm(args.hypothesis)
    if not reference:
        raise EmptyReferenceError(f"reference {args.reference} contains no speech")
    unknown = sorted(set(hypothesis) - set(reference))
    if unknown:
        raise FileIdMismatchError(
            f"hypothesis names recordings missing from the reference: {', '.join(unknown)}"
        )

    rows = []
    for recording_id in sorted(reference):
        ref_annotation = reference[recording_id]
        hyp_annotation = hypothesis.get(recording_id, Annotation(recording_id))
        der_report = compute_der(
            ref_annotation, hyp_annotation, collar=args.collar, skip_overlap=args.skip_overlap
        )
        det_report = score_detection(ref_annotation, hyp_annotation, frame_size=args.frame)
        rows.append((recording_id, der_report, det_report))

    overall_der = aggregate([r for _, r, _ in rows])
    overall_det = aggregate_detection([d for _, _, d in rows])
    if args.format == "json":
        payload = {
            "files": [
                {
                    "file_id": name,
                    "der": _der_payload(der_report),
                    "detection": _detection_payload(det_report),
                }
                for name, der_report, det_report in rows
            ],
            "overall": {
                "der": _der_payload(overall_der, include_mapping=False),
                "detection": _detection_payload(overall_det),
            },
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(_score_text(rows, overall_der, overall_det, args.frame), end="")
    return EXIT_OK


def _cmd_chunks(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.subset == "all":
        ids = [record.conversation_id for record in manifest.records]
    else:
        ids = read_uri_list(args.subset)
    step = args.step if args.step is not None else args.duration
    chunks = enumerate_chunks(manifest, ids, args.duration, step)
    payload = chunks_to_json(chunks, args.duration, step)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output is not None:
        Path(args.output).write_text(text)
        log.info("wrote %d chunks to %s", len(chunks), args.output)
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diarkit",
        description="Synthetic conversation corpora and diarization scoring.",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--output-root", default=None, help="corpus output directory")
    parser.add_argument(
        "--jobs", type=int, default=os.cpu_count() or 1, help="max parallel workers"
    )
    parser.add_argument("--log-level", default="WARNING", help="stderr logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="render a corpus with ground-truth RTTM")
    synth.add_argument("--config", default=None, help="corpus config JSON file")
    synth.add_argument("--backend", choices=("stub", "http"), default="stub")
    synth.add_argument("--endpoint", default=None, help="TTS service URL for --backend http")
    synth.add_argument(
        "--hours", type=float, default=None, help="generate until this many hours of audio"
    )
    synth.add_argument("--on-error", choices=("fail", "skip"), default="fail")
    synth.add_argument("--name", default="corpus", help="corpus and protocol name")
    synth.add_argument("--num-conversations", type=int, default=0)
    synth.add_argument("--num-speakers", type=int, default=2)
    synth.add_argument("--texts-file", default=None, help="utterance texts, one per line")
    synth.add_argument("--num-utterances", type=int, default=20)
    synth.add_argument("--gap", default="0.2,1.0", help="inter-turn silence range, seconds")
    synth.add_argument("--overlap-probability", type=float, default=0.3)
    synth.add_argument("--overlap", default="0.3,1.0", help="overlap duration range, seconds")
    synth.add_argument("--ratios", default="0.8,0.1,0.1", help="train,dev,test ratios")
    synth.set_defaults(handler=_cmd_synth)

    protocol = commands.add_parser("protocol", help="partition a manifest and emit list files")
    protocol.add_argument("--manifest", required=True)
    protocol.add_argument("--name", required=True)
    protocol.add_argument("--ratios", default="0.8,0.1,0.1")
    protocol.set_defaults(handler=_cmd_protocol)

    score = commands.add_parser("score", help="DER and overlap detection metrics")
    score.add_argument("--reference", required=True, help="ground-truth RTTM")
    score.add_argument("--hypothesis", required=True, help="system output RTTM")
    score.add_argument("--collar", type=float, default=0.0)
    score.add_argument("--skip-overlap", action="store_true")
    score.add_argument("--frame", type=float, default=0.01, help="detection frame size, seconds")
    score.add_argument("--format", choices=("table", "json"), default="table")
    score.set_defaults(handler=_cmd_score)

    chunks = commands.add_parser("chunks", help="enumerate fixed-length training windows")
    chunks.add_argument("--manifest", required=True)
    chunks.add_argument(
        "--subset", default="all", help="subset .lst file, or 'all' for the whole manifest"
    )
    chunks.add_argument("--duration", type=float, default=2.0)
    chunks.add_argument("--step", type=float, default=None)
    chunks.add_argument("--output", default=None, help="write the chunk manifest here")
    chunks.set_defaults(handler=_cmd_chunks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=args.log_level.upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except EmptyReferenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_REFERENCE
    except FileIdMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE_ID
    except BACKEND_ERRORS as exc:
        print(f"error: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ConfigError, EmptyManifestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
