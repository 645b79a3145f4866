"""Corpus-level result aggregation and comparison rendering.

Aggregation is micro-averaging throughout: time components and frame counts
are summed across recordings first, ratios are computed once from the sums.
Averaging per-file percentages would weight a 10 s file like a 10 min one.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .der import DerReport, SpeakerMapping
from .detection import DetectionReport

__all__ = [
    "EmptyInputError",
    "SystemResult",
    "aggregate",
    "aggregate_detection",
    "format_percent",
    "render_comparison",
]

METRIC_LABELS = ("Precision", "Recall", "F1-Score", "DER")
FORMATS = ("table", "csv", "json")


class EmptyInputError(ValueError):
    """Nothing to aggregate or render."""


@dataclass(frozen=True)
class SystemResult:
    system_name: str
    der_report: DerReport
    detection_report: DetectionReport

    def __post_init__(self) -> None:
        if not self.system_name.strip():
            raise ValueError("system_name cannot be blank")


def aggregate(per_recording: list[DerReport]) -> DerReport:
    """Pool time components across recordings; the ratio comes last."""
    if not per_recording:
        raise EmptyInputError("no reports to aggregate")
    if len(per_recording) == 1:
        return per_recording[0]
    return DerReport(
        t_false_alarm=sum(r.t_false_alarm for r in per_recording),
        t_miss=sum(r.t_miss for r in per_recording),
        t_confusion=sum(r.t_confusion for r in per_recording),
        t_total=sum(r.t_total for r in per_recording),
        mapping=SpeakerMapping(frozenset()),
    )


def aggregate_detection(per_recording: list[DetectionReport]) -> DetectionReport:
    if not per_recording:
        raise EmptyInputError("no reports to aggregate")
    frame_sizes = {r.frame_size for r in per_recording}
    if len(frame_sizes) > 1:
        raise ValueError(f"cannot pool frame counts at mixed frame sizes {sorted(frame_sizes)}")
    return DetectionReport(
        tp_frames=sum(r.tp_frames for r in per_recording),
        fp_frames=sum(r.fp_frames for r in per_recording),
        fn_frames=sum(r.fn_frames for r in per_recording),
        tn_frames=sum(r.tn_frames for r in per_recording),
        frame_size=per_recording[0].frame_size,
    )


def format_percent(value: float) -> str:
    """Two decimals, ties away from zero, judged on the shortest decimal form."""
    quantized = (Decimal(repr(value)) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{quantized}%"


def _metric_rows(results: list[SystemResult]) -> list[tuple[str, list[float]]]:
    return [
        ("Precision", [r.detection_report.precision for r in results]),
        ("Recall", [r.detection_report.recall for r in results]),
        ("F1-Score", [r.detection_report.f1 for r in results]),
        ("DER", [r.der_report.der for r in results]),
    ]


def _render_table(results: list[SystemResult]) -> str:
    names = [r.system_name for r in results]
    rows = [(label, [format_percent(v) for v in values]) for label, values in _metric_rows(results)]
    label_width = max(len("Metric"), *(len(label) for label, _ in rows))
    widths = [
        max(len(name), *(len(cells[i]) for _, cells in rows)) for i, name in enumerate(names)
    ]
    lines = [
        "  ".join(
            ["Metric".ljust(label_width)] + [name.rjust(widths[i]) for i, name in enumerate(names)]
        )
    ]
    for label, cells in rows:
        lines.append(
            "  ".join([label.ljust(label_width)] + [c.rjust(widths[i]) for i, c in enumerate(cells)])
        )
    return "".join(line + "\n" for line in lines)


def _render_csv(results: list[SystemResult]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["metric"] + [r.system_name for r in results])
    for label, values in _metric_rows(results):
        writer.writerow([label] + [format_percent(v).rstrip("%") for v in values])
    return buffer.getvalue()


def _render_json(results: list[SystemResult]) -> str:
    systems = []
    for result in results:
        systems.append(
            {
                "name": result.system_name,
                "precision": result.detection_report.precision,
                "recall": result.detection_report.recall,
                "f1": result.detection_report.f1,
                "der": result.der_report.der,
                "components": {
                    "fa": result.der_report.t_false_alarm,
                    "miss": result.der_report.t_miss,
                    "conf": result.der_report.t_confusion,
                    "total": result.der_report.t_total,
                },
            }
        )
    return json.dumps({"systems": systems}, indent=2, sort_keys=True) + "\n"


def render_comparison(results: list[SystemResult], format: str = "table") -> str:
    """Systems as columns in input order, metric rows Precision/Recall/F1-Score/DER."""
    if not results:
        raise EmptyInputError("no systems to render")
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if format == "table":
        return _render_table(results)
    if format == "csv":
        return _render_csv(results)
    return _render_json(results)
