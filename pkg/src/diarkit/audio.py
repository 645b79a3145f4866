"""Sample-accurate mixing of placed waveforms and PCM16 WAV file handling."""

from __future__ import annotations

import hashlib
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tts import Waveform

__all__ = [
    "PlacedWaveform",
    "SampleRateMismatchError",
    "UnsupportedWavLayoutError",
    "mix",
    "resample_linear",
    "write_wav",
    "read_wav",
]

PEAK_CEILING = 0.99


class SampleRateMismatchError(ValueError):
    """An input waveform is not at the session sample rate."""


class UnsupportedWavLayoutError(ValueError):
    """The WAV file is not mono 16-bit PCM."""


@dataclass(frozen=True)
class PlacedWaveform:
    waveform: Waveform
    onset: float

    def __post_init__(self) -> None:
        if self.onset < 0:
            raise ValueError("onset must be non-negative")


def _placement_key(placed: PlacedWaveform, rate: int) -> tuple:
    digest = hashlib.blake2b(placed.waveform.samples.tobytes(), digest_size=16).digest()
    return (round(placed.onset * rate), len(placed.waveform), digest)


def mix(placed: list[PlacedWaveform], session_rate: int) -> Waveform:
    """Overlay waveforms at their onsets; sums where they overlap.

    Inputs are accumulated in a canonical order (start sample, length,
    content digest), so any permutation of the placed list produces
    byte-identical output. If the summed peak exceeds 0.99 the whole mix is
    rescaled once; untouched regions stay exactly zero and regions covered
    by a single input reproduce its samples exactly when no rescale fires.
    """
    if session_rate <= 0:
        raise ValueError("session_rate must be positive")
    for item in placed:
        if item.waveform.sample_rate != session_rate:
            raise SampleRateMismatchError(
                f"input at {item.waveform.sample_rate} Hz in a {session_rate} Hz mix"
            )
    length = 0
    ordered = sorted(placed, key=lambda item: _placement_key(item, session_rate))
    for item in ordered:
        length = max(length, round(item.onset * session_rate) + len(item.waveform))
    buffer = np.zeros(length)
    for item in ordered:
        start = round(item.onset * session_rate)
        buffer[start : start + len(item.waveform)] += item.waveform.samples

    peak = float(np.max(np.abs(buffer))) if length else 0.0
    if peak > PEAK_CEILING:
        loudest = np.abs(buffer) == peak
        signs = np.sign(buffer[loudest])
        buffer *= PEAK_CEILING / peak
        np.clip(buffer, -PEAK_CEILING, PEAK_CEILING, out=buffer)
        # pin the true peak to the ceiling; rounding in the rescale can
        # otherwise leave it one ulp off
        buffer[loudest] = signs * PEAK_CEILING
    return Waveform(buffer, session_rate)


def resample_linear(waveform: Waveform, target_rate: int) -> Waveform:
    """Linear-interpolation resampling; keeps duration within one sample."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == waveform.sample_rate:
        return waveform
    source = len(waveform)
    if source == 0:
        return Waveform(np.zeros(0), target_rate)
    count = (source * target_rate + waveform.sample_rate // 2) // waveform.sample_rate
    positions = np.arange(count) * (waveform.sample_rate / target_rate)
    resampled = np.interp(positions, np.arange(source), waveform.samples)
    return Waveform(resampled, target_rate)


def write_wav(waveform: Waveform, path: str | Path) -> None:
    """RIFF/WAVE PCM16 mono little-endian; round-half-away quantization."""
    magnitudes = np.floor(np.abs(waveform.samples) * 32767 + 0.5)
    quantized = (np.sign(waveform.samples) * magnitudes).astype("<i2")
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(waveform.sample_rate)
        writer.writeframes(quantized.tobytes())


def read_wav(path: str | Path) -> Waveform:
    try:
        with wave.open(str(path), "rb") as reader:
            if reader.getnchannels() != 1 or reader.getsampwidth() != 2:
                raise UnsupportedWavLayoutError(f"{path}: only mono PCM16 is supported")
            if reader.getcomptype() != "NONE":
                raise UnsupportedWavLayoutError(f"{path}: compressed WAV is not supported")
            rate = reader.getframerate()
            frames = reader.readframes(reader.getnframes())
    except wave.Error as error:
        raise UnsupportedWavLayoutError(f"{path}: {error}") from error
    values = np.frombuffer(frames, dtype="<i2").astype(np.float64)
    # divide by the writer's scale so write->read is within half a step;
    # clamp the one foreign value (-32768) that would land below -1
    return Waveform(np.maximum(values / 32767, -1.0), rate)
