"""Text-to-speech backends: a deterministic offline stub and an HTTP client.

The stub synthesizes a per-speaker harmonic tone whose duration follows a
fixed chars-to-seconds law, so corpora built with it are reproducible on any
machine: every sample is quantized to the 16-bit grid, which absorbs
last-bit libm differences between platforms.

The HTTP client speaks a minimal synthesis contract (JSON request in, WAV or
raw PCM16 bytes out) with bounded exponential-backoff retries. A bearer
token is read from DIARKIT_TTS_TOKEN when not passed explicitly.
"""

from __future__ import annotations

import io
import logging
import os
import threading
import time
import wave
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import requests

from .conversation import VoiceSpec
from .seeding import stable_hash64

__all__ = [
    "Waveform",
    "TtsRequest",
    "TtsBackend",
    "StubBackend",
    "HttpTtsBackend",
    "RetryPolicy",
    "EmptyTextError",
    "BackendUnavailableError",
    "RateLimitedError",
    "UnknownVoiceError",
    "MalformedAudioResponseError",
    "stub_waveform",
    "http_synthesize",
]

log = logging.getLogger(__name__)

TOKEN_ENV_VAR = "DIARKIT_TTS_TOKEN"
DEFAULT_SAMPLE_RATE = 16000

# stub duration law: 60 ms per character with a 200 ms floor
SECONDS_PER_CHAR = 0.06
MIN_STUB_SECONDS = 0.2
FADE_SECONDS = 0.010
STUB_PEAK = 0.3
HARMONIC_WEIGHTS = (0.6, 0.3, 0.1)


class EmptyTextError(ValueError):
    """Nothing to synthesize."""


class BackendUnavailableError(RuntimeError):
    """The synthesis service could not be reached, retries included."""


class RateLimitedError(BackendUnavailableError):
    """The service kept answering 429 until the retry budget ran out."""


class UnknownVoiceError(ValueError):
    """The service does not know the requested voice."""


class MalformedAudioResponseError(ValueError):
    """The service answered, but not with decodable mono PCM16 audio."""


class Waveform:
    """Mono audio: float64 samples in [-1, 1] at an integer sample rate."""

    __slots__ = ("samples", "sample_rate")

    def __init__(self, samples, sample_rate: int) -> None:
        array = np.asarray(samples, dtype=np.float64)
        if array.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if array.size and float(np.max(np.abs(array))) > 1.0:
            raise ValueError("sample amplitudes must not exceed 1")
        if not isinstance(sample_rate, (int, np.integer)) or sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {sample_rate!r}")
        array = array.copy()
        array.flags.writeable = False
        object.__setattr__(self, "samples", array)
        object.__setattr__(self, "sample_rate", int(sample_rate))

    def __setattr__(self, name, value):
        raise AttributeError("Waveform is immutable")

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    def __repr__(self) -> str:
        return f"Waveform({len(self)} samples @ {self.sample_rate} Hz)"

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class TtsRequest:
    text: str
    voice: VoiceSpec
    target_sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise EmptyTextError("request text is empty")
        if self.target_sample_rate <= 0:
            raise ValueError("target_sample_rate must be positive")


class TtsBackend(ABC):
    """Backend contract; outputs are validated here, not trusted."""

    def synthesize(self, request: TtsRequest) -> Waveform:
        waveform = self._render(request)
        if not isinstance(waveform, Waveform):
            raise TypeError(f"backend returned {type(waveform).__name__}, not Waveform")
        if len(waveform) == 0:
            raise MalformedAudioResponseError("backend returned zero-length audio")
        return waveform

    @abstractmethod
    def _render(self, request: TtsRequest) -> Waveform: ...


def stub_waveform(
    text: str, voice: VoiceSpec, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> Waveform:
    """Deterministic tone standing in for speech.

    Three harmonics of a speaker-keyed fundamental (110 Hz times 1 + k/8,
    k = hash(speaker) mod 8), scaled to a 0.3 peak, with 10 ms raised-cosine
    fades. Voice rate/pitch modifiers are deliberately ignored; the stub's
    job is timing realism, not prosody.
    """
    count = max(
        round(MIN_STUB_SECONDS * sample_rate),
        round(SECONDS_PER_CHAR * len(text) * sample_rate),
    )
    f0 = 110.0 * (1 + (stable_hash64(voice.speaker) % 8) / 8)
    t = np.arange(count) / sample_rate
    samples = np.zeros(count)
    for harmonic, weight in enumerate(HARMONIC_WEIGHTS, start=1):
        samples += weight * np.sin(2 * np.pi * harmonic * f0 * t)
    samples *= STUB_PEAK

    fade = round(FADE_SECONDS * sample_rate)
    if fade > 0:
        ramp = 0.5 * (1 - np.cos(np.pi * np.arange(min(fade, count)) / fade))
        samples[: ramp.size] *= ramp
        samples[-ramp.size :] *= ramp[::-1]

    # snap to the PCM16 grid: cross-platform determinism beats the last bit
    samples = np.round(samples * 32767) / 32767
    return Waveform(samples, sample_rate)


class StubBackend(TtsBackend):
    def _render(self, request: TtsRequest) -> Waveform:
        return stub_waveform(request.text, request.voice, request.target_sample_rate)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    base_delay: float = 0.5
    max_delay: float = 8.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.base_delay < 0 or self.max_delay < 0:
            raise ValueError("delays must be non-negative")

    def delay(self, attempt: int) -> float:
        return min(self.max_delay, self.base_delay * 2**attempt)


def _decode_wav_bytes(payload: bytes) -> Waveform:
    try:
        with wave.open(io.BytesIO(payload), "rb") as reader:
            if reader.getnchannels() != 1 or reader.getsampwidth() != 2:
                raise MalformedAudioResponseError("service audio must be mono PCM16")
            rate = reader.getframerate()
            frames = reader.readframes(reader.getnframes())
    except wave.Error as error:
        raise MalformedAudioResponseError(f"undecodable WAV payload: {error}") from error
    return _pcm16_to_waveform(frames, rate)


def _pcm16_to_waveform(payload: bytes, sample_rate: int) -> Waveform:
    if not payload or len(payload) % 2:
        raise MalformedAudioResponseError("PCM payload empty or odd-sized")
    values = np.frombuffer(payload, dtype="<i2").astype(np.float64)
    return Waveform(np.maximum(values / 32767, -1.0), sample_rate)


def _decode_response(content_type: str, payload: bytes, declared_rate: int) -> Waveform:
    kind = content_type.split(";")[0].strip().lower()
    if kind in ("audio/wav", "audio/x-wav", "audio/wave"):
        return _decode_wav_bytes(payload)
    if kind == "application/octet-stream":
        return _pcm16_to_waveform(payload, declared_rate)
    raise MalformedAudioResponseError(f"unexpected content type {content_type!r}")


def http_synthesize(
    endpoint: str,
    request: TtsRequest,
    retry_policy: RetryPolicy | None = None,
    *,
    token: str | None = None,
    timeout: float = 10.0,
) -> Waveform:
    """Synthesize through the HTTP service, retrying transient failures.

    404 means the voice is unknown and is never retried; 429 and 5xx and
    connection-level failures are retried with exponential backoff until the
    policy's attempt budget runs out.
    """
    policy = retry_policy or RetryPolicy()
    if token is None:
        token = os.environ.get(TOKEN_ENV_VAR)
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    payload = {
        "text": request.text,
        "voice_name": request.voice.voice_name,
        "rate": request.voice.rate,
        "pitch": request.voice.pitch,
        "sample_rate": request.target_sample_rate,
    }
    last_status: int | None = None
    for attempt in range(policy.max_attempts):
        if attempt:
            time.sleep(policy.delay(attempt - 1))
        try:
            response = requests.post(endpoint, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as error:
            log.warning("tts request failed (attempt %d): %s", attempt + 1, error)
            last_status = None
            continue
        if response.status_code == 200:
            return _decode_response(
                response.headers.get("Content-Type", ""),
                response.content,
                request.target_sample_rate,
            )
        if response.status_code == 404:
            raise UnknownVoiceError(f"service rejected voice {request.voice.voice_name!r}")
        last_status = response.status_code
        if response.status_code == 429 or response.status_code >= 500:
            log.warning("tts service answered %d (attempt %d)", response.status_code, attempt + 1)
            continue
        raise BackendUnavailableError(
            f"service rejected the request with status {response.status_code}"
        )
    if last_status == 429:
        raise RateLimitedError(f"rate limited by {endpoint} after {policy.max_attempts} attempts")
    raise BackendUnavailableError(f"{endpoint} unreachable after {policy.max_attempts} attempts")


class HttpTtsBackend(TtsBackend):
    """TtsBackend adapter around http_synthesize with an in-flight cap."""

    def __init__(
        self,
        endpoint: str,
        retry_policy: RetryPolicy | None = None,
        *,
        token: str | None = None,
        max_in_flight: int = 4,
        timeout: float = 10.0,
    ) -> None:
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        self.endpoint = endpoint
        self.retry_policy = retry_policy or RetryPolicy()
        self._token = token
        self._timeout = timeout
        self._gate = threading.BoundedSemaphore(max_in_flight)

    def _render(self, request: TtsRequest) -> Waveform:
        with self._gate:
            return http_synthesize(
                self.endpoint,
                request,
                self.retry_policy,
                token=self._token,
                timeout=self._timeout,
            )
