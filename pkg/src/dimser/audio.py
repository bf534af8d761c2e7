"""Waveform loading and framing.

The WAV reader is deliberately small: RIFF/WAVE with PCM 16-bit or IEEE
float 32-bit payloads, mono or multichannel. Each failure mode (missing
file, unsupported codec, truncated chunk) surfaces as its own error type.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3


class WavFormatError(ValueError):
    """The file is a container or codec this reader does not support."""


class TruncatedWavError(ValueError):
    """The file ended before a declared chunk was complete."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples in [-1, 1] with their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise ValueError("empty waveform")
        if not np.all(np.isfinite(samples)):
            raise ValueError("non-finite sample")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """Analysis frame length and hop, both in samples."""

    frame_length: int
    hop_length: int

    def __post_init__(self) -> None:
        if self.frame_length < 2:
            raise ValueError("frame_length must be >= 2")
        if self.hop_length < 1:
            raise ValueError("hop_length must be >= 1")
        if self.hop_length > self.frame_length:
            raise ValueError("hop_length must not exceed frame_length")

    @classmethod
    def from_milliseconds(cls, sample_rate: int, frame_ms: float = 50.0, hop_ms: float = 25.0) -> "FrameSpec":
        """Build a spec from durations; defaults are 50 ms frames, 25 ms hop."""
        return cls(
            frame_length=int(round(sample_rate * frame_ms / 1000.0)),
            hop_length=int(round(sample_rate * hop_ms / 1000.0)),
        )


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise TruncatedWavError(f"file ended inside {what} ({len(data)} of {count} bytes)")
    return data


def load_wav(path: str | Path) -> Waveform:
    """Read a RIFF/WAVE file into a mono waveform scaled to [-1, 1].

    Multichannel audio is averaged to mono. 16-bit PCM is normalized by
    2**15; 32-bit float payloads are taken as-is.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        header = _read_exact(fh, 12, "RIFF header")
        if header[0:4] != b"RIFF" or header[8:12] != b"WAVE":
            raise WavFormatError(f"{path}: not a RIFF/WAVE file")

        fmt = None
        data = None
        while True:
            chunk_header = fh.read(8)
            if len(chunk_header) == 0:
                break
            if len(chunk_header) < 8:
                raise TruncatedWavError(f"{path}: file ended inside a chunk header")
            chunk_id, chunk_size = struct.unpack("<4sI", chunk_header)
            body = _read_exact(fh, chunk_size, f"'{chunk_id.decode('latin1').strip()}' chunk")
            if chunk_size % 2 == 1:
                fh.read(1)  # chunks are word-aligned
            if chunk_id == b"fmt ":
                if chunk_size < 16:
                    raise TruncatedWavError(f"{path}: fmt chunk too short")
                fmt = struct.unpack("<HHIIHH", body[:16])
            elif chunk_id == b"data":
                data = body
            if fmt is not None and data is not None:
                break

        if fmt is None:
            raise WavFormatError(f"{path}: missing fmt chunk")
        if data is None:
            raise WavFormatError(f"{path}: missing data chunk")

    audio_format, n_channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if n_channels < 1:
        raise WavFormatError(f"{path}: invalid channel count {n_channels}")

    if audio_format == WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(data, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise WavFormatError(
            f"{path}: unsupported codec (format tag {audio_format}, {bits}-bit); "
            "expected 16-bit PCM or 32-bit float"
        )

    if samples.size % n_channels != 0:
        raise TruncatedWavError(f"{path}: data chunk is not a whole number of frames")
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=samples, sample_rate=sample_rate)


def frame_signal(w: Waveform, spec: FrameSpec) -> np.ndarray:
    """Slice a waveform into overlapping frames, shape (n_frames, frame_length).

    A trailing partial frame is dropped, never zero-padded.
    """
    n = w.samples.size
    if n < spec.frame_length:
        raise ValueError(f"signal of {n} samples is shorter than one frame ({spec.frame_length})")
    n_frames = (n - spec.frame_length) // spec.hop_length + 1
    view = np.lib.stride_tricks.sliding_window_view(w.samples, spec.frame_length)
    return np.ascontiguousarray(view[:: spec.hop_length][:n_frames])
