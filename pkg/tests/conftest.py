import struct

import numpy as np
import pytest


def wav_bytes(data: bytes, audio_format: int, channels: int, sample_rate: int, bits: int) -> bytes:
    fmt_body = struct.pack(
        "<HHIIHH",
        audio_format,
        channels,
        sample_rate,
        sample_rate * channels * bits // 8,
        channels * bits // 8,
        bits,
    )
    payload = (
        b"WAVE"
        + b"fmt "
        + struct.pack("<I", len(fmt_body))
        + fmt_body
        + b"data"
        + struct.pack("<I", len(data))
        + data
    )
    return b"RIFF" + struct.pack("<I", len(payload)) + payload


def write_wav(path, samples, sample_rate=16000, fmt="pcm16"):
    """Write a minimal WAV file; samples is (n,) or (n, channels) float in [-1, 1]."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    channels = arr.shape[1]
    interleaved = arr.reshape(-1)
    if fmt == "pcm16":
        data = np.clip(np.round(interleaved * 32768.0), -32768, 32767).astype("<i2").tobytes()
        blob = wav_bytes(data, audio_format=1, channels=channels, sample_rate=sample_rate, bits=16)
    elif fmt == "float32":
        data = interleaved.astype("<f4").tobytes()
        blob = wav_bytes(data, audio_format=3, channels=channels, sample_rate=sample_rate, bits=32)
    else:
        raise ValueError(fmt)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path


def write_wav_int16(path, values, sample_rate=16000, channels=1):
    """Write raw int16 PCM values without float conversion."""
    data = np.asarray(values, dtype="<i2").tobytes()
    with open(path, "wb") as fh:
        fh.write(wav_bytes(data, audio_format=1, channels=channels, sample_rate=sample_rate, bits=16))
    return path


@pytest.fixture
def tone_waveform():
    from dimser.audio import Waveform

    sr = 16000
    t = np.arange(sr) / sr
    return Waveform(samples=0.5 * np.sin(2 * np.pi * 1000.0 * t), sample_rate=sr)
