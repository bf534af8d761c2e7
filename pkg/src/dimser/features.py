"""Per-frame acoustic descriptors and their utterance-level Mean+Std pooling.

The native descriptor set has 34 columns per frame, in this fixed order:
zero crossing rate, energy, energy entropy, spectral centroid, spectral
spread, spectral entropy, spectral flux, spectral rolloff, 13 MFCCs,
12 chroma bins, chroma deviation.

Conventions (the column semantics depend on them):
  - Hamming window before the spectral descriptors; ZCR, energy and energy
    entropy are computed on the unwindowed frame.
  - Centroid, spread and rolloff are reported in Hz.
  - Entropies are in bits (log2) over 10 equal sub-blocks.
  - Rolloff threshold is 0.90 of the frame's spectral energy.
  - MFCC: 40-band mel filterbank from 0 Hz to Nyquist, natural log with a
    1e-10 floor, DCT-II (orthonormal), coefficients 0..12.
  - Chroma: A4 = 440 Hz reference, bins below 27.5 Hz ignored, per-frame
    energies normalized by the total considered energy.
  - Statistics everywhere are population statistics (divide by n).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.fft import dct

from .audio import FrameSpec, Waveform, frame_signal

N_MFCC = 13
N_MEL_FILTERS = 40
N_CHROMA = 12
ENTROPY_BLOCKS = 10
ROLLOFF_FRACTION = 0.90
LOG_FLOOR = 1e-10
CHROMA_REF_A4_HZ = 440.0
CHROMA_MIN_HZ = 27.5

PAA_DESCRIPTOR_NAMES: tuple[str, ...] = (
    "zcr",
    "energy",
    "energy_entropy",
    "spectral_centroid",
    "spectral_spread",
    "spectral_entropy",
    "spectral_flux",
    "spectral_rolloff",
    *(f"mfcc_{i}" for i in range(1, N_MFCC + 1)),
    *(f"chroma_{i}" for i in range(1, N_CHROMA + 1)),
    "chroma_deviation",
)
N_PAA_LLDS = len(PAA_DESCRIPTOR_NAMES)
assert N_PAA_LLDS == 34


@dataclass(frozen=True)
class LldMatrix:
    """Per-frame low-level descriptors, shape (n_frames, 34)."""

    values: np.ndarray
    descriptor_names: tuple[str, ...] = PAA_DESCRIPTOR_NAMES

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.descriptor_names):
            raise ValueError(f"expected (frames, {len(self.descriptor_names)}) matrix, got {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("empty descriptor matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite descriptor value")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    """Pooled utterance features, laid out [mean_1..mean_d, std_1..std_d]."""

    values: np.ndarray
    source: str = "paa"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size == 0 or values.size % 2 != 0:
            raise ValueError(f"feature vector length must be a positive even number, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite feature value")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size


# ------------------------------------------------------- descriptor helpers


def zero_crossing_rate(frame: np.ndarray) -> float:
    """Sign changes per sample transition: sum|diff(sign)| / (2*(N-1))."""
    signs = np.sign(frame)
    return float(np.sum(np.abs(np.diff(signs))) / (2.0 * (frame.size - 1)))


def frame_energy(frame: np.ndarray) -> float:
    """Mean squared amplitude of the frame."""
    return float(np.mean(frame * frame))


def energy_entropy(frame: np.ndarray, n_blocks: int = ENTROPY_BLOCKS) -> float:
    """Entropy (bits) of the energy distribution over equal sub-frames."""
    usable = (frame.size // n_blocks) * n_blocks
    blocks = frame[:usable].reshape(n_blocks, -1)
    block_energy = np.sum(blocks * blocks, axis=1)
    return _entropy_bits(block_energy)


def spectral_centroid_spread(magnitude: np.ndarray, freqs: np.ndarray) -> tuple[float, float]:
    """Magnitude-weighted mean frequency and its standard deviation, in Hz."""
    total = float(np.sum(magnitude))
    if total <= 0.0:
        return 0.0, 0.0
    centroid = float(np.sum(freqs * magnitude) / total)
    spread = float(np.sqrt(np.sum((freqs - centroid) ** 2 * magnitude) / total))
    return centroid, spread


def spectral_entropy(power: np.ndarray, n_blocks: int = ENTROPY_BLOCKS) -> float:
    """Entropy (bits) of spectral energy over equal groups of bins."""
    usable = (power.size // n_blocks) * n_blocks
    grouped = np.sum(power[:usable].reshape(n_blocks, -1), axis=1)
    return _entropy_bits(grouped)


def spectral_rolloff(power: np.ndarray, freqs: np.ndarray, fraction: float = ROLLOFF_FRACTION) -> float:
    """Frequency (Hz) below which ``fraction`` of the spectral energy lies."""
    total = float(np.sum(power))
    if total <= 0.0:
        return 0.0
    cum = np.cumsum(power)
    idx = int(np.searchsorted(cum, fraction * total))
    return float(freqs[min(idx, freqs.size - 1)])


def _entropy_bits(weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if total <= 0.0:
        return 0.0
    p = weights / total
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, frame_length: int, n_filters: int = N_MEL_FILTERS) -> np.ndarray:
    """Triangular mel filters (unit peak) over rfft bins, shape (n_filters, bins)."""
    freqs = np.fft.rfftfreq(frame_length, d=1.0 / sample_rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_filters + 2))
    fb = np.zeros((n_filters, freqs.size))
    for i in range(n_filters):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (freqs - lo) / (center - lo)
        falling = (hi - freqs) / (hi - center)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def chroma_fold_matrix(sample_rate: int, frame_length: int) -> np.ndarray:
    """0/1 matrix (12, bins) assigning each rfft bin to a pitch class.

    Class 0 is pitch class A; bins below 27.5 Hz contribute to no class.
    """
    freqs = np.fft.rfftfreq(frame_length, d=1.0 / sample_rate)
    fold = np.zeros((N_CHROMA, freqs.size))
    valid = freqs >= CHROMA_MIN_HZ
    semitones = np.rint(12.0 * np.log2(freqs[valid] / CHROMA_REF_A4_HZ)).astype(int)
    classes = np.mod(semitones, N_CHROMA)
    fold[classes, np.nonzero(valid)[0]] = 1.0
    return fold


# ------------------------------------------------------------- extraction


def extract_paa_llds(w: Waveform, spec: FrameSpec) -> LldMatrix:
    """Compute the 34 per-frame descriptors for a whole waveform."""
    frames = frame_signal(w, spec)
    n_frames, frame_length = frames.shape
    out = np.zeros((n_frames, N_PAA_LLDS))

    # time-domain descriptors on the raw frames
    signs = np.sign(frames)
    out[:, 0] = np.sum(np.abs(np.diff(signs, axis=1)), axis=1) / (2.0 * (frame_length - 1))
    out[:, 1] = np.mean(frames * frames, axis=1)
    usable = (frame_length // ENTROPY_BLOCKS) * ENTROPY_BLOCKS
    blocks = frames[:, :usable].reshape(n_frames, ENTROPY_BLOCKS, -1)
    out[:, 2] = _entropy_bits_rows(np.sum(blocks * blocks, axis=2))

    # spectral descriptors on Hamming-windowed frames
    window = np.hamming(frame_length)
    magnitude = np.abs(np.fft.rfft(frames * window, axis=1)) / frame_length
    power = magnitude * magnitude
    freqs = np.fft.rfftfreq(frame_length, d=1.0 / w.sample_rate)

    mag_total = np.sum(magnitude, axis=1)
    safe_mag = np.where(mag_total > 0.0, mag_total, 1.0)
    centroid = np.sum(magnitude * freqs, axis=1) / safe_mag
    centroid[mag_total <= 0.0] = 0.0
    spread = np.sqrt(np.sum(magnitude * (freqs - centroid[:, None]) ** 2, axis=1) / safe_mag)
    spread[mag_total <= 0.0] = 0.0
    out[:, 3] = centroid
    out[:, 4] = spread

    usable_bins = (power.shape[1] // ENTROPY_BLOCKS) * ENTROPY_BLOCKS
    grouped = np.sum(power[:, :usable_bins].reshape(n_frames, ENTROPY_BLOCKS, -1), axis=2)
    out[:, 5] = _entropy_bits_rows(grouped)

    norm = np.where(mag_total > 0.0, mag_total, 1.0)[:, None]
    unit = magnitude / norm
    flux = np.zeros(n_frames)
    if n_frames > 1:
        flux[1:] = np.sum((unit[1:] - unit[:-1]) ** 2, axis=1)
    out[:, 6] = flux

    pow_total = np.sum(power, axis=1)
    cum = np.cumsum(power, axis=1)
    first_reached = np.argmax(cum >= ROLLOFF_FRACTION * pow_total[:, None], axis=1)
    rolloff = freqs[first_reached].copy()
    rolloff[pow_total <= 0.0] = 0.0
    out[:, 7] = rolloff

    fb = mel_filterbank(w.sample_rate, frame_length)
    mel_energies = magnitude @ fb.T
    log_mel = np.log(np.maximum(mel_energies, LOG_FLOOR))
    out[:, 8 : 8 + N_MFCC] = dct(log_mel, type=2, norm="ortho", axis=1)[:, :N_MFCC]

    fold = chroma_fold_matrix(w.sample_rate, frame_length)
    considered = power[:, np.any(fold > 0.0, axis=0)]
    chroma_energy = power @ fold.T
    chroma_total = np.sum(considered, axis=1)
    safe_chroma = np.where(chroma_total > 0.0, chroma_total, 1.0)[:, None]
    chroma = chroma_energy / safe_chroma
    chroma[chroma_total <= 0.0] = 0.0
    out[:, 21 : 21 + N_CHROMA] = chroma
    out[:, 33] = np.std(chroma, axis=1)

    return LldMatrix(values=out)


def _entropy_bits_rows(weights: np.ndarray) -> np.ndarray:
    totals = np.sum(weights, axis=1)
    safe = np.where(totals > 0.0, totals, 1.0)[:, None]
    p = weights / safe
    p_safe = np.where(p > 0.0, p, 1.0)  # log2(1) = 0, contributes nothing
    ent = -np.sum(p_safe * np.log2(p_safe), axis=1)
    ent[totals <= 0.0] = 0.0
    return ent


def pool_hsf(llds: LldMatrix, source: str = "paa") -> FeatureVector:
    """Pool per-frame descriptors to per-column population mean and std."""
    means = np.mean(llds.values, axis=0)
    stds = np.std(llds.values, axis=0)
    return FeatureVector(values=np.concatenate([means, stds]), source=source)


# ------------------------------------------------------------ feature CSVs


def load_feature_csv(path: str | Path, expected_dim: int, source: str = "csv") -> list[tuple[str, FeatureVector]]:
    """Read precomputed per-utterance features from ``id,f1..fd`` CSV rows."""
    path = Path(path)
    rows: list[tuple[str, FeatureVector]] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        d = len(header) - 1
        if header[0] != "id" or d < 1:
            raise ValueError(f"{path}: header must be 'id,f1..fd'")
        if d != expected_dim:
            raise ValueError(f"{path}: feature dimension {d} does not match expected {expected_dim}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d + 1:
                raise ValueError(f"{path}:{line_no}: expected {d + 1} cells, got {len(row)}")
            utt_id = row[0]
            if utt_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate id {utt_id!r}")
            seen.add(utt_id)
            try:
                values = np.array([float(cell) for cell in row[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: non-numeric cell ({exc})") from None
            rows.append((utt_id, FeatureVector(values=values, source=source)))
    return rows


def save_feature_csv(path: str | Path, rows: Sequence[tuple[str, FeatureVector]], dim: int | None = None) -> None:
    """Write features in the same ``id,f1..fd`` layout the loader reads."""
    if dim is None:
        if not rows:
            raise ValueError("cannot infer feature dimension from an empty row list")
        dim = rows[0][1].dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("id," + ",".join(f"f{i}" for i in range(1, dim + 1)) + "\n")
        for utt_id, vec in rows:
            if vec.dim != dim:
                raise ValueError(f"row {utt_id!r} has dimension {vec.dim}, expected {dim}")
            fh.write(utt_id + "," + ",".join(repr(float(v)) for v in vec.values) + "\n")
