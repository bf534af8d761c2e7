"""Corpus-level evaluation: per-dimension CCC/MSE/MAE over a whole test
partition and the averaged CCC used as the headline score."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .losses import BatchPair, ccc, mae, mse

REPORT_CSV_HEADER = "feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean"


@dataclass(frozen=True)
class EmotionTriple:
    """One (valence, arousal, dominance) degree triple."""

    valence: float
    arousal: float
    dominance: float

    def __post_init__(self) -> None:
        for name in ("valence", "arousal", "dominance"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError("non-finite emotion degree")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.valence, self.arousal, self.dominance], dtype=np.float64)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-dimension CCC plus averaged CCC/MSE/MAE for one test partition."""

    ccc_v: float
    ccc_a: float
    ccc_d: float
    ccc_mean: float
    mse_mean: float
    mae_mean: float


def triples_to_matrix(triples: Sequence[EmotionTriple]) -> np.ndarray:
    """Stack emotion triples into an (n, 3) array, columns V/A/D."""
    if len(triples) == 0:
        raise ValueError("empty triple list")
    return np.stack([t.as_array() for t in triples])


def evaluate(pred: Sequence[EmotionTriple], gold: Sequence[EmotionTriple]) -> EvaluationReport:
    """Score predictions against gold labels over the full partition.

    Each per-dimension metric is computed in one pass over the whole list
    (not averaged over batches).
    """
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gold)} labels")
    p = triples_to_matrix(pred)
    g = triples_to_matrix(gold)
    pairs = [BatchPair(p[:, k], g[:, k]) for k in range(3)]
    ccc_vad = [ccc(b) for b in pairs]
    mse_vad = [mse(b) for b in pairs]
    mae_vad = [mae(b) for b in pairs]
    return EvaluationReport(
        ccc_v=ccc_vad[0],
        ccc_a=ccc_vad[1],
        ccc_d=ccc_vad[2],
        ccc_mean=(ccc_vad[0] + ccc_vad[1] + ccc_vad[2]) / 3.0,
        mse_mean=(mse_vad[0] + mse_vad[1] + mse_vad[2]) / 3.0,
        mae_mean=(mae_vad[0] + mae_vad[1] + mae_vad[2]) / 3.0,
    )


def report_csv_row(feature_set: str, loss: str, report: EvaluationReport) -> str:
    """Format one report as a CSV row; CCC columns at 3 decimals."""
    return ",".join(
        [
            feature_set,
            loss,
            f"{report.ccc_v:.3f}",
            f"{report.ccc_a:.3f}",
            f"{report.ccc_d:.3f}",
            f"{report.ccc_mean:.3f}",
            f"{report.mse_mean:.6f}",
            f"{report.mae_mean:.6f}",
        ]
    )
