"""Experiment harness: label scaling, LOSO splits, the training loop with
early stopping, the alpha-beta weight grid search, the feature x loss result
matrix, and a synthetic corpus for desk-scale verification."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import nn
from .features import FeatureVector
from .losses import (
    BatchPair,
    LossKind,
    MultitaskWeights,
    loss_gradient,
    loss_value,
    multitask_total,
)
from .metrics import REPORT_CSV_HEADER, EmotionTriple, EvaluationReport, evaluate, report_csv_row

DEFAULT_BATCH_SIZE = 32
DEFAULT_MAX_EPOCHS = 100
DEFAULT_PATIENCE = 10
DEFAULT_VAL_FRACTION = 0.2
# grid cells train on a reduced budget so the 66-point sweep stays tractable
GRID_MAX_EPOCHS = 30

MANIFEST_HEADER = ("id", "session", "valence", "arousal", "dominance", "wav_path")
MATRIX_CSV_HEADER = "dataset," + REPORT_CSV_HEADER + ",best_in_part"
MATRIX_LOSS_ORDER = (LossKind.MSE, LossKind.MAE, LossKind.CCCL)

LABEL_LOW, LABEL_HIGH = 1.0, 5.0


# ------------------------------------------------------------- domain types


@dataclass(frozen=True)
class Utterance:
    """One corpus item: pooled features plus raw [1,5] emotion labels."""

    id: str
    session: int
    features: FeatureVector
    labels_raw: EmotionTriple

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("utterance id must be non-empty")
        arr = self.labels_raw.as_array()
        if np.any(arr < LABEL_LOW) or np.any(arr > LABEL_HIGH):
            raise ValueError(f"raw labels must lie in [1, 5], got {tuple(arr)} for id {self.id!r}")


@dataclass(frozen=True)
class DatasetSplit:
    train: list[Utterance]
    validation: list[Utterance]
    test: list[Utterance]

    def __post_init__(self) -> None:
        ids = [u.id for part in (self.train, self.validation, self.test) for u in part]
        if len(ids) != len(set(ids)):
            raise ValueError("split partitions are not disjoint by id")


@dataclass(frozen=True)
class TrainConfig:
    loss: LossKind
    weights: MultitaskWeights
    batch_size: int = DEFAULT_BATCH_SIZE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    patience: int = DEFAULT_PATIENCE
    learning_rate: float = 0.001
    seed: int = 0
    units: tuple[int, ...] = nn.DEFAULT_LSTM_UNITS
    trunk_units: int = nn.DEFAULT_TRUNK_UNITS

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValueError("patience must be in [0, max_epochs]")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        object.__setattr__(self, "units", tuple(int(u) for u in self.units))


@dataclass
class ExperimentResult:
    config: TrainConfig
    report: EvaluationReport
    train_history: list[float]
    val_history: list[float]
    best_epoch: int

    def __post_init__(self) -> None:
        if len(self.train_history) > self.config.max_epochs:
            raise ValueError("history longer than max_epochs")
        if len(self.train_history) != len(self.val_history):
            raise ValueError("training and validation histories must align")


# ----------------------------------------------------------- label scaling


def scale_labels(raw: EmotionTriple) -> EmotionTriple:
    """Affine map from the annotation scale [1,5] to the tanh range [-1,1]."""
    arr = raw.as_array()
    if np.any(arr < LABEL_LOW) or np.any(arr > LABEL_HIGH):
        raise ValueError(f"labels out of [1, 5]: {tuple(arr)}")
    scaled = (arr - 3.0) / 2.0
    return EmotionTriple(valence=scaled[0], arousal=scaled[1], dominance=scaled[2])


def unscale_labels(scaled: EmotionTriple) -> EmotionTriple:
    """Inverse of scale_labels."""
    arr = scaled.as_array()
    if np.any(arr < -1.0) or np.any(arr > 1.0):
        raise ValueError(f"scaled labels out of [-1, 1]: {tuple(arr)}")
    raw = 2.0 * arr + 3.0
    return EmotionTriple(valence=raw[0], arousal=raw[1], dominance=raw[2])


# -------------------------------------------------------------- splitting


def loso_split(
    data: Sequence[Utterance], test_session: int, val_fraction: float = DEFAULT_VAL_FRACTION, seed: int = 0
) -> DatasetSplit:
    """Leave-one-session-out: the named session becomes the test partition,
    the shuffled remainder is carved into validation (floor of the fraction)
    and training."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    test = [u for u in data if u.session == test_session]
    if not test:
        raise ValueError(f"no utterances in session {test_session}")
    rest = [u for u in data if u.session != test_session]
    if not rest:
        raise ValueError("no utterances left outside the test session")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rest))
    shuffled = [rest[i] for i in order]
    n_val = math.floor(val_fraction * len(rest))
    if n_val < 1 or n_val >= len(rest):
        raise ValueError(f"val_fraction {val_fraction} leaves an empty partition on {len(rest)} utterances")
    return DatasetSplit(train=shuffled[n_val:], validation=shuffled[:n_val], test=test)


# ---------------------------------------------------------------- training


def _feature_matrix(utts: Sequence[Utterance]) -> np.ndarray:
    dims = {u.features.dim for u in utts}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
    return np.stack([u.features.values for u in utts])


def _scaled_label_matrix(utts: Sequence[Utterance]) -> np.ndarray:
    return np.stack([scale_labels(u.labels_raw).as_array() for u in utts])


def _predict(params: nn.ModelParams, x: np.ndarray) -> np.ndarray:
    preds, _ = nn.forward(params, x[:, None, :], training=False)
    return preds


def _partition_loss(params, x, y, kind: LossKind, w: MultitaskWeights) -> float:
    preds = _predict(params, x)
    vals = [loss_value(kind, BatchPair(preds[:, k], y[:, k])) for k in range(3)]
    return multitask_total(vals[0], vals[1], vals[2], w)


def train(split: DatasetSplit, cfg: TrainConfig) -> tuple[nn.ModelParams, ExperimentResult]:
    """Mini-batch training with early stopping on the validation loss.

    Per batch: forward, one loss of cfg.loss kind per dimension, multitask
    combination, analytic prediction-gradients, BPTT, one RMSprop step.
    The parameters with the best validation loss are kept; the test
    partition is scored once at the end with those parameters.
    """
    if not split.train or not split.validation or not split.test:
        raise ValueError("split has an empty partition")
    x_train = _feature_matrix(split.train)
    y_train = _scaled_label_matrix(split.train)
    x_val = _feature_matrix(split.validation)
    y_val = _scaled_label_matrix(split.validation)
    x_test = _feature_matrix(split.test)
    y_test = _scaled_label_matrix(split.test)
    if not x_train.shape[1] == x_val.shape[1] == x_test.shape[1]:
        raise ValueError("feature dimensions differ across partitions")

    n = len(split.train)
    train_ids = [u.id for u in split.train]
    test_ids = {u.id for u in split.test}

    params = nn.init_params(x_train.shape[1], units=cfg.units, seed=cfg.seed, trunk_units=cfg.trunk_units)
    state = nn.RmspropState.for_params(params, learning_rate=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    w = cfg.weights
    w_by_dim = (w.w_v, w.w_a, w.w_d)

    best_val = math.inf
    best_params = params.copy()
    best_epoch = 0
    epochs_since_best = 0
    train_history: list[float] = []
    val_history: list[float] = []

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            leaked = {train_ids[i] for i in idx} & test_ids
            assert not leaked, f"test utterances leaked into a training batch: {sorted(leaked)[:3]}"
            xb = x_train[idx][:, None, :]
            yb = y_train[idx]
            preds, cache = nn.forward(params, xb, training=True)
            per_dim = [loss_value(cfg.loss, BatchPair(preds[:, k], yb[:, k])) for k in range(3)]
            batch_total = multitask_total(per_dim[0], per_dim[1], per_dim[2], w)
            if not math.isfinite(batch_total):
                raise RuntimeError(
                    f"training aborted: non-finite {cfg.loss.value} loss at epoch {epoch + 1} "
                    f"(per-dimension losses: {per_dim})"
                )
            dpreds = np.zeros_like(preds)
            for k in range(3):
                dpreds[:, k] = w_by_dim[k] * loss_gradient(cfg.loss, BatchPair(preds[:, k], yb[:, k]))
            grads = nn.backward(params, cache, dpreds)
            nn.rmsprop_step(params, grads, state)
            epoch_loss += batch_total * len(idx)
        train_history.append(epoch_loss / n)
        # early stopping uses the same loss kind as training
        val_loss = _partition_loss(params, x_val, y_val, cfg.loss, w)
        if not math.isfinite(val_loss):
            raise RuntimeError(f"training aborted: non-finite validation loss at epoch {epoch + 1}")
        val_history.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            best_epoch = epoch + 1
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best > cfg.patience:
                break

    preds_test = _predict(best_params, x_test)
    report = evaluate(
        nn.predictions_to_triples(preds_test),
        nn.predictions_to_triples(y_test),
    )
    result = ExperimentResult(
        config=cfg,
        report=report,
        train_history=train_history,
        val_history=val_history,
        best_epoch=best_epoch,
    )
    return best_params, result


# -------------------------------------------------------------- grid search


@dataclass
class GridCell:
    alpha: float
    beta: float
    val_ccc_mean: float | None = None
    error: str = ""


def grid_candidates() -> list[tuple[float, float]]:
    """All (alpha, beta) on the 0.1 lattice with alpha + beta <= 1."""
    return [(a / 10.0, b / 10.0) for a in range(11) for b in range(11 - a)]


def grid_search_weights(split: DatasetSplit, base: TrainConfig) -> tuple[MultitaskWeights, list[GridCell]]:
    """Train one model per lattice point and pick the weights with the best
    validation ccc_mean; ties go to the smaller alpha, then smaller beta.
    Each cell runs on a reduced epoch budget; failures are recorded and the
    search continues."""
    x_val = _feature_matrix(split.validation)
    gold_val = nn.predictions_to_triples(_scaled_label_matrix(split.validation))
    budget = min(base.max_epochs, GRID_MAX_EPOCHS)
    cells: list[GridCell] = []
    best_pair: tuple[float, float] | None = None
    best_score = -math.inf
    for alpha, beta in grid_candidates():
        cfg = replace(
            base,
            weights=MultitaskWeights.from_alpha_beta(alpha, beta),
            max_epochs=budget,
            patience=min(base.patience, budget),
        )
        try:
            params, _ = train(split, cfg)
        except (ValueError, RuntimeError) as exc:
            cells.append(GridCell(alpha=alpha, beta=beta, error=str(exc)))
            continue
        report = evaluate(nn.predictions_to_triples(_predict(params, x_val)), gold_val)
        cells.append(GridCell(alpha=alpha, beta=beta, val_ccc_mean=report.ccc_mean))
        if report.ccc_mean > best_score:
            best_score = report.ccc_mean
            best_pair = (alpha, beta)
    if best_pair is None:
        raise RuntimeError("every grid cell failed to train")
    return MultitaskWeights.from_alpha_beta(*best_pair), cells


# ------------------------------------------------------------ result matrix


@dataclass
class MatrixCell:
    dataset: str
    feature_set: str
    loss: LossKind
    result: ExperimentResult | None = None
    error: str = ""
    best_in_part: bool = False


def run_matrix(
    corpora: Mapping[str, Mapping[str, Sequence[Utterance]]],
    cfg_base: TrainConfig,
    test_session: int,
    val_fraction: float = DEFAULT_VAL_FRACTION,
    losses: Sequence[LossKind] = MATRIX_LOSS_ORDER,
) -> list[MatrixCell]:
    """One training per (dataset, feature set, loss) cell.

    corpora maps dataset name -> feature-set name -> utterances carrying that
    feature set. Within each (dataset, feature set) part the cell(s) with the
    highest test ccc_mean are flagged best_in_part. Failures are recorded in
    their cell and the rest of the matrix still runs.
    """
    cells: list[MatrixCell] = []
    for ds_name, feature_sets in corpora.items():
        for fs_name, utts in feature_sets.items():
            part: list[MatrixCell] = []
            try:
                split = loso_split(list(utts), test_session, val_fraction, cfg_base.seed)
            except ValueError as exc:
                part = [
                    MatrixCell(dataset=ds_name, feature_set=fs_name, loss=kind, error=str(exc))
                    for kind in losses
                ]
                cells.extend(part)
                continue
            for kind in losses:
                cfg = replace(cfg_base, loss=kind)
                try:
                    _, result = train(split, cfg)
                    part.append(MatrixCell(dataset=ds_name, feature_set=fs_name, loss=kind, result=result))
                except (ValueError, RuntimeError) as exc:
                    part.append(MatrixCell(dataset=ds_name, feature_set=fs_name, loss=kind, error=str(exc)))
            scored = [c for c in part if c.result is not None]
            if scored:
                top = max(c.result.report.ccc_mean for c in scored)
                for c in scored:
                    if c.result.report.ccc_mean == top:
                        c.best_in_part = True
            cells.extend(part)
    return cells


def matrix_csv_lines(cells: Sequence[MatrixCell]) -> list[str]:
    """Render matrix results as CSV lines (failed cells keep blank metrics)."""
    lines = [MATRIX_CSV_HEADER]
    for c in cells:
        if c.result is not None:
            row = report_csv_row(c.feature_set, c.loss.value, c.result.report)
            lines.append(f"{c.dataset},{row},{int(c.best_in_part)}")
        else:
            lines.append(f"{c.dataset},{c.feature_set},{c.loss.value},,,,,,,0")
    return lines


# -------------------------------------------------------- synthetic corpus


def synthetic_corpus(seed: int, n: int = 500, d: int = 20) -> list[Utterance]:
    """Seeded corpus with a learnable feature->label map.

    Features are standard normal; raw labels are 3 + 2*tanh(M f + noise)
    with M a random 3 x d map scaled by 1/sqrt(d) and noise std 0.3, so the
    labels always land inside [1, 5]. Sessions cycle 1..5.
    """
    if n < 50:
        raise ValueError("n must be >= 50")
    if d < 4:
        raise ValueError("d must be >= 4")
    if d % 2 != 0:
        raise ValueError("d must be even (pooled feature vectors pair means with stds)")
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, d))
    mapping = rng.standard_normal((3, d)) / np.sqrt(d)
    noise = rng.normal(0.0, 0.3, size=(n, 3))
    raw = 3.0 + 2.0 * np.tanh(feats @ mapping.T + noise)
    width = len(str(n - 1))
    return [
        Utterance(
            id=f"synth-{i:0{width}d}",
            session=(i % 5) + 1,
            features=FeatureVector(values=feats[i], source="synthetic"),
            labels_raw=EmotionTriple(valence=raw[i, 0], arousal=raw[i, 1], dominance=raw[i, 2]),
        )
        for i in range(n)
    ]


# ------------------------------------------------------------- manifest IO


@dataclass(frozen=True)
class ManifestRow:
    id: str
    session: int
    labels_raw: EmotionTriple
    wav_path: str  # empty when features come from a CSV instead


def load_manifest(path: str | Path) -> list[ManifestRow]:
    """Read the corpus manifest: id,session,valence,arousal,dominance,wav_path."""
    path = Path(path)
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != MANIFEST_HEADER:
            raise ValueError(f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(MANIFEST_HEADER):
                raise ValueError(f"{path}:{line_no}: expected {len(MANIFEST_HEADER)} cells, got {len(row)}")
            utt_id = row[0]
            if not utt_id:
                raise ValueError(f"{path}:{line_no}: empty id")
            if utt_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate id {utt_id!r}")
            seen.add(utt_id)
            try:
                session = int(row[1])
                labels = EmotionTriple(valence=float(row[2]), arousal=float(row[3]), dominance=float(row[4]))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from None
            rows.append(ManifestRow(id=utt_id, session=session, labels_raw=labels, wav_path=row[5]))
    return rows


def join_features(
    manifest: Sequence[ManifestRow], features: Sequence[tuple[str, FeatureVector]]
) -> list[Utterance]:
    """Attach precomputed feature vectors to manifest rows, matching by id."""
    by_id = dict(features)
    missing = [row.id for row in manifest if row.id not in by_id]
    if missing:
        raise ValueError(f"no features for manifest ids: {missing[:5]}{'...' if len(missing) > 5 else ''}")
    return [
        Utterance(id=row.id, session=row.session, features=by_id[row.id], labels_raw=row.labels_raw)
        for row in manifest
    ]


# -------------------------------------------------------------- config IO


def config_to_dict(cfg: TrainConfig) -> dict:
    return {
        "loss": cfg.loss.value,
        "weights": {"w_v": cfg.weights.w_v, "w_a": cfg.weights.w_a, "w_d": cfg.weights.w_d},
        "batch_size": cfg.batch_size,
        "max_epochs": cfg.max_epochs,
        "patience": cfg.patience,
        "learning_rate": cfg.learning_rate,
        "seed": cfg.seed,
        "units": list(cfg.units),
        "trunk_units": cfg.trunk_units,
    }


def config_from_dict(doc: dict) -> TrainConfig:
    known = {
        "loss",
        "weights",
        "batch_size",
        "max_epochs",
        "patience",
        "learning_rate",
        "seed",
        "units",
        "trunk_units",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "loss" not in doc or "weights" not in doc:
        raise ValueError("config must set at least 'loss' and 'weights'")
    try:
        loss = LossKind(doc["loss"])
    except ValueError:
        raise ValueError(f"unknown loss {doc['loss']!r}") from None
    wdoc = doc["weights"]
    if not isinstance(wdoc, dict) or set(wdoc) != {"w_v", "w_a", "w_d"}:
        raise ValueError("weights must be an object with w_v, w_a, w_d")
    weights = MultitaskWeights(w_v=float(wdoc["w_v"]), w_a=float(wdoc["w_a"]), w_d=float(wdoc["w_d"]))
    kwargs = {}
    for name in ("batch_size", "max_epochs", "patience", "seed", "trunk_units"):
        if name in doc:
            kwargs[name] = int(doc[name])
    if "learning_rate" in doc:
        kwargs["learning_rate"] = float(doc["learning_rate"])
    if "units" in doc:
        kwargs["units"] = tuple(int(u) for u in doc["units"])
    return TrainConfig(loss=loss, weights=weights, **kwargs)


def save_config(cfg: TrainConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path: str | Path) -> TrainConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config_from_dict(doc)
