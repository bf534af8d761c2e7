"""Command-line surface: extract features, train/evaluate models, sweep the
multitask weights, run the feature x loss matrix, benchmark the losses on
synthetic corpora, and plot scatter figures.

Exit codes: 0 success, 1 partial data failure (some rows/cells failed but
output was written), 2 invalid arguments, config, or unreadable inputs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, nn
from .audio import FrameSpec, load_wav
from .experiment import (
    DEFAULT_VAL_FRACTION,
    TrainConfig,
    Utterance,
    grid_search_weights,
    join_features,
    load_config,
    load_manifest,
    loso_split,
    matrix_csv_lines,
    run_matrix,
    save_config,
    scale_labels,
    synthetic_corpus,
    train,
)
from .features import extract_paa_llds, load_feature_csv, pool_hsf, save_feature_csv
from .losses import LossKind, MultitaskWeights
from .metrics import REPORT_CSV_HEADER, evaluate, report_csv_row
from .svgplot import scatter_svg

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

HSF_DIM = 68

# synth-bench defaults, fixed by calibration: a 500x20 corpus learned well
# within a 50-epoch budget at these widths, and the run stays under a minute
BENCH_N = 500
BENCH_D = 20
BENCH_UNITS = (32, 32, 32)
BENCH_TRUNK = 64
BENCH_EPOCHS = 50
BENCH_PATIENCE = 10
BENCH_TEST_SESSION = 5
BENCH_LOSS_ORDER = (LossKind.MSE, LossKind.MAE, LossKind.CCCL)

BENCH_CSV_HEADER = (
    "row_type,seed,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean,"
    "mean_ccc_mean_mse,mean_ccc_mean_mae,mean_ccc_mean_ccc,"
    "ccc_wins_vs_mse,ccc_ties_vs_mse,ccc_losses_vs_mse,"
    "ccc_wins_vs_mae,ccc_ties_vs_mae,ccc_losses_vs_mae,error"
)


# ----------------------------------------------------------- shared helpers


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, help="corpus manifest CSV")
    p.add_argument("--features", default="paa", help="'paa' to extract, or csv:PATH to join by id")
    p.add_argument("--wav-dir", default=".", help="directory wav_path entries are relative to")
    p.add_argument("--test-session", type=int, default=5, help="held-out session (default 5)")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=[k.value for k in LossKind], help="training loss")
    p.add_argument("--alpha", type=float, help="valence weight")
    p.add_argument("--beta", type=float, help="arousal weight (dominance gets 1-alpha-beta)")
    p.add_argument("--val-fraction", type=float, default=DEFAULT_VAL_FRACTION)
    p.add_argument("--seed", type=int, help="seed for splitting, init, and shuffling")
    p.add_argument("--config", help="JSON file mirroring TrainConfig fields")


def _resolve_config(args: argparse.Namespace) -> TrainConfig:
    """--config supplies the base; --loss/--alpha/--beta/--seed override it."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = TrainConfig(loss=LossKind.CCCL, weights=MultitaskWeights.from_alpha_beta(0.1, 0.5))
    updates = {}
    if getattr(args, "loss", None):
        updates["loss"] = LossKind(args.loss)
    if args.alpha is not None or args.beta is not None:
        alpha = args.alpha if args.alpha is not None else cfg.weights.w_v
        beta = args.beta if args.beta is not None else cfg.weights.w_a
        updates["weights"] = MultitaskWeights.from_alpha_beta(alpha, beta)
    if args.seed is not None:
        updates["seed"] = args.seed
    return replace(cfg, **updates) if updates else cfg


def _load_any_dim_feature_csv(path: str) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
    if not header:
        raise ValueError(f"{path}: empty feature CSV")
    dim = header.count(",")
    return load_feature_csv(path, expected_dim=dim)


def _extract_vector(wav_dir: str, wav_path: str, frame_ms: float = 50.0, hop_ms: float = 25.0):
    if not wav_path:
        raise ValueError("manifest row has a blank wav_path; use --features csv:PATH instead")
    waveform = load_wav(Path(wav_dir) / wav_path)
    spec = FrameSpec.from_milliseconds(waveform.sample_rate, frame_ms, hop_ms)
    return pool_hsf(extract_paa_llds(waveform, spec))


def _build_corpus(manifest_path: str, features: str, wav_dir: str) -> tuple[list[Utterance], str]:
    """Materialize utterances; returns (corpus, feature-set label)."""
    manifest = load_manifest(manifest_path)
    if features == "paa":
        rows = [(m.id, _extract_vector(wav_dir, m.wav_path)) for m in manifest]
        return join_features(manifest, rows), "paa"
    if features.startswith("csv:"):
        rows = _load_any_dim_feature_csv(features[len("csv:") :])
        return join_features(manifest, rows), "csv"
    raise ValueError(f"--features must be 'paa' or 'csv:PATH', got {features!r}")


def _write_lines(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _predict(params: nn.ModelParams, utts: list[Utterance]) -> np.ndarray:
    x = np.stack([u.features.values for u in utts])
    preds, _ = nn.forward(params, x[:, None, :], training=False)
    return preds


def _gold_triples(utts: list[Utterance]) -> list:
    return [scale_labels(u.labels_raw) for u in utts]


# -------------------------------------------------------------- subcommands


def cmd_extract(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    rows = []
    failures = 0
    for m in manifest:
        try:
            rows.append((m.id, _extract_vector(args.wav_dir, m.wav_path, args.frame_ms, args.hop_ms)))
        except (OSError, ValueError) as exc:
            failures += 1
            print(f"extract: {m.id}: {exc}", file=sys.stderr)
    out = _out_dir(args)
    save_feature_csv(out / "features.csv", rows, dim=HSF_DIM)
    print(f"extracted {len(rows)} of {len(manifest)} utterances -> {out / 'features.csv'}")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus, feature_label = _build_corpus(args.manifest, args.features, args.wav_dir)
    split = loso_split(corpus, args.test_session, args.val_fraction, cfg.seed)
    params, result = train(split, cfg)
    out = _out_dir(args)
    nn.save_checkpoint(params, out / "checkpoint.json")
    save_config(cfg, out / "config.json")
    _write_lines(out / "result.csv", [REPORT_CSV_HEADER, report_csv_row(feature_label, cfg.loss.value, result.report)])
    history = ["epoch,train_loss,val_loss"]
    for i, (tr, va) in enumerate(zip(result.train_history, result.val_history), start=1):
        history.append(f"{i},{tr!r},{va!r}")
    _write_lines(out / "history.csv", history)
    print(
        f"trained {cfg.loss.value} for {len(result.train_history)} epochs "
        f"(best epoch {result.best_epoch}); test ccc_mean {result.report.ccc_mean:.3f}"
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    params = nn.load_checkpoint(args.checkpoint)
    corpus, feature_label = _build_corpus(args.manifest, args.features, args.wav_dir)
    test = [u for u in corpus if u.session == args.test_session]
    if not test:
        raise ValueError(f"no utterances in session {args.test_session}")
    preds = _predict(params, test)
    report = evaluate(nn.predictions_to_triples(preds), _gold_triples(test))
    out = _out_dir(args)
    loss_label = args.loss if args.loss else "-"
    _write_lines(out / "result.csv", [REPORT_CSV_HEADER, report_csv_row(feature_label, loss_label, report)])
    print(f"evaluated {len(test)} test utterances; ccc_mean {report.ccc_mean:.3f}")
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus, _ = _build_corpus(args.manifest, args.features, args.wav_dir)
    split = loso_split(corpus, args.test_session, args.val_fraction, cfg.seed)
    best, cells = grid_search_weights(split, cfg)
    out = _out_dir(args)
    lines = ["alpha,beta,val_ccc_mean,error"]
    failures = 0
    for c in cells:
        score = "" if c.val_ccc_mean is None else f"{c.val_ccc_mean:.6f}"
        if c.error:
            failures += 1
        err = c.error.replace(",", ";")
        lines.append(f"{c.alpha:.1f},{c.beta:.1f},{score},{err}")
    _write_lines(out / "grid.csv", lines)
    alpha, beta = best.w_v, best.w_a
    _write_lines(
        out / "best_weights.json",
        [f'{{"alpha": {alpha:.1f}, "beta": {beta:.1f}, "w_d": {1.0 - alpha - beta:.1f}}}'],
    )
    print(f"best weights: alpha={alpha:.1f} beta={beta:.1f} over {len(cells)} cells")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_matrix(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpora: dict[str, dict[str, list[Utterance]]] = {}
    for spec in args.dataset:
        if "=" not in spec:
            raise ValueError(f"--dataset must be NAME=MANIFEST, got {spec!r}")
        ds_name, manifest_path = spec.split("=", 1)
        corpora[ds_name] = {}
        for fspec in args.feature_set:
            if "=" not in fspec:
                raise ValueError(f"--feature-set must be NAME=paa or NAME=csv:PATH, got {fspec!r}")
            fs_name, mode = fspec.split("=", 1)
            utts, _ = _build_corpus(manifest_path, mode, args.wav_dir)
            corpora[ds_name][fs_name] = utts
    if args.loss:
        cells = run_matrix(corpora, cfg, args.test_session, args.val_fraction, losses=[LossKind(args.loss)])
    else:
        cells = run_matrix(corpora, cfg, args.test_session, args.val_fraction)
    out = _out_dir(args)
    _write_lines(out / "matrix.csv", matrix_csv_lines(cells))
    failures = sum(1 for c in cells if c.error)
    print(f"matrix: {len(cells)} cells, {failures} failed -> {out / 'matrix.csv'}")
    return EXIT_PARTIAL if failures else EXIT_OK


def _bench_config(args: argparse.Namespace) -> TrainConfig:
    if args.config:
        return load_config(args.config)
    return TrainConfig(
        loss=LossKind.CCCL,
        weights=MultitaskWeights.from_alpha_beta(0.1, 0.5),
        batch_size=32,
        max_epochs=BENCH_EPOCHS,
        patience=BENCH_PATIENCE,
        seed=0,
        units=BENCH_UNITS,
        trunk_units=BENCH_TRUNK,
    )


def cmd_synth_bench(args: argparse.Namespace) -> int:
    if args.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    base = _bench_config(args)
    seed0 = args.seed if args.seed is not None else 0
    scores: dict[LossKind, dict[int, float]] = {k: {} for k in BENCH_LOSS_ORDER}
    lines = [BENCH_CSV_HEADER]
    failures = 0
    for r in range(args.repeats):
        seed = seed0 + r
        corpus = synthetic_corpus(seed=seed, n=BENCH_N, d=BENCH_D)
        split = loso_split(corpus, BENCH_TEST_SESSION, DEFAULT_VAL_FRACTION, seed)
        for kind in BENCH_LOSS_ORDER:
            cfg = replace(base, loss=kind, seed=seed)
            try:
                _, result = train(split, cfg)
            except (ValueError, RuntimeError) as exc:
                failures += 1
                msg = str(exc).replace(",", ";")
                lines.append(f"error,{seed},{kind.value},,,,,,,,,,,,,,,,{msg}")
                continue
            rep = result.report
            scores[kind][seed] = rep.ccc_mean
            lines.append(
                f"result,{seed},{kind.value},{rep.ccc_v:.6f},{rep.ccc_a:.6f},{rep.ccc_d:.6f},"
                f"{rep.ccc_mean:.6f},{rep.mse_mean:.6f},{rep.mae_mean:.6f},,,,,,,,,,"
            )
    tallies = []
    for rival in (LossKind.MSE, LossKind.MAE):
        wins = ties = losses = 0
        for seed, ccc_score in scores[LossKind.CCCL].items():
            if seed not in scores[rival]:
                continue
            other = scores[rival][seed]
            if ccc_score > other:
                wins += 1
            elif ccc_score == other:
                ties += 1
            else:
                losses += 1
        tallies.extend([wins, ties, losses])
    means = {
        kind: (sum(vals.values()) / len(vals) if vals else float("nan"))
        for kind, vals in scores.items()
    }
    lines.append(
        "summary,,,,,,,,,"
        f"{means[LossKind.MSE]:.6f},{means[LossKind.MAE]:.6f},{means[LossKind.CCCL]:.6f},"
        + ",".join(str(t) for t in tallies)
        + ","
    )
    out = _out_dir(args)
    _write_lines(out / "bench.csv", lines)
    print(
        f"synth-bench: {args.repeats} repeats; mean ccc_mean "
        f"mse={means[LossKind.MSE]:.4f} mae={means[LossKind.MAE]:.4f} ccc={means[LossKind.CCCL]:.4f}"
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_scatter(args: argparse.Namespace) -> int:
    params = nn.load_checkpoint(args.checkpoint)
    corpus, _ = _build_corpus(args.manifest, args.features, args.wav_dir)
    test = [u for u in corpus if u.session == args.test_session]
    if not test:
        raise ValueError(f"no utterances in session {args.test_session}")
    preds = _predict(params, test)
    gold = np.stack([scale_labels(u.labels_raw).as_array() for u in test])
    out = _out_dir(args)
    lines = ["id,gold_v,gold_a,pred_v,pred_a"]
    for u, g, p in zip(test, gold, preds):
        lines.append(f"{u.id},{float(g[0])!r},{float(g[1])!r},{float(p[0])!r},{float(p[1])!r}")
    _write_lines(out / "scatter.csv", lines)
    svg = scatter_svg(gold[:, :2], preds[:, :2])
    (out / "scatter.svg").write_text(svg, encoding="utf-8")
    print(f"scatter: {len(test)} test utterances -> {out / 'scatter.svg'}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimser",
        description="Dimensional speech emotion recognition: features, losses, training, figures.",
    )
    parser.add_argument("--version", action="version", version=f"dimser {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract pAA HSF features for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--wav-dir", default=".")
    p.add_argument("--frame-ms", type=float, default=50.0)
    p.add_argument("--hop-ms", type=float, default=25.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one model on a LOSO split")
    _add_corpus_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test session")
    _add_corpus_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--loss", choices=[k.value for k in LossKind], help="label for the result row")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="search the 66-point alpha/beta lattice")
    _add_corpus_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("matrix", help="run the dataset x feature-set x loss matrix")
    p.add_argument("--dataset", action="append", required=True, metavar="NAME=MANIFEST")
    p.add_argument("--feature-set", action="append", required=True, metavar="NAME=paa|NAME=csv:PATH")
    p.add_argument("--wav-dir", default=".")
    p.add_argument("--test-session", type=int, default=5)
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("synth-bench", help="compare the three losses on synthetic corpora")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--config", help="JSON TrainConfig overriding the bench defaults")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_bench)

    p = sub.add_parser("scatter", help="scatter plot of gold vs predicted valence/arousal")
    _add_corpus_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scatter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"dimser: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
