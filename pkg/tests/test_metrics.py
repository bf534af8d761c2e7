import numpy as np
import pytest

from dimser.losses import BatchPair, ccc, mae, mse
from dimser.metrics import (
    REPORT_CSV_HEADER,
    EmotionTriple,
    EvaluationReport,
    evaluate,
    report_csv_row,
    triples_to_matrix,
)


def random_triples(rng, n):
    return [EmotionTriple(*rng.uniform(-1, 1, size=3)) for _ in range(n)]


def test_emotion_triple_validation():
    with pytest.raises(ValueError):
        EmotionTriple(0.0, np.nan, 0.0)
    t = EmotionTriple(0.5, -0.5, 0.0)
    assert np.allclose(t.as_array(), [0.5, -0.5, 0.0])


def test_evaluate_identity():
    rng = np.random.default_rng(0)
    gold = random_triples(rng, 20)
    r = evaluate(gold, gold)
    assert r.ccc_v == pytest.approx(1.0)
    assert r.ccc_a == pytest.approx(1.0)
    assert r.ccc_d == pytest.approx(1.0)
    assert r.ccc_mean == pytest.approx(1.0)
    assert r.mse_mean == 0.0
    assert r.mae_mean == 0.0


def test_evaluate_mean_matches_published_row():
    # per-dimension CCCs 0.192/0.553/0.456 average to 0.400 at 3 decimals
    m = (0.192 + 0.553 + 0.456) / 3.0
    assert f"{m:.3f}" == "0.400"


def test_evaluate_constant_predictions():
    rng = np.random.default_rng(1)
    gold = random_triples(rng, 15)
    pred = [EmotionTriple(0.1, 0.1, 0.1)] * 15
    r = evaluate(pred, gold)
    assert r.ccc_v == 0.0 and r.ccc_a == 0.0 and r.ccc_d == 0.0


def test_evaluate_errors():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        evaluate(random_triples(rng, 3), random_triples(rng, 4))
    with pytest.raises(ValueError):
        evaluate([], [])


def test_evaluate_equals_full_corpus_loss_calls():
    rng = np.random.default_rng(3)
    pred = random_triples(rng, 40)
    gold = random_triples(rng, 40)
    r = evaluate(pred, gold)
    p = triples_to_matrix(pred)
    g = triples_to_matrix(gold)
    assert r.ccc_v == ccc(BatchPair(p[:, 0], g[:, 0]))
    assert r.ccc_a == ccc(BatchPair(p[:, 1], g[:, 1]))
    assert r.ccc_d == ccc(BatchPair(p[:, 2], g[:, 2]))
    assert r.mse_mean == pytest.approx(
        np.mean([mse(BatchPair(p[:, k], g[:, k])) for k in range(3)])
    )
    assert r.mae_mean == pytest.approx(
        np.mean([mae(BatchPair(p[:, k], g[:, k])) for k in range(3)])
    )
    assert r.ccc_mean == (r.ccc_v + r.ccc_a + r.ccc_d) / 3.0


def test_evaluate_permutation_invariance():
    rng = np.random.default_rng(4)
    pred = random_triples(rng, 25)
    gold = random_triples(rng, 25)
    r0 = evaluate(pred, gold)
    order = rng.permutation(25)
    r1 = evaluate([pred[i] for i in order], [gold[i] for i in order])
    for field in ("ccc_v", "ccc_a", "ccc_d", "ccc_mean", "mse_mean", "mae_mean"):
        assert getattr(r0, field) == pytest.approx(getattr(r1, field), abs=1e-12)


def test_report_csv_row_format():
    r = EvaluationReport(
        ccc_v=0.192, ccc_a=0.553, ccc_d=0.456, ccc_mean=0.4003333, mse_mean=0.1234567, mae_mean=0.25
    )
    row = report_csv_row("gemaps", "ccc", r)
    assert row == "gemaps,ccc,0.192,0.553,0.456,0.400,0.123457,0.250000"
    assert REPORT_CSV_HEADER.split(",")[:2] == ["feature_set", "loss"]
    assert len(row.split(",")) == len(REPORT_CSV_HEADER.split(","))
