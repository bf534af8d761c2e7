import json

import numpy as np
import pytest

from dimser import BatchPair, LossKind, MultitaskWeights, loss_gradient, loss_value, multitask_total
from dimser import nn
from dimser._kernels import available_backends, backend_name, set_backend

TINY_DIM = 6
TINY_UNITS = (5, 5, 5)
TINY_TRUNK = 4


def tiny_params(seed=7):
    return nn.init_params(TINY_DIM, units=TINY_UNITS, seed=seed, trunk_units=TINY_TRUNK)


def tiny_batch(rng, n=3, timesteps=2):
    batch = rng.standard_normal((n, timesteps, TINY_DIM))
    targets = np.tanh(rng.standard_normal((n, 3)))
    return batch, targets


def network_loss(params, batch, targets, kind, weights):
    """Scalar multitask loss of the full network, for finite differencing."""
    preds, _ = nn.forward(params, batch, training=True)
    vals = [loss_value(kind, BatchPair(preds[:, k], targets[:, k])) for k in range(3)]
    return multitask_total(vals[0], vals[1], vals[2], weights)


def network_grads(params, batch, targets, kind, weights):
    preds, cache = nn.forward(params, batch, training=True)
    w = (weights.w_v, weights.w_a, weights.w_d)
    dpreds = np.zeros_like(preds)
    for k in range(3):
        dpreds[:, k] = w[k] * loss_gradient(kind, BatchPair(preds[:, k], targets[:, k]))
    return nn.backward(params, cache, dpreds)


# ------------------------------------------------------------------ init


def test_init_same_seed_is_bit_identical():
    a = nn.init_params(10, units=(4, 4, 4), seed=3)
    b = nn.init_params(10, units=(4, 4, 4), seed=3)
    for name, tensor in a.tensors().items():
        assert np.array_equal(tensor, b.tensors()[name]), name


def test_init_different_seeds_differ():
    a = nn.init_params(10, units=(4, 4, 4), seed=3)
    b = nn.init_params(10, units=(4, 4, 4), seed=4)
    assert not np.array_equal(a.lstm[0].w, b.lstm[0].w)


def test_init_shapes_chain_from_input_dim():
    p = nn.init_params(68, units=(256, 256, 256), seed=0)
    assert p.lstm[0].w.shape == (68, 4 * 256)
    assert p.lstm[1].w.shape == (256, 4 * 256)
    assert p.lstm[2].u.shape == (256, 4 * 256)
    assert p.trunk.weights.shape == (256, 64)
    assert [h.weights.shape for h in p.heads] == [(64, 1)] * 3
    # per-gate view of the concatenated matrix
    w_f, u_f, b_f = p.lstm[0].gate_weights("forget")
    assert w_f.shape == (68, 256) and u_f.shape == (256, 256) and b_f.shape == (256,)


def test_init_forget_bias_is_one_other_biases_zero():
    p = tiny_params()
    for layer in p.lstm:
        u = layer.units
        assert np.all(layer.b[u : 2 * u] == 1.0)
        assert np.all(layer.b[:u] == 0.0)
        assert np.all(layer.b[2 * u :] == 0.0)
    assert np.all(p.trunk.bias == 0.0)
    assert all(np.all(h.bias == 0.0) for h in p.heads)


def test_init_glorot_bounds():
    p = nn.init_params(30, units=(10, 10, 10), seed=1)
    limit = np.sqrt(6.0 / (30 + 10))
    assert np.all(np.abs(p.lstm[0].w) <= limit)
    assert np.abs(p.lstm[0].w).max() > 0.5 * limit  # actually fills the range


def test_init_batchnorm_identity_start():
    p = tiny_params()
    assert np.all(p.batchnorm.gamma == 1.0)
    assert np.all(p.batchnorm.beta == 0.0)
    assert np.all(p.batchnorm.running_mean == 0.0)
    assert np.all(p.batchnorm.running_var == 1.0)


def test_init_rejects_zero_dimensions():
    with pytest.raises(ValueError):
        nn.init_params(0)
    with pytest.raises(ValueError):
        nn.init_params(5, units=(4, 0, 4))


def test_model_params_validates_chaining():
    p = tiny_params()
    bad_trunk = nn.DenseParams(weights=np.zeros((TINY_UNITS[-1] + 1, 4)), bias=np.zeros(4))
    with pytest.raises(ValueError):
        nn.ModelParams(batchnorm=p.batchnorm, lstm=p.lstm, trunk=bad_trunk, heads=p.heads)


# --------------------------------------------------------------- forward


def test_forward_zero_weights_predicts_zero():
    p = tiny_params()
    for tensor in p.tensors().values():
        tensor[:] = 0.0
    rng = np.random.default_rng(0)
    batch, _ = tiny_batch(rng, n=4)
    preds, _ = nn.forward(p, batch, training=True)
    assert np.array_equal(preds, np.zeros((4, 3)))


def test_forward_output_shape():
    p = nn.init_params(68, units=(8, 8, 8), seed=0)
    batch = np.random.default_rng(1).standard_normal((4, 1, 68))
    preds, _ = nn.forward(p, batch, training=False)
    assert preds.shape == (4, 3)


def test_forward_outputs_strictly_inside_unit_interval():
    p = tiny_params()
    rng = np.random.default_rng(2)
    batch = 50.0 * rng.standard_normal((8, 3, TINY_DIM))
    preds, _ = nn.forward(p, batch, training=True)
    assert np.all(np.abs(preds) < 1.0)


def test_forward_is_pure_given_fixed_mode():
    p = tiny_params()
    rng = np.random.default_rng(3)
    batch, _ = tiny_batch(rng)
    first, _ = nn.forward(p, batch, training=False)
    second, _ = nn.forward(p, batch, training=False)
    assert np.array_equal(first, second)


def test_forward_does_not_mutate_input():
    p = tiny_params()
    rng = np.random.default_rng(4)
    batch, _ = tiny_batch(rng)
    snapshot = batch.copy()
    nn.forward(p, batch, training=True)
    assert np.array_equal(batch, snapshot)


def test_forward_dimension_mismatch():
    p = tiny_params()
    batch = np.zeros((2, 2, TINY_DIM + 1))
    with pytest.raises(ValueError):
        nn.forward(p, batch, training=True)


def test_training_mode_updates_running_stats():
    p = tiny_params()
    rng = np.random.default_rng(5)
    batch = 2.0 + rng.standard_normal((6, 2, TINY_DIM))
    nn.forward(p, batch, training=True)
    assert not np.all(p.batchnorm.running_mean == 0.0)
    # momentum 0.99 keeps the update small
    flat_mean = batch.reshape(-1, TINY_DIM).mean(axis=0)
    expected = 0.01 * flat_mean
    assert np.allclose(p.batchnorm.running_mean, expected)


def test_inference_mode_is_batch_composition_independent():
    p = tiny_params()
    rng = np.random.default_rng(6)
    # push some statistics into the running estimates first
    nn.forward(p, rng.standard_normal((16, 2, TINY_DIM)), training=True)
    batch = rng.standard_normal((5, 2, TINY_DIM))
    together, _ = nn.forward(p, batch, training=False)
    alone, _ = nn.forward(p, batch[2:3], training=False)
    assert np.allclose(together[2], alone[0], atol=1e-12)


def test_inference_mode_does_not_touch_running_stats():
    p = tiny_params()
    mean_before = p.batchnorm.running_mean.copy()
    nn.forward(p, np.random.default_rng(7).standard_normal((3, 2, TINY_DIM)), training=False)
    assert np.array_equal(p.batchnorm.running_mean, mean_before)


# -------------------------------------------------------------- backward


def test_backward_zero_dpred_gives_zero_gradients():
    p = tiny_params()
    rng = np.random.default_rng(8)
    batch, _ = tiny_batch(rng)
    _, cache = nn.forward(p, batch, training=True)
    grads = nn.backward(p, cache, np.zeros((3, 3)))
    assert set(grads) == set(p.tensors())
    for name, g in grads.items():
        assert np.all(g == 0.0), name


def test_backward_rejects_inference_cache():
    p = tiny_params()
    batch, _ = tiny_batch(np.random.default_rng(9))
    _, cache = nn.forward(p, batch, training=False)
    with pytest.raises(ValueError, match="inference"):
        nn.backward(p, cache, np.zeros((3, 3)))


def test_backward_rejects_stale_cache():
    p = tiny_params()
    batch, _ = tiny_batch(np.random.default_rng(10))
    _, cache = nn.forward(p, batch, training=True)
    other = tiny_params(seed=11)
    with pytest.raises(ValueError, match="stale"):
        nn.backward(other, cache, np.zeros((3, 3)))


def test_backward_unused_heads_get_zero_gradient():
    p = tiny_params()
    batch, _ = tiny_batch(np.random.default_rng(12))
    preds, cache = nn.forward(p, batch, training=True)
    dpreds = np.zeros_like(preds)
    dpreds[:, 0] = 1.0  # loss touches valence only
    grads = nn.backward(p, cache, dpreds)
    assert np.all(grads["head1.weights"] == 0.0)
    assert np.all(grads["head1.bias"] == 0.0)
    assert np.all(grads["head2.weights"] == 0.0)
    assert np.all(grads["head2.bias"] == 0.0)
    assert not np.all(grads["head0.weights"] == 0.0)


@pytest.mark.parametrize("kind", [LossKind.MSE, LossKind.MAE, LossKind.CCCL])
def test_full_model_gradients_match_finite_differences(kind):
    """Central finite differences (h=1e-5) on every parameter of a tiny model."""
    params = tiny_params(seed=13)
    rng = np.random.default_rng(14)
    batch, targets = tiny_batch(rng, n=3, timesteps=2)
    weights = MultitaskWeights.from_alpha_beta(0.1, 0.5)
    h = 1e-5

    analytic = network_grads(params, batch, targets, kind, weights)
    worst = 0.0
    for name, tensor in params.tensors().items():
        flat = tensor.ravel()
        fd = np.empty(flat.shape)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = network_loss(params, batch, targets, kind, weights)
            flat[i] = orig - h
            minus = network_loss(params, batch, targets, kind, weights)
            flat[i] = orig
            fd[i] = (plus - minus) / (2.0 * h)
        got = analytic[name].ravel()
        scale = max(np.linalg.norm(fd), 1e-8)
        rel = np.linalg.norm(got - fd) / scale
        worst = max(worst, rel)
        assert rel < 1e-4, f"{name}: relative error {rel:.3e}"
    assert worst < 1e-4


def test_gradient_check_covers_batchnorm_statistics_terms():
    # gamma's gradient through training-mode batchnorm, checked elementwise
    params = tiny_params(seed=15)
    rng = np.random.default_rng(16)
    batch, targets = tiny_batch(rng)
    weights = MultitaskWeights.from_alpha_beta(0.3, 0.6)
    analytic = network_grads(params, batch, targets, LossKind.MSE, weights)["batchnorm.gamma"]
    h = 1e-5
    gamma = params.batchnorm.gamma
    for i in range(gamma.size):
        orig = gamma[i]
        gamma[i] = orig + h
        plus = network_loss(params, batch, targets, LossKind.MSE, weights)
        gamma[i] = orig - h
        minus = network_loss(params, batch, targets, LossKind.MSE, weights)
        gamma[i] = orig
        fd = (plus - minus) / (2.0 * h)
        assert abs(analytic[i] - fd) < 1e-4 * max(abs(fd), 1.0)


# --------------------------------------------------------------- rmsprop


def test_rmsprop_zero_gradient_decays_accumulator_only():
    p = tiny_params()
    before = {k: v.copy() for k, v in p.tensors().items()}
    state = nn.RmspropState.for_params(p)
    state.acc["trunk.weights"][:] = 1.0
    zero = {k: np.zeros_like(v) for k, v in p.tensors().items()}
    nn.rmsprop_step(p, zero, state)
    for name, tensor in p.tensors().items():
        assert np.array_equal(tensor, before[name]), name
    assert np.allclose(state.acc["trunk.weights"], 0.9)


def test_rmsprop_scalar_oracle_step():
    # acc=0, g=1, rho=0.9, lr=0.001, eps=1e-7:
    # acc -> 0.1, step = 0.001/(sqrt(0.1)+1e-7) = 0.0031622773...
    p = tiny_params()
    state = nn.RmspropState.for_params(p, learning_rate=0.001, rho=0.9, epsilon=1e-7)
    grads = {k: np.zeros_like(v) for k, v in p.tensors().items()}
    grads["trunk.bias"] = np.zeros_like(p.trunk.bias)
    grads["trunk.bias"][0] = 1.0
    before = p.trunk.bias[0]
    nn.rmsprop_step(p, grads, state)
    step = before - p.trunk.bias[0]
    assert step == pytest.approx(0.0031623, abs=5e-7)


def test_rmsprop_successive_identical_gradients_shrink_the_step():
    p = tiny_params()
    state = nn.RmspropState.for_params(p)
    grads = {k: np.zeros_like(v) for k, v in p.tensors().items()}
    grads["trunk.bias"] = np.ones_like(p.trunk.bias)
    v0 = p.trunk.bias[0]
    nn.rmsprop_step(p, grads, state)
    v1 = p.trunk.bias[0]
    nn.rmsprop_step(p, grads, state)
    v2 = p.trunk.bias[0]
    first, second = v0 - v1, v1 - v2
    assert first != second
    assert second < first  # accumulator grows, step shrinks


def test_rmsprop_shape_mismatch_rejected():
    p = tiny_params()
    state = nn.RmspropState.for_params(p)
    grads = {k: np.zeros_like(v) for k, v in p.tensors().items()}
    grads["trunk.bias"] = np.zeros(99)
    with pytest.raises(ValueError):
        nn.rmsprop_step(p, grads, state)


def test_rmsprop_missing_gradient_rejected():
    p = tiny_params()
    state = nn.RmspropState.for_params(p)
    grads = {k: np.zeros_like(v) for k, v in p.tensors().items()}
    del grads["head2.bias"]
    with pytest.raises(ValueError):
        nn.rmsprop_step(p, grads, state)


def test_rmsprop_validates_hyperparameters():
    p = tiny_params()
    with pytest.raises(ValueError):
        nn.RmspropState.for_params(p, rho=1.0)
    with pytest.raises(ValueError):
        nn.RmspropState.for_params(p, learning_rate=0.0)


# ------------------------------------------------------------ checkpoints


def test_checkpoint_roundtrip(tmp_path):
    p = tiny_params(seed=21)
    rng = np.random.default_rng(22)
    nn.forward(p, rng.standard_normal((4, 2, TINY_DIM)), training=True)  # move running stats
    path = tmp_path / "model.json"
    nn.save_checkpoint(p, path)
    loaded = nn.load_checkpoint(path)
    for name, tensor in p.tensors().items():
        assert np.array_equal(tensor, loaded.tensors()[name]), name
    assert np.array_equal(p.batchnorm.running_mean, loaded.batchnorm.running_mean)
    assert np.array_equal(p.batchnorm.running_var, loaded.batchnorm.running_var)
    batch = rng.standard_normal((3, 2, TINY_DIM))
    a, _ = nn.forward(p, batch, training=False)
    b, _ = nn.forward(loaded, batch, training=False)
    assert np.array_equal(a, b)


def test_checkpoint_rejects_unknown_version(tmp_path):
    p = tiny_params()
    path = tmp_path / "model.json"
    nn.save_checkpoint(p, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="version"):
        nn.load_checkpoint(path)


def test_checkpoint_rejects_broken_shape_chain(tmp_path):
    p = tiny_params()
    path = tmp_path / "model.json"
    nn.save_checkpoint(p, path)
    doc = json.loads(path.read_text())
    doc["lstm"][1]["input_weights"] = [row[:-1] for row in doc["lstm"][1]["input_weights"]]
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        nn.load_checkpoint(path)


def test_checkpoint_rejects_architecture_mismatch(tmp_path):
    p = tiny_params()
    path = tmp_path / "model.json"
    nn.save_checkpoint(p, path)
    doc = json.loads(path.read_text())
    doc["architecture"]["input_dim"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="architecture"):
        nn.load_checkpoint(path)


# ---------------------------------------------------------- kernel backends


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled backend not built")
def test_backends_agree_on_forward_and_gradients():
    original = backend_name()
    params = tiny_params(seed=30)
    rng = np.random.default_rng(31)
    batch, targets = tiny_batch(rng, n=4, timesteps=3)
    weights = MultitaskWeights.from_alpha_beta(0.2, 0.3)
    results = {}
    try:
        for name in available_backends():
            set_backend(name)
            # fresh copy per backend: the training-mode pass inside
            # network_grads moves the running statistics
            local = params.copy()
            preds, _ = nn.forward(local, batch, training=False)
            grads = network_grads(local, batch, targets, LossKind.CCCL, weights)
            results[name] = (preds, grads)
    finally:
        set_backend(original)
    names = list(results)
    base_preds, base_grads = results[names[0]]
    for other in names[1:]:
        preds, grads = results[other]
        assert np.allclose(preds, base_preds, rtol=1e-12, atol=1e-12)
        for key in base_grads:
            assert np.allclose(grads[key], base_grads[key], rtol=1e-10, atol=1e-12), key


def test_predictions_to_triples():
    preds = np.array([[0.1, -0.2, 0.3], [0.0, 0.5, -0.5]])
    triples = nn.predictions_to_triples(preds)
    assert len(triples) == 2
    assert triples[0].valence == pytest.approx(0.1)
    assert triples[1].dominance == pytest.approx(-0.5)
