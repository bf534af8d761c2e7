"""Forward and backward passes for the sequence regressor.

Layout: input batch normalization over the feature axis, a stack of LSTM
layers where every layer but the last feeds its full hidden sequence to the
next and the last contributes only its final hidden state, one linear trunk
layer, and three tanh heads emitting (valence, arousal, dominance).

All sequence math is time-major internally; the public API takes batches of
shape (n, timesteps, features). The elementwise LSTM cell work is delegated
to dimser._kernels so the compiled backend can be swapped in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from .params import ModelParams


@dataclass
class _LayerCache:
    x_seq: np.ndarray  # (T, n, input_dim) layer input
    h_seq: np.ndarray  # (T+1, n, units) hidden states, h_seq[0] is the zero initial state
    c_seq: np.ndarray  # (T+1, n, units) cell states
    gates_seq: np.ndarray  # (T, n, 4*units) post-activation gates
    tanh_c_seq: np.ndarray  # (T, n, units)


@dataclass
class ForwardCache:
    params: ModelParams
    training: bool
    bn_xhat: np.ndarray  # (n*T, d) normalized input
    layers: list[_LayerCache]
    trunk_in: np.ndarray  # (n, last_units) final hidden state
    trunk_out: np.ndarray  # (n, trunk_units)
    preds: np.ndarray  # (n, 3)


def _batchnorm_forward(params: ModelParams, batch: np.ndarray, training: bool):
    bn = params.batchnorm
    n, timesteps, d = batch.shape
    flat = batch.reshape(n * timesteps, d)
    if training:
        mean = flat.mean(axis=0)
        var = flat.var(axis=0)
        bn.running_mean[:] = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean
        bn.running_var[:] = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var
    else:
        mean = bn.running_mean
        var = bn.running_var
    xhat = (flat - mean) / np.sqrt(var + bn.epsilon)
    out = bn.gamma * xhat + bn.beta
    return out.reshape(n, timesteps, d), xhat


def _lstm_forward(layer, x_seq: np.ndarray) -> _LayerCache:
    timesteps, n, _ = x_seq.shape
    units = layer.units
    h_seq = np.zeros((timesteps + 1, n, units))
    c_seq = np.zeros((timesteps + 1, n, units))
    gates_seq = np.empty((timesteps, n, 4 * units))
    tanh_c_seq = np.empty((timesteps, n, units))
    # input contribution to every step's preactivation in one matmul
    x_proj = x_seq @ layer.w + layer.b
    for t in range(timesteps):
        preact = x_proj[t] + h_seq[t] @ layer.u
        gates, c, tanh_c, h = _kernels.lstm_cell_forward(preact, c_seq[t])
        gates_seq[t] = gates
        c_seq[t + 1] = c
        tanh_c_seq[t] = tanh_c
        h_seq[t + 1] = h
    return _LayerCache(x_seq=x_seq, h_seq=h_seq, c_seq=c_seq, gates_seq=gates_seq, tanh_c_seq=tanh_c_seq)


def _lstm_backward(layer, cache: _LayerCache, dh_seq: np.ndarray):
    """BPTT through one layer.

    dh_seq is (T, n, units): the loss gradient flowing into each step's h
    output from above (zeros at steps whose output is unused).  Returns
    (dx_seq, dw, du, db).
    """
    timesteps, n, _ = cache.x_seq.shape
    units = layer.units
    dw = np.zeros_like(layer.w)
    du = np.zeros_like(layer.u)
    db = np.zeros_like(layer.b)
    dx_seq = np.empty_like(cache.x_seq)
    dh_carry = np.zeros((n, units))
    dc = np.zeros((n, units))
    for t in reversed(range(timesteps)):
        dh = dh_seq[t] + dh_carry
        dpre, dc = _kernels.lstm_cell_backward(
            cache.gates_seq[t], cache.c_seq[t], cache.tanh_c_seq[t], dh, dc
        )
        dw += cache.x_seq[t].T @ dpre
        du += cache.h_seq[t].T @ dpre
        db += dpre.sum(axis=0)
        dx_seq[t] = dpre @ layer.w.T
        dh_carry = dpre @ layer.u.T
    return dx_seq, dw, du, db


def _dense_forward(dense, x: np.ndarray) -> np.ndarray:
    out = x @ dense.weights + dense.bias
    if dense.activation == "tanh":
        out = np.tanh(out)
    return out


def forward(params: ModelParams, batch: np.ndarray, training: bool) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on batch (n, timesteps, features) -> ((n, 3), cache).

    In training mode the batch normalization uses batch statistics and
    updates the running estimates; in inference mode it uses the stored
    running statistics, so each row's output is independent of the rest of
    the batch.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 3:
        raise ValueError(f"batch must be (n, timesteps, features), got ndim {batch.ndim}")
    if batch.shape[2] != params.input_dim:
        raise ValueError(f"batch has {batch.shape[2]} features, model expects {params.input_dim}")
    if batch.shape[0] < 1 or batch.shape[1] < 1:
        raise ValueError("batch must contain at least one sequence and one timestep")
    if not np.all(np.isfinite(batch)):
        raise ValueError("batch contains non-finite values")

    normed, xhat = _batchnorm_forward(params, batch, training)
    x_seq = np.ascontiguousarray(np.swapaxes(normed, 0, 1))  # time-major

    layer_caches = []
    for layer in params.lstm:
        cache = _lstm_forward(layer, x_seq)
        layer_caches.append(cache)
        x_seq = cache.h_seq[1:]
    final_h = layer_caches[-1].h_seq[-1]

    trunk_out = _dense_forward(params.trunk, final_h)
    preds = np.concatenate([_dense_forward(head, trunk_out) for head in params.heads], axis=1)
    cache = ForwardCache(
        params=params,
        training=training,
        bn_xhat=xhat,
        layers=layer_caches,
        trunk_in=final_h,
        trunk_out=trunk_out,
        preds=preds,
    )
    return preds, cache


def _dense_backward(dense, x_in: np.ndarray, out: np.ndarray, dout: np.ndarray):
    if dense.activation == "tanh":
        dout = dout * (1.0 - out * out)
    dweights = x_in.T @ dout
    dbias = dout.sum(axis=0)
    dx = dout @ dense.weights.T
    return dx, dweights, dbias


def backward(params: ModelParams, cache: ForwardCache, dpreds: np.ndarray) -> dict[str, np.ndarray]:
    """Full backpropagation; returns gradients keyed like params.tensors().

    dpreds is (n, 3): the loss gradient with respect to the predictions.
    The cache must come from a training-mode forward pass with these same
    parameter tensors.
    """
    if not cache.training:
        raise ValueError("cannot backpropagate through an inference-mode cache")
    if cache.params is not params:
        raise ValueError("cache is stale: built from different parameter tensors")
    dpreds = np.asarray(dpreds, dtype=np.float64)
    n = cache.preds.shape[0]
    if dpreds.shape != (n, 3):
        raise ValueError(f"dpreds must be {(n, 3)}, got {dpreds.shape}")

    grads: dict[str, np.ndarray] = {}
    dtrunk_out = np.zeros_like(cache.trunk_out)
    for i, head in enumerate(params.heads):
        dx, dw, db = _dense_backward(head, cache.trunk_out, cache.preds[:, i : i + 1], dpreds[:, i : i + 1])
        dtrunk_out += dx
        grads[f"head{i}.weights"] = dw
        grads[f"head{i}.bias"] = db
    dfinal_h, dw, db = _dense_backward(params.trunk, cache.trunk_in, cache.trunk_out, dtrunk_out)
    grads["trunk.weights"] = dw
    grads["trunk.bias"] = db

    # walk the LSTM stack top-down; only the last layer's final step gets
    # gradient from the trunk, every other layer gets a full sequence from
    # the layer above
    dh_seq = np.zeros_like(cache.layers[-1].h_seq[1:])
    dh_seq[-1] = dfinal_h
    for i in reversed(range(len(params.lstm))):
        dx_seq, dw, du, db = _lstm_backward(params.lstm[i], cache.layers[i], dh_seq)
        grads[f"lstm{i}.w"] = dw
        grads[f"lstm{i}.u"] = du
        grads[f"lstm{i}.b"] = db
        dh_seq = dx_seq

    # batchnorm: dh_seq is now the gradient w.r.t. the scaled output,
    # time-major.  gamma and beta sit outside the normalization, so their
    # gradients need no batch-statistic terms; the gradient w.r.t. the raw
    # input is never needed (the input is data, not a parameter).
    dnormed = np.swapaxes(dh_seq, 0, 1).reshape(cache.bn_xhat.shape)
    grads["batchnorm.gamma"] = (dnormed * cache.bn_xhat).sum(axis=0)
    grads["batchnorm.beta"] = dnormed.sum(axis=0)
    return grads


def predictions_to_triples(preds: np.ndarray):
    """Convert an (n, 3) prediction array to EmotionTriple objects."""
    from ..metrics import EmotionTriple

    return [EmotionTriple(valence=float(r[0]), arousal=float(r[1]), dominance=float(r[2])) for r in preds]
