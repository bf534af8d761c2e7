"""Pure-numpy LSTM cell kernels (fallback backend).

Gate order inside the preactivation block is [input, forget, cell, output].
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def lstm_cell_forward(preact: np.ndarray, c_prev: np.ndarray):
    """Activate one LSTM step from its preactivations.

    preact: (n, 4u) gate preactivations; c_prev: (n, u) previous cell state.
    Returns (gates, c, tanh_c, h) with gates post-activation, shape (n, 4u).
    """
    n, four_u = preact.shape
    u = four_u // 4
    if four_u != 4 * u or c_prev.shape != (n, u):
        raise ValueError(f"preact/c_prev shape mismatch: {preact.shape} vs {c_prev.shape}")
    gates = np.empty_like(preact)
    gates[:, : 2 * u] = expit(preact[:, : 2 * u])
    gates[:, 2 * u : 3 * u] = np.tanh(preact[:, 2 * u : 3 * u])
    gates[:, 3 * u :] = expit(preact[:, 3 * u :])
    i = gates[:, :u]
    f = gates[:, u : 2 * u]
    g = gates[:, 2 * u : 3 * u]
    o = gates[:, 3 * u :]
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return gates, c, tanh_c, h


def lstm_cell_backward(gates: np.ndarray, c_prev: np.ndarray, tanh_c: np.ndarray, dh: np.ndarray, dc: np.ndarray):
    """Backpropagate one LSTM step down to its preactivations.

    Returns (dpre, dc_prev): gradients w.r.t. the preactivation block and the
    previous cell state. ``dc`` is the cell-state gradient flowing in from
    the following timestep.
    """
    n, u = c_prev.shape
    i = gates[:, :u]
    f = gates[:, u : 2 * u]
    g = gates[:, 2 * u : 3 * u]
    o = gates[:, 3 * u :]
    dc_total = dc + dh * o * (1.0 - tanh_c * tanh_c)
    dpre = np.empty_like(gates)
    dpre[:, :u] = dc_total * g * i * (1.0 - i)
    dpre[:, u : 2 * u] = dc_total * c_prev * f * (1.0 - f)
    dpre[:, 2 * u : 3 * u] = dc_total * i * (1.0 - g * g)
    dpre[:, 3 * u :] = dh * tanh_c * o * (1.0 - o)
    dc_prev = dc_total * f
    return dpre, dc_prev
