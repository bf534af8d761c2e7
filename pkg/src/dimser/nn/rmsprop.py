"""RMSprop with a running mean of squared gradients per tensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ModelParams

DEFAULT_LEARNING_RATE = 0.001
DEFAULT_RHO = 0.9
DEFAULT_EPSILON = 1e-7


@dataclass
class RmspropState:
    """Accumulators keyed like ModelParams.tensors(), plus hyperparameters."""

    acc: dict[str, np.ndarray]
    learning_rate: float = DEFAULT_LEARNING_RATE
    rho: float = DEFAULT_RHO
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not self.learning_rate > 0.0:
            raise ValueError("learning rate must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def for_params(
        cls,
        params: ModelParams,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        rho: float = DEFAULT_RHO,
        epsilon: float = DEFAULT_EPSILON,
    ) -> "RmspropState":
        acc = {name: np.zeros_like(tensor) for name, tensor in params.tensors().items()}
        return cls(acc=acc, learning_rate=learning_rate, rho=rho, epsilon=epsilon)


def rmsprop_step(
    params: ModelParams, grads: dict[str, np.ndarray], state: RmspropState
) -> tuple[ModelParams, RmspropState]:
    """One update of every trainable tensor; mutates in place and returns both.

    acc <- rho * acc + (1 - rho) * g^2
    param <- param - lr * g / (sqrt(acc) + eps)
    """
    tensors = params.tensors()
    missing = set(tensors) - set(grads)
    if missing:
        raise ValueError(f"gradients missing for {sorted(missing)}")
    for name, tensor in tensors.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != tensor.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {name} {tensor.shape}")
        acc = state.acc[name]
        acc *= state.rho
        acc += (1.0 - state.rho) * g * g
        tensor -= state.learning_rate * g / (np.sqrt(acc) + state.epsilon)
    return params, state
