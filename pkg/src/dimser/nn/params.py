"""Parameter containers, Glorot initialization, and JSON checkpoints for the
batchnorm + stacked-LSTM + dense + three-head regressor."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT_VERSION = 1
DEFAULT_LSTM_UNITS = (256, 256, 256)
DEFAULT_TRUNK_UNITS = 64
N_HEADS = 3

# order of the gate blocks inside concatenated LSTM weight matrices
GATE_ORDER = ("input", "forget", "cell", "output")

ACTIVATIONS = ("linear", "tanh")


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-5
    momentum: float = 0.99

    def __post_init__(self) -> None:
        d = self.gamma.shape[0]
        for name in ("beta", "running_mean", "running_var"):
            if getattr(self, name).shape != (d,):
                raise ValueError(f"batchnorm {name} shape mismatch")
        if not self.epsilon > 0.0:
            raise ValueError("batchnorm epsilon must be positive")
        if not 0.0 < self.momentum < 1.0:
            raise ValueError("batchnorm momentum must be in (0, 1)")

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


@dataclass
class LstmLayerParams:
    """One LSTM layer; gate blocks are concatenated in GATE_ORDER.

    w: (input_dim, 4*units) input weights, u: (units, 4*units) recurrent
    weights, b: (4*units,) bias.
    """

    w: np.ndarray
    u: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        units = self.u.shape[0]
        if self.u.shape != (units, 4 * units):
            raise ValueError(f"recurrent weights must be (units, 4*units), got {self.u.shape}")
        if self.w.ndim != 2 or self.w.shape[1] != 4 * units:
            raise ValueError(f"input weights must be (input_dim, 4*units), got {self.w.shape}")
        if self.b.shape != (4 * units,):
            raise ValueError(f"bias must be (4*units,), got {self.b.shape}")

    @property
    def units(self) -> int:
        return self.u.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    def gate_slice(self, gate: str) -> slice:
        k = GATE_ORDER.index(gate)
        return slice(k * self.units, (k + 1) * self.units)

    def gate_weights(self, gate: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Views of (W_g, U_g, b_g) for one named gate."""
        s = self.gate_slice(gate)
        return self.w[:, s], self.u[:, s], self.b[s]


@dataclass
class DenseParams:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self) -> None:
        if self.weights.ndim != 2:
            raise ValueError("dense weights must be 2-d")
        if self.bias.shape != (self.weights.shape[1],):
            raise ValueError("dense bias shape mismatch")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def units(self) -> int:
        return self.weights.shape[1]


@dataclass
class ModelParams:
    batchnorm: BatchNormParams
    lstm: list[LstmLayerParams]
    trunk: DenseParams
    heads: list[DenseParams]

    def __post_init__(self) -> None:
        if len(self.lstm) < 1:
            raise ValueError("at least one LSTM layer required")
        if self.lstm[0].input_dim != self.batchnorm.dim:
            raise ValueError("first LSTM layer does not match batchnorm width")
        for prev, cur in zip(self.lstm, self.lstm[1:]):
            if cur.input_dim != prev.units:
                raise ValueError("LSTM layer widths do not chain")
        if self.trunk.input_dim != self.lstm[-1].units:
            raise ValueError("trunk does not match last LSTM layer")
        if len(self.heads) != N_HEADS:
            raise ValueError(f"expected {N_HEADS} heads")
        for head in self.heads:
            if head.input_dim != self.trunk.units or head.units != 1:
                raise ValueError("heads must map trunk output to one unit")

    @property
    def input_dim(self) -> int:
        return self.batchnorm.dim

    @property
    def lstm_units(self) -> tuple[int, ...]:
        return tuple(layer.units for layer in self.lstm)

    def tensors(self) -> dict[str, np.ndarray]:
        """Ordered name -> trainable tensor map (running stats excluded)."""
        out: dict[str, np.ndarray] = {
            "batchnorm.gamma": self.batchnorm.gamma,
            "batchnorm.beta": self.batchnorm.beta,
        }
        for i, layer in enumerate(self.lstm):
            out[f"lstm{i}.w"] = layer.w
            out[f"lstm{i}.u"] = layer.u
            out[f"lstm{i}.b"] = layer.b
        out["trunk.weights"] = self.trunk.weights
        out["trunk.bias"] = self.trunk.bias
        for i, head in enumerate(self.heads):
            out[f"head{i}.weights"] = head.weights
            out[f"head{i}.bias"] = head.bias
        return out

    def copy(self) -> "ModelParams":
        """Deep copy of all tensors and running statistics."""
        return ModelParams(
            batchnorm=BatchNormParams(
                gamma=self.batchnorm.gamma.copy(),
                beta=self.batchnorm.beta.copy(),
                running_mean=self.batchnorm.running_mean.copy(),
                running_var=self.batchnorm.running_var.copy(),
                epsilon=self.batchnorm.epsilon,
                momentum=self.batchnorm.momentum,
            ),
            lstm=[LstmLayerParams(w=l.w.copy(), u=l.u.copy(), b=l.b.copy()) for l in self.lstm],
            trunk=DenseParams(
                weights=self.trunk.weights.copy(), bias=self.trunk.bias.copy(), activation=self.trunk.activation
            ),
            heads=[
                DenseParams(weights=h.weights.copy(), bias=h.bias.copy(), activation=h.activation)
                for h in self.heads
            ],
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(
    input_dim: int,
    units: tuple[int, ...] = DEFAULT_LSTM_UNITS,
    seed: int = 0,
    trunk_units: int = DEFAULT_TRUNK_UNITS,
) -> ModelParams:
    """Seeded Glorot-uniform initialization; forget-gate biases start at 1."""
    if input_dim < 1 or trunk_units < 1 or any(u < 1 for u in units):
        raise ValueError("all layer dimensions must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))

    lstm = []
    fan_in = input_dim
    for u in units:
        w = _glorot(rng, fan_in, u, (fan_in, 4 * u))
        rec = _glorot(rng, u, u, (u, 4 * u))
        b = np.zeros(4 * u)
        b[u : 2 * u] = 1.0  # forget gate
        lstm.append(LstmLayerParams(w=w, u=rec, b=b))
        fan_in = u

    trunk = DenseParams(
        weights=_glorot(rng, units[-1], trunk_units, (units[-1], trunk_units)),
        bias=np.zeros(trunk_units),
        activation="linear",
    )
    heads = [
        DenseParams(
            weights=_glorot(rng, trunk_units, 1, (trunk_units, 1)),
            bias=np.zeros(1),
            activation="tanh",
        )
        for _ in range(N_HEADS)
    ]
    batchnorm = BatchNormParams(
        gamma=np.ones(input_dim),
        beta=np.zeros(input_dim),
        running_mean=np.zeros(input_dim),
        running_var=np.ones(input_dim),
    )
    return ModelParams(batchnorm=batchnorm, lstm=lstm, trunk=trunk, heads=heads)


# ------------------------------------------------------------- checkpoints


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    """Write all tensors (and running stats) as a versioned JSON document."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "architecture": {
            "input_dim": params.input_dim,
            "lstm_units": list(params.lstm_units),
            "trunk_units": params.trunk.units,
            "n_heads": len(params.heads),
        },
        "batchnorm": {
            "gamma": params.batchnorm.gamma.tolist(),
            "beta": params.batchnorm.beta.tolist(),
            "running_mean": params.batchnorm.running_mean.tolist(),
            "running_var": params.batchnorm.running_var.tolist(),
            "epsilon": params.batchnorm.epsilon,
            "momentum": params.batchnorm.momentum,
        },
        "lstm": [
            {"input_weights": l.w.tolist(), "recurrent_weights": l.u.tolist(), "bias": l.b.tolist()}
            for l in params.lstm
        ],
        "trunk": {
            "weights": params.trunk.weights.tolist(),
            "bias": params.trunk.bias.tolist(),
            "activation": params.trunk.activation,
        },
        "heads": [
            {"weights": h.weights.tolist(), "bias": h.bias.tolist(), "activation": h.activation}
            for h in params.heads
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str | Path) -> ModelParams:
    """Read a checkpoint, validating version and shape chaining."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    try:
        bn = doc["batchnorm"]
        batchnorm = BatchNormParams(
            gamma=np.asarray(bn["gamma"], dtype=np.float64),
            beta=np.asarray(bn["beta"], dtype=np.float64),
            running_mean=np.asarray(bn["running_mean"], dtype=np.float64),
            running_var=np.asarray(bn["running_var"], dtype=np.float64),
            epsilon=float(bn["epsilon"]),
            momentum=float(bn["momentum"]),
        )
        lstm = [
            LstmLayerParams(
                w=np.asarray(l["input_weights"], dtype=np.float64),
                u=np.asarray(l["recurrent_weights"], dtype=np.float64),
                b=np.asarray(l["bias"], dtype=np.float64),
            )
            for l in doc["lstm"]
        ]
        trunk = DenseParams(
            weights=np.asarray(doc["trunk"]["weights"], dtype=np.float64),
            bias=np.asarray(doc["trunk"]["bias"], dtype=np.float64),
            activation=doc["trunk"]["activation"],
        )
        heads = [
            DenseParams(
                weights=np.asarray(h["weights"], dtype=np.float64),
                bias=np.asarray(h["bias"], dtype=np.float64),
                activation=h["activation"],
            )
            for h in doc["heads"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed checkpoint: {exc}") from None
    params = ModelParams(batchnorm=batchnorm, lstm=lstm, trunk=trunk, heads=heads)

    arch = doc.get("architecture", {})
    recorded = (arch.get("input_dim"), tuple(arch.get("lstm_units", ())), arch.get("trunk_units"))
    actual = (params.input_dim, params.lstm_units, params.trunk.units)
    if recorded != actual:
        raise ValueError(f"checkpoint architecture record {recorded} does not match tensors {actual}")
    return params
