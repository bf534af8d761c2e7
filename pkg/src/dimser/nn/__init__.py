from .network import ForwardCache, backward, forward, predictions_to_triples
from .params import (
    CHECKPOINT_FORMAT_VERSION,
    DEFAULT_LSTM_UNITS,
    DEFAULT_TRUNK_UNITS,
    GATE_ORDER,
    BatchNormParams,
    DenseParams,
    LstmLayerParams,
    ModelParams,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .rmsprop import RmspropState, rmsprop_step

__all__ = [
    "BatchNormParams",
    "CHECKPOINT_FORMAT_VERSION",
    "DEFAULT_LSTM_UNITS",
    "DEFAULT_TRUNK_UNITS",
    "DenseParams",
    "ForwardCache",
    "GATE_ORDER",
    "LstmLayerParams",
    "ModelParams",
    "RmspropState",
    "backward",
    "forward",
    "init_params",
    "load_checkpoint",
    "predictions_to_triples",
    "rmsprop_step",
    "save_checkpoint",
]
