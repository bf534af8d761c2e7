"""Backend selection for the LSTM cell kernels.

The compiled extension is preferred when importable; the numpy fallback is
always available. Set DIMSER_KERNELS=numpy or DIMSER_KERNELS=cython to pin
a backend at import time, or call set_backend() at runtime (global switch,
not thread-safe; training itself is sequential).
"""

from __future__ import annotations

import os

from . import _cell_np

try:
    from . import _cell_cy
except ImportError:
    _cell_cy = None

_BACKENDS = {"numpy": _cell_np}
if _cell_cy is not None:
    _BACKENDS["cython"] = _cell_cy

_active = ""
lstm_cell_forward = None
lstm_cell_backward = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def backend_name() -> str:
    return _active


def set_backend(name: str) -> None:
    """Route the cell kernels through the named backend."""
    global _active, lstm_cell_forward, lstm_cell_backward
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    mod = _BACKENDS[name]
    lstm_cell_forward = mod.lstm_cell_forward
    lstm_cell_backward = mod.lstm_cell_backward
    _active = name


_requested = os.environ.get("DIMSER_KERNELS", "").strip()
if _requested:
    set_backend(_requested)
else:
    set_backend("cython" if _cell_cy is not None else "numpy")
