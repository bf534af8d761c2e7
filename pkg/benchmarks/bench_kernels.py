"""Compare the compiled LSTM cell kernels against the numpy fallback.

Times the raw cell forward/backward at a few (batch, units) shapes and a
full train step (forward + backward) of the three-layer network, for every
available backend. Run from the repo root:

    python benchmarks/bench_kernels.py [--repeats 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dimser import _kernels
from dimser.losses import BatchPair, LossKind, loss_gradient
from dimser.nn import backward, forward, init_params

CELL_SHAPES = ((32, 64), (32, 256), (128, 256))
NET_SHAPE = (32, 40, 68)  # batch, timesteps, input dim
NET_UNITS = (64, 64, 64)


def _time(fn, repeats: int) -> float:
    fn()  # warm up (and JIT nothing; this is for cache fairness)
    best = float("inf")
    for _ in range(max(3, repeats // 10)):
        start = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def bench_cell(backend: str, batch: int, units: int, repeats: int) -> tuple[float, float]:
    _kernels.set_backend(backend)
    rng = np.random.default_rng(0)
    preact = rng.normal(size=(batch, 4 * units))
    c_prev = rng.normal(size=(batch, units))
    gates, c, tanh_c, h = _kernels.lstm_cell_forward(preact, c_prev)
    dh = rng.normal(size=(batch, units))
    dc = rng.normal(size=(batch, units))
    fwd = _time(lambda: _kernels.lstm_cell_forward(preact, c_prev), repeats)
    bwd = _time(lambda: _kernels.lstm_cell_backward(gates, c_prev, tanh_c, dh, dc), repeats)
    return fwd, bwd


def bench_network(backend: str, repeats: int) -> float:
    _kernels.set_backend(backend)
    batch, steps, dim = NET_SHAPE
    rng = np.random.default_rng(1)
    feats = rng.normal(size=(batch, steps, dim))
    gold = np.tanh(rng.normal(size=(batch, 3)))
    params = init_params(dim, units=NET_UNITS, seed=0, trunk_units=32)

    def step():
        preds, cache = forward(params, feats, training=True)
        dpreds = np.zeros_like(preds)
        for k in range(3):
            dpreds[:, k] = loss_gradient(LossKind.CCCL, BatchPair(preds[:, k], gold[:, k])) / 3.0
        backward(params, cache, dpreds)

    return _time(step, repeats)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200, help="iterations per timing loop")
    args = parser.parse_args()

    backends = _kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("note: compiled extension not importable; timing the fallback only")

    print(f"\n{'cell kernel':<22}" + "".join(f"{b + ' (us)':>14}" for b in backends) + f"{'speedup':>10}")
    for batch, units in CELL_SHAPES:
        for name in ("forward", "backward"):
            times = {}
            for backend in backends:
                fwd, bwd = bench_cell(backend, batch, units, args.repeats)
                times[backend] = fwd if name == "forward" else bwd
            row = f"{name} n={batch} u={units}"
            line = f"{row:<22}" + "".join(f"{times[b] * 1e6:>14.1f}" for b in backends)
            if "cython" in times and "numpy" in times:
                line += f"{times['numpy'] / times['cython']:>9.2f}x"
            print(line)

    print(f"\n{'full train step':<22}" + "".join(f"{b + ' (ms)':>14}" for b in backends) + f"{'speedup':>10}")
    net_repeats = max(5, args.repeats // 20)
    times = {b: bench_network(b, net_repeats) for b in backends}
    row = f"n={NET_SHAPE[0]} T={NET_SHAPE[1]} u={NET_UNITS[0]}"
    line = f"{row:<22}" + "".join(f"{times[b] * 1e3:>14.2f}" for b in backends)
    if "cython" in times and "numpy" in times:
        line += f"{times['numpy'] / times['cython']:>9.2f}x"
    print(line)


if __name__ == "__main__":
    main()
