"""Timing comparison of the numba and numpy drift-loop backends.

Runs the same fused GD loop (forward, gradient step, periodic kernel
snapshot) through both backends and reports per-iteration cost.  The
numba path needs one warm-up call to compile; that cost is excluded.

Usage:
    python3 benchmarks/bench_backends.py [--widths 100,1000,10000] [--iters 200]
"""

import argparse
import time

import numpy as np

from tangentkit import NUMBA_AVAILABLE, set_backend
from tangentkit._accel import drift_run
from tangentkit.activations import get_activation
from tangentkit.systems import ShallowNet, synthetic_dataset


def time_backend(name, x, y, theta, act_code, out_code, eta, iters, stride):
    set_backend(name)
    w, b, v = theta
    # warm-up compiles the numba kernels; harmless for numpy
    drift_run(x, y, w.copy(), b.copy(), v.copy(), act_code, out_code,
              eta, 5, 0.0, 1)
    t0 = time.perf_counter()
    (_, _, _), t, delta, loss, status, done = drift_run(
        x, y, w.copy(), b.copy(), v.copy(), act_code, out_code,
        eta, iters, 0.0, stride)
    elapsed = time.perf_counter() - t0
    set_backend(None)
    return elapsed, done, float(delta[-1]), float(loss[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--widths", default="100,1000,10000")
    parser.add_argument("--iters", type=int, default=200)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--activation", default="relu")
    args = parser.parse_args()

    widths = [int(w) for w in args.widths.split(",")]
    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    data = synthetic_dataset(20, seed=0)
    x = data.scalar_inputs()
    y = data.targets
    act_code = get_activation(args.activation).code
    out_code = get_activation("identity").code

    print("backends:", ", ".join(backends))
    header = "%8s %10s %12s %15s %9s" % (
        "width", "backend", "total (s)", "per-iter (ms)", "speedup")
    print(header)
    print("-" * len(header))

    for m in widths:
        net = ShallowNet(m, args.activation, inputs=x, trainable="wvb")
        theta = net.split(net.init_params(args.seed))
        rows = {}
        for name in backends:
            rows[name] = time_backend(
                name, x, y, theta, act_code, out_code,
                0.05, args.iters, args.stride)
        base = rows["numpy"][0]
        for name, (elapsed, done, delta, loss) in rows.items():
            per_iter = 1000.0 * elapsed / max(done, 1)
            print("%8d %10s %12.3f %15.3f %8.1fx"
                  % (m, name, elapsed, per_iter, base / elapsed))
        losses = [rows[name][3] for name in backends]
        if len(losses) == 2 and not np.isclose(losses[0], losses[1], rtol=1e-9):
            print("  WARNING: backend losses disagree: %.17g vs %.17g" % tuple(losses))


if __name__ == "__main__":
    main()
