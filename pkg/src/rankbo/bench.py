"""Benchmark the numba kernels against the pure-numpy fallback.

Run:  python -m rankbo.bench
"""

import time

import numpy as np

from .kernels import numpy_impl

SIZES = [
    ("scorer 1x32x32x32x32x1, B=15", [17, 32, 32, 32, 32, 1], 15),
    ("scorer 1x32x32x32x32x1, B=201", [17, 32, 32, 32, 32, 1], 201),
    ("encoder 2x32x32, B=20", [2, 32, 32], 20),
]


def _pack(dims, rng):
    n = int(numpy_impl.param_count(np.asarray(dims, dtype=np.int64)))
    return rng.standard_normal(n)


def _time(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def run(reps=2000):
    try:
        from .kernels import numba_impl
    except ImportError:
        print("numba not available; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print("%-34s %12s %12s %8s" % ("case", "numpy (us)", "numba (us)", "speedup"))
    for label, dims, batch in SIZES:
        dims_arr = np.asarray(dims, dtype=np.int64)
        theta = _pack(dims, rng)
        X = rng.standard_normal((batch, dims[0]))
        dY = rng.standard_normal((batch, dims[-1]))

        def step(impl):
            out, hidden = impl.mlp_forward_batch(theta, dims_arr, 0, X)
            impl.mlp_backward_batch(theta, dims_arr, 0, X, hidden, dY)

        step(numba_impl)  # JIT warmup
        t_np = _time(lambda: step(numpy_impl), reps)
        t_nb = _time(lambda: step(numba_impl), reps)
        print("%-34s %12.1f %12.1f %7.1fx" % (label, t_np * 1e6, t_nb * 1e6, t_np / t_nb))


if __name__ == "__main__":
    run()
