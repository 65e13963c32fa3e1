"""Numba-jitted versions of the hot kernels.

The numpy implementations are written in a numba-compatible subset, so the
jitted kernels are compiled from the identical source and produce the same
math, just without per-layer Python overhead.
"""

import numba

from . import numpy_impl

RELU = numpy_impl.RELU
TANH = numpy_impl.TANH

param_count = numpy_impl.param_count

mlp_forward_batch = numba.njit(cache=True)(numpy_impl.mlp_forward_batch)
mlp_backward_batch = numba.njit(cache=True)(numpy_impl.mlp_backward_batch)
adam_update = numba.njit(cache=True)(numpy_impl.adam_update)
