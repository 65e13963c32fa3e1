"""Kernel backend selection.

RANKBO_BACKEND=numpy forces the pure-numpy kernels, RANKBO_BACKEND=numba
forces the jitted ones.  The default ("auto") uses numba when importable
and falls back to numpy otherwise.  Both backends compute the same math;
see bench.py for a speed comparison.
"""

import os

_choice = os.environ.get("RANKBO_BACKEND", "auto").lower()

if _choice in ("auto", ""):
    try:
        from .kernels import numba_impl as _impl
    except ImportError:  # pragma: no cover - depends on environment
        from .kernels import numpy_impl as _impl
elif _choice == "numba":
    from .kernels import numba_impl as _impl
elif _choice == "numpy":
    from .kernels import numpy_impl as _impl
else:
    raise RuntimeError(
        "RANKBO_BACKEND must be 'numba', 'numpy' or 'auto', got %r" % _choice
    )

RELU = _impl.RELU
TANH = _impl.TANH
mlp_forward_batch = _impl.mlp_forward_batch
mlp_backward_batch = _impl.mlp_backward_batch
adam_update = _impl.adam_update


def backend_name():
    return _impl.__name__.rsplit(".", 1)[-1].replace("_impl", "")
