import numpy as np
import pytest

from rankbo.kernels import numpy_impl

numba_impl = pytest.importorskip("rankbo.kernels.numba_impl")


def make_case(rng, dims=(3, 8, 8, 2), batch=7):
    dims = np.asarray(dims, dtype=np.int64)
    theta = rng.standard_normal(numpy_impl.param_count(dims))
    X = np.ascontiguousarray(rng.standard_normal((batch, dims[0])))
    return theta, dims, X


def test_forward_bit_identical_relu(rng):
    theta, dims, X = make_case(rng)
    out_np, hid_np = numpy_impl.mlp_forward_batch(theta, dims, numpy_impl.RELU, X)
    out_nb, hid_nb = numba_impl.mlp_forward_batch(theta, dims, numpy_impl.RELU, X)
    assert out_np.tobytes() == out_nb.tobytes()
    assert hid_np.tobytes() == hid_nb.tobytes()


def test_forward_tanh_close(rng):
    # numba ships its own tanh, so agreement is to rounding, not bit-exact
    theta, dims, X = make_case(rng)
    out_np, _ = numpy_impl.mlp_forward_batch(theta, dims, numpy_impl.TANH, X)
    out_nb, _ = numba_impl.mlp_forward_batch(theta, dims, numpy_impl.TANH, X)
    assert np.allclose(out_np, out_nb, rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("act", [numpy_impl.RELU, numpy_impl.TANH])
def test_backward_matches(act, rng):
    theta, dims, X = make_case(rng)
    out, hidden = numpy_impl.mlp_forward_batch(theta, dims, act, X)
    dY = np.ascontiguousarray(rng.standard_normal(out.shape))
    dt_np, dx_np = numpy_impl.mlp_backward_batch(theta, dims, act, X, hidden, dY)
    dt_nb, dx_nb = numba_impl.mlp_backward_batch(theta, dims, act, X, hidden, dY)
    assert np.allclose(dt_np, dt_nb, rtol=1e-13, atol=1e-13)
    assert np.allclose(dx_np, dx_nb, rtol=1e-13, atol=1e-13)


def test_adam_update_matches(rng):
    n = 40
    theta, grad = rng.standard_normal(n), rng.standard_normal(n)
    m, v = np.zeros(n), np.zeros(n)
    args = (0.01, 0.9, 0.999, 1e-8)
    a = numpy_impl.adam_update(theta, grad, m, v, 1, *args)
    b = numba_impl.adam_update(theta, grad, m, v, 1, *args)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-15, atol=0)


def test_param_count_agrees():
    dims = np.asarray([4, 32, 32, 1], dtype=np.int64)
    assert numpy_impl.param_count(dims) == numba_impl.param_count(dims)
    assert numpy_impl.param_count(dims) == 4 * 32 + 32 + 32 * 32 + 32 + 32 + 1


def test_backend_module_reports_name():
    from rankbo import backend
    assert backend.backend_name() in ("numpy", "numba")
