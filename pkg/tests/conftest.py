import numpy as np
import pytest


def central_diff(f, theta, h=1e-5):
    """Central finite-difference gradient of scalar f at flat vector theta."""
    g = np.empty_like(theta)
    for k in range(theta.size):
        tp = theta.copy()
        tm = theta.copy()
        tp[k] += h
        tm[k] -= h
        g[k] = (f(tp) - f(tm)) / (2 * h)
    return g


def assert_grad_close(analytic, numeric, rel=1e-4, floor=1e-6):
    denom = np.maximum(np.abs(numeric), floor)
    err = np.abs(analytic - numeric) / denom
    assert err.max() < rel, "max rel grad error %.3g" % err.max()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
