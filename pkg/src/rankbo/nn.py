"""Minimal dense feed-forward network engine with analytic gradients and Adam.

Parameters live in a single packed float64 vector (per layer: weight matrix
row-major, then bias).  All structures are immutable after construction;
training ops return new values.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import backend

ACTIVATION_CODES = {"relu": backend.RELU, "tanh": backend.TANH}


class InvalidArchitectureError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class NumericError(ValueError):
    pass


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _layer_offsets(dims):
    """Packed (weight_offset, bias_offset, end) triples per layer."""
    offs = []
    pos = 0
    for l in range(len(dims) - 1):
        nw = dims[l] * dims[l + 1]
        offs.append((pos, pos + nw, pos + nw + dims[l + 1]))
        pos += nw + dims[l + 1]
    return offs


@dataclass(frozen=True)
class MlpParams:
    layer_dims: tuple
    hidden_activation: str
    theta: np.ndarray  # packed flat parameters, read-only

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    @property
    def dims_array(self):
        return np.asarray(self.layer_dims, dtype=np.int64)

    def weight(self, l):
        w0, b0, _ = _layer_offsets(self.layer_dims)[l]
        return self.theta[w0:b0].reshape(self.layer_dims[l + 1], self.layer_dims[l])

    def bias(self, l):
        _, b0, end = _layer_offsets(self.layer_dims)[l]
        return self.theta[b0:end]

    def with_theta(self, theta):
        return MlpParams(self.layer_dims, self.hidden_activation, _freeze(theta))


@dataclass(frozen=True)
class GradBundle:
    layer_dims: tuple
    dtheta: np.ndarray
    dinput: np.ndarray

    def weight_grad(self, l):
        w0, b0, _ = _layer_offsets(self.layer_dims)[l]
        return self.dtheta[w0:b0].reshape(self.layer_dims[l + 1], self.layer_dims[l])

    def bias_grad(self, l):
        _, b0, end = _layer_offsets(self.layer_dims)[l]
        return self.dtheta[b0:end]


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class ForwardCache:
    X: np.ndarray        # (B, in) inputs
    hidden: np.ndarray   # (B, total hidden units) post-activations


def _validate_dims(layer_dims):
    if len(layer_dims) < 2 or any(int(d) < 1 for d in layer_dims):
        raise InvalidArchitectureError(
            "layer_dims needs >= 2 positive entries, got %r" % (layer_dims,)
        )
    return tuple(int(d) for d in layer_dims)


def mlp_init(layer_dims, hidden_activation="relu", seed=0):
    """Glorot-uniform weights, zero biases; deterministic in (dims, seed)."""
    dims = _validate_dims(layer_dims)
    if hidden_activation not in ACTIVATION_CODES:
        raise InvalidArchitectureError("unknown activation %r" % hidden_activation)
    rng = np.random.Generator(np.random.PCG64(seed))
    parts = []
    for l in range(len(dims) - 1):
        nin, nout = dims[l], dims[l + 1]
        limit = np.sqrt(6.0 / (nin + nout))
        parts.append(rng.uniform(-limit, limit, size=nin * nout))
        parts.append(np.zeros(nout))
    return MlpParams(dims, hidden_activation, _freeze(np.concatenate(parts)))


def forward_batch(params, X):
    """Batched forward; X shape (B, input_dim).  Returns (Y, ForwardCache)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ShapeError(
            "input shape %r incompatible with input dim %d" % (X.shape, params.input_dim)
        )
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite network input")
    out, hidden = backend.mlp_forward_batch(
        params.theta, params.dims_array, ACTIVATION_CODES[params.hidden_activation], X
    )
    return out, ForwardCache(X, hidden)


def backward_batch(params, cache, dY):
    """Batched backward; dY shape (B, output_dim).  Gradients sum over rows."""
    dY = np.ascontiguousarray(dY, dtype=np.float64)
    if dY.shape != (cache.X.shape[0], params.output_dim):
        raise ShapeError("output grad shape %r does not match" % (dY.shape,))
    dtheta, dX = backend.mlp_backward_batch(
        params.theta, params.dims_array,
        ACTIVATION_CODES[params.hidden_activation], cache.X, cache.hidden, dY,
    )
    return dtheta, dX


def mlp_forward(params, x):
    """Single-input forward pass; returns (output vector, cache)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("expected a 1-d input vector")
    y, cache = forward_batch(params, x[None, :])
    return y[0], cache


def mlp_backward(params, cache, output_grad):
    """Gradients of a scalar loss wrt parameters and input."""
    output_grad = np.asarray(output_grad, dtype=np.float64)
    if output_grad.ndim != 1:
        raise ShapeError("expected a 1-d output gradient")
    dtheta, dX = backward_batch(params, cache, output_grad[None, :])
    return GradBundle(params.layer_dims, _freeze(dtheta), _freeze(dX[0]))


def adam_init(params, beta1=0.9, beta2=0.999, epsilon=1e-8):
    z = np.zeros_like(params.theta)
    return AdamState(_freeze(z), _freeze(z.copy()), 0, beta1, beta2, epsilon)


def adam_step(params, grads, state, lr):
    """Bias-corrected Adam update; returns (new params, new state)."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    dtheta = grads.dtheta if isinstance(grads, GradBundle) else np.asarray(grads)
    if dtheta.shape != params.theta.shape:
        raise ShapeError("gradient/parameter shape mismatch")
    if not np.all(np.isfinite(dtheta)):
        raise NumericError("non-finite gradient; step rejected")
    t = state.step_count + 1
    theta2, m2, v2 = backend.adam_update(
        params.theta, dtheta, state.m, state.v, t,
        lr, state.beta1, state.beta2, state.epsilon,
    )
    new_state = AdamState(_freeze(m2), _freeze(v2), t,
                          state.beta1, state.beta2, state.epsilon)
    return params.with_theta(theta2), new_state


_MAGIC = b"DRE1"


def mlp_to_bytes(params):
    """Serialize as magic + layer dims + activation + little-endian float64s."""
    head = _MAGIC
    head += struct.pack("<I", len(params.layer_dims))
    head += struct.pack("<%dI" % len(params.layer_dims), *params.layer_dims)
    head += struct.pack("<B", ACTIVATION_CODES[params.hidden_activation])
    return head + params.theta.astype("<f8").tobytes()


def mlp_from_bytes(buf, offset=0):
    """Inverse of mlp_to_bytes; returns (MlpParams, next offset)."""
    if buf[offset:offset + 4] != _MAGIC:
        raise ValueError("bad parameter stream magic")
    offset += 4
    (ndims,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    dims = struct.unpack_from("<%dI" % ndims, buf, offset)
    offset += 4 * ndims
    (act_code,) = struct.unpack_from("<B", buf, offset)
    offset += 1
    act = {v: k for k, v in ACTIVATION_CODES.items()}[act_code]
    dims_arr = np.asarray(dims, dtype=np.int64)
    from .kernels.numpy_impl import param_count
    n = int(param_count(dims_arr))
    theta = np.frombuffer(buf, dtype="<f8", count=n, offset=offset)
    offset += 8 * n
    return MlpParams(tuple(int(d) for d in dims), act, _freeze(theta.copy())), offset
