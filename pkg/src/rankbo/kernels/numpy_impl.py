"""Dense feed-forward network hot kernels, pure-numpy implementation.

These functions are written in a restricted numpy style so that the numba
backend can JIT the very same source (see numba_impl.py).  Parameters are
packed into a single flat float64 vector: for each layer, the weight matrix
(out x in, row-major) followed by the bias vector.
"""

import numpy as np

RELU = 0
TANH = 1


def param_count(dims):
    """Number of packed parameters for a layer_dims vector."""
    n = 0
    for l in range(dims.shape[0] - 1):
        n += dims[l] * dims[l + 1] + dims[l + 1]
    return n


def mlp_forward_batch(theta, dims, act, X):
    """Forward pass for a batch X of shape (B, dims[0]).

    Returns (out, hidden) where out has shape (B, dims[-1]) and hidden
    stores the post-activation values of every hidden layer, concatenated
    along axis 1 in layer order (sufficient cache for the backward pass).
    """
    n_layers = dims.shape[0] - 1
    B = X.shape[0]
    n_hidden = 0
    for l in range(1, n_layers):
        n_hidden += dims[l]
    hidden = np.empty((B, n_hidden))
    out = np.empty((B, dims[n_layers]))
    a = X
    pos = 0
    h = 0
    for l in range(n_layers):
        nin = dims[l]
        nout = dims[l + 1]
        W = theta[pos:pos + nin * nout].reshape(nout, nin)
        b = theta[pos + nin * nout:pos + nin * nout + nout]
        pos += nin * nout + nout
        z = np.dot(a, np.ascontiguousarray(W.T)) + b
        if l < n_layers - 1:
            if act == RELU:
                a = np.maximum(z, 0.0)
            else:
                a = np.tanh(z)
            hidden[:, h:h + nout] = a
            h += nout
        else:
            out = z
    return out, hidden


def mlp_backward_batch(theta, dims, act, X, hidden, dY):
    """Backward pass; dY is d(loss)/d(out), summed-over-batch gradients.

    Returns (dtheta, dX) with dtheta packed like theta and dX of shape
    (B, dims[0]) holding per-row input gradients.
    """
    n_layers = dims.shape[0] - 1
    dtheta = np.empty_like(theta)
    # packed offset of each layer's weight block
    offs = np.empty(n_layers, dtype=np.int64)
    pos = 0
    for l in range(n_layers):
        offs[l] = pos
        pos += dims[l] * dims[l + 1] + dims[l + 1]
    # start offset of each hidden layer's activation block
    hoffs = np.empty(n_layers, dtype=np.int64)
    hpos = 0
    for l in range(1, n_layers):
        hoffs[l - 1] = hpos
        hpos += dims[l]
    g = dY
    for l in range(n_layers - 1, -1, -1):
        nin = dims[l]
        nout = dims[l + 1]
        if l == 0:
            a_prev = X
        else:
            a_prev = np.ascontiguousarray(hidden[:, hoffs[l - 1]:hoffs[l - 1] + nin])
        W = theta[offs[l]:offs[l] + nin * nout].reshape(nout, nin)
        dW = np.dot(np.ascontiguousarray(g.T), a_prev)
        dtheta[offs[l]:offs[l] + nin * nout] = dW.ravel()
        dtheta[offs[l] + nin * nout:offs[l] + nin * nout + nout] = np.sum(g, axis=0)
        gprev = np.dot(g, W)
        if l > 0:
            if act == RELU:
                gprev = gprev * (a_prev > 0.0)
            else:
                gprev = gprev * (1.0 - a_prev * a_prev)
        g = gprev
    return dtheta, g


def adam_update(theta, grad, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step at step count t (1-based)."""
    m2 = beta1 * m + (1.0 - beta1) * grad
    v2 = beta2 * v + (1.0 - beta2) * grad * grad
    mhat = m2 / (1.0 - beta1 ** t)
    vhat = v2 / (1.0 - beta2 ** t)
    theta2 = theta - lr * mhat / (np.sqrt(vhat) + eps)
    return theta2, m2, v2
