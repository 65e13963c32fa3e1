"""Permutation-invariant encoder of (configuration, target) support sets.

z = outer(mean_j inner(x_j concat y_j)).  Rows are pooled in a canonical
lexicographic order, so the encoding is bit-exact under permutation of the
support set.
"""

from dataclasses import dataclass

import numpy as np

from . import nn


class EmptySupportError(ValueError):
    pass


@dataclass(frozen=True)
class SupportSet:
    x: np.ndarray  # (M, d)
    y: np.ndarray  # (M,)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise nn.ShapeError("support x must be (M, d) with matching y of length M")
        if x.shape[0] == 0:
            raise EmptySupportError("support set is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise nn.NumericError("non-finite support values")
        object.__setattr__(self, "x", nn._freeze(x))
        object.__setattr__(self, "y", nn._freeze(y))

    @property
    def size(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    def subset(self, idx):
        return SupportSet(self.x[idx], self.y[idx])


@dataclass(frozen=True)
class DeepSetParams:
    inner: nn.MlpParams
    outer: nn.MlpParams

    def __post_init__(self):
        if self.inner.output_dim != self.outer.input_dim:
            raise nn.ShapeError("inner output dim must equal outer input dim")

    @property
    def output_dim(self):
        return self.outer.output_dim

    @property
    def set_dim(self):
        """Dimensionality d of the configuration vectors."""
        return self.inner.input_dim - 1


@dataclass(frozen=True)
class DeepSetCache:
    pooled_rows: np.ndarray
    inner_cache: nn.ForwardCache
    outer_cache: nn.ForwardCache
    n_rows: int


def deepset_init(dim, hidden=(32, 32), output_dim=16, activation="relu", seed=0):
    """Fresh encoder for d-dimensional configurations.

    inner is [d+1, *hidden], outer is [*hidden, output_dim]; with the default
    hidden=(32, 32) both sub-networks have two fully connected layers.
    """
    ss = np.random.SeedSequence(seed).spawn(2)
    inner = nn.mlp_init([dim + 1, *hidden], activation, seed=ss[0])
    outer = nn.mlp_init([*hidden, output_dim], activation, seed=ss[1])
    return DeepSetParams(inner, outer)


def _canonical_rows(support):
    rows = np.hstack([support.x, support.y[:, None]])
    order = np.lexsort(rows.T[::-1])
    return np.ascontiguousarray(rows[order])


def deepset_encode(params, support):
    """Encode a support set to meta-features z; returns (z, cache)."""
    if support.dim != params.set_dim:
        raise nn.ShapeError(
            "support dim %d does not match encoder dim %d" % (support.dim, params.set_dim)
        )
    rows = _canonical_rows(support)
    H, inner_cache = nn.forward_batch(params.inner, rows)
    pooled = H.mean(axis=0)
    z_mat, outer_cache = nn.forward_batch(params.outer, pooled[None, :])
    cache = DeepSetCache(rows, inner_cache, outer_cache, rows.shape[0])
    return z_mat[0], cache


def deepset_backward(params, cache, z_grad):
    """Gradients of a scalar loss wrt inner and outer parameters.

    Returns (inner GradBundle, outer GradBundle); input gradients in the
    bundles refer to the pooled vector and the stacked rows respectively.
    """
    z_grad = np.asarray(z_grad, dtype=np.float64)
    if z_grad.shape != (params.output_dim,):
        raise nn.ShapeError("z grad length %r, expected %d" % (z_grad.shape, params.output_dim))
    d_outer, d_pooled = nn.backward_batch(params.outer, cache.outer_cache, z_grad[None, :])
    d_rows_out = np.tile(d_pooled[0] / cache.n_rows, (cache.n_rows, 1))
    d_inner, d_rows = nn.backward_batch(params.inner, cache.inner_cache, d_rows_out)
    inner_grads = nn.GradBundle(params.inner.layer_dims, nn._freeze(d_inner), nn._freeze(d_rows))
    outer_grads = nn.GradBundle(params.outer.layer_dims, nn._freeze(d_outer), nn._freeze(d_pooled[0]))
    return inner_grads, outer_grads
