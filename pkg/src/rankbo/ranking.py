"""Ranking mathematics: true-rank permutations, list weights, the list-wise
permutation likelihood and losses, ablation losses, and score-to-rank.

All losses return (loss, gradient wrt scores).  Higher target y means a
better (lower) rank; rank 1 is the best item.
"""

import enum

import numpy as np

from .nn import NumericError, ShapeError


class WeightScheme(str, enum.Enum):
    INVERSE_LOG = "inverse_log"
    INVERSE_LINEAR = "inverse_linear"
    PDA = "position_dependent_attention"
    UNIFORM = "uniform"


class LossKind(str, enum.Enum):
    LISTWISE_WEIGHTED = "listwise_weighted"
    LISTWISE_UNWEIGHTED = "listwise_unweighted"
    PAIRWISE = "pairwise"
    POINTWISE = "pointwise"
    REGRESSION_MSE = "regression_mse"


class DegenerateListError(ValueError):
    pass


def _check_scores(scores):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ShapeError("scores must be a non-empty 1-d vector")
    if not np.all(np.isfinite(scores)):
        raise NumericError("non-finite scores")
    return scores


def true_rank_permutation(targets):
    """Indices sorted by descending target; ties broken by ascending index."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 1 or targets.size == 0:
        raise ShapeError("targets must be a non-empty 1-d vector")
    if np.any(np.isnan(targets)):
        raise NumericError("NaN target")
    # stable sort on -y keeps ascending-index tie-break
    return np.argsort(-targets, kind="stable")


def list_weight(position, scheme, k=None):
    """Relevance weight of a 1-based list position."""
    scheme = WeightScheme(scheme)
    if position < 1:
        raise ValueError("position must be >= 1")
    if scheme is WeightScheme.INVERSE_LOG:
        return 1.0 / np.log(position + 1.0)
    if scheme is WeightScheme.INVERSE_LINEAR:
        return 1.0 / position
    if scheme is WeightScheme.PDA:
        if k is None or not (1 <= position <= k):
            raise ValueError("PDA needs list length k with 1 <= position <= k")
        return (k - position + 1.0) / (k * (k + 1.0) / 2.0)
    return 1.0


def _weights(m, scheme):
    return np.array([list_weight(j, scheme, k=m) for j in range(1, m + 1)])


def _check_perm(scores, perm):
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(scores.size)):
        raise ShapeError("perm is not a permutation of 0..M-1")
    return perm


def _suffix_logsumexp(t):
    """lse[j] = log sum_{k>=j} exp(t[k]), computed stably back to front."""
    lse = np.empty_like(t)
    lse[-1] = t[-1]
    for j in range(t.size - 2, -1, -1):
        lse[j] = np.logaddexp(t[j], lse[j + 1])
    return lse


def listwise_permutation_prob(scores, perm):
    """Plackett-Luce probability of the ordering perm under the scores."""
    scores = _check_scores(scores)
    perm = _check_perm(scores, perm)
    t = scores[perm]
    lse = _suffix_logsumexp(t)
    return float(np.exp(np.sum(t - lse)))


def listwise_loss(scores, perm, scheme=WeightScheme.INVERSE_LOG):
    """Weighted negative log Plackett-Luce likelihood and its score gradient."""
    scores = _check_scores(scores)
    perm = _check_perm(scores, perm)
    m = scores.size
    w = _weights(m, scheme)
    t = scores[perm]
    lse = _suffix_logsumexp(t)
    loss = float(np.dot(w, lse - t))
    # d loss / d t_k = sum_{j<=k} w_j exp(t_k - lse_j) - w_k
    # entries with j > k are excluded before exponentiating: t_k - lse_j is
    # unbounded above there and would overflow even though it is unused
    diff = t[None, :] - lse[:, None]            # diff[j, k] = t_k - lse_j
    keep = np.tril(np.ones((m, m), dtype=bool)).T   # j <= k
    p = np.exp(np.where(keep, diff, -np.inf))   # p[j, k] = exp(t_k - lse_j)
    gt = (w[:, None] * p).sum(axis=0) - w
    grad = np.empty_like(scores)
    grad[perm] = gt
    return loss, grad


def pairwise_loss(scores, perm):
    """Logistic pairwise loss over all correctly ordered pairs of perm."""
    scores = _check_scores(scores)
    perm = _check_perm(scores, perm)
    m = scores.size
    if m < 2:
        raise DegenerateListError("pairwise loss needs at least 2 items")
    t = scores[perm]
    diff = t[:, None] - t[None, :]              # diff[i, j] = s_i - s_j
    upper = np.triu(np.ones((m, m)), k=1)       # i precedes j
    # -log sigmoid(d) = log(1 + exp(-d)), via logaddexp for stability
    loss = float(np.sum(np.logaddexp(0.0, -diff) * upper))
    sig = 1.0 / (1.0 + np.exp(np.clip(diff, -700, 700)))  # sigmoid(-d)
    gt = -(sig * upper).sum(axis=1) + (sig * upper).sum(axis=0)
    grad = np.empty_like(scores)
    grad[perm] = gt
    return loss, grad


def _rank_targets(m):
    """Score targets per list position: 1 for the best, -1 for the worst."""
    return 1.0 - 2.0 * np.arange(m) / (m - 1.0)


def pointwise_loss(scores, perm):
    """Squared error against negated normalized rank targets."""
    scores = _check_scores(scores)
    perm = _check_perm(scores, perm)
    m = scores.size
    if m < 2:
        raise DegenerateListError("pointwise loss needs at least 2 items")
    targets = np.empty(m)
    targets[perm] = _rank_targets(m)
    resid = scores - targets
    return float(np.sum(resid * resid)), 2.0 * resid


def regression_mse(predictions, targets):
    """Mean squared error and gradient wrt predictions."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.ndim != 1:
        raise ShapeError("predictions and targets must be 1-d and equal length")
    resid = predictions - targets
    m = predictions.size
    return float(np.mean(resid * resid)), 2.0 * resid / m


def rank_scores(scores):
    """rank(s_j) = #{s in scores : s >= s_j}; rank 1 is the highest score."""
    scores = _check_scores(scores)
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.int64)
    # items tied on score share the rank = count of scores >= value
    sorted_vals = scores[order]
    count_ge = np.searchsorted(-sorted_vals, -sorted_vals, side="right")
    ranks[order] = count_ge
    return ranks


def list_loss(kind, scores, perm, targets=None, scheme=WeightScheme.INVERSE_LOG):
    """Dispatch a LossKind to its (loss, grad) implementation."""
    kind = LossKind(kind)
    if kind is LossKind.LISTWISE_WEIGHTED:
        return listwise_loss(scores, perm, scheme)
    if kind is LossKind.LISTWISE_UNWEIGHTED:
        return listwise_loss(scores, perm, WeightScheme.UNIFORM)
    if kind is LossKind.PAIRWISE:
        return pairwise_loss(scores, perm)
    if kind is LossKind.POINTWISE:
        return pointwise_loss(scores, perm)
    if targets is None:
        raise ValueError("regression loss needs targets")
    return regression_mse(scores, targets)
