"""Ranking-ensemble surrogate: N scorer networks plus a shared support-set
encoder, meta-training across tasks, per-step fine-tuning, and rank-space
prediction (score -> rank -> ensemble mean/std).
"""

import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .deepset import DeepSetParams, SupportSet, deepset_backward, deepset_encode, deepset_init
from .ranking import (LossKind, WeightScheme, list_loss, rank_scores,
                      true_rank_permutation)


@dataclass(frozen=True)
class DreConfig:
    ensemble_size: int = 10
    scorer_hidden: tuple = (32, 32, 32, 32)
    deepset_hidden: tuple = (32, 32)
    meta_feature_dim: int = 16
    use_meta_features: bool = True
    activation: str = "relu"
    loss_kind: LossKind = LossKind.LISTWISE_WEIGHTED
    weight_scheme: WeightScheme = WeightScheme.INVERSE_LOG
    meta_epochs: int = 5000
    meta_batch_lists: int = 100
    meta_lr: float = 0.001
    list_size: int = 100
    support_fraction: float = 0.2
    fine_tune_epochs: int = 1000
    fine_tune_lr: float = 0.001
    random_init_epochs: int = 1000
    random_init_lr: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.list_size < 2:
            raise ValueError("list_size must be >= 2")
        if not 0.0 < self.support_fraction < 1.0:
            raise ValueError("support_fraction must be in (0, 1)")
        object.__setattr__(self, "scorer_hidden", tuple(self.scorer_hidden))
        object.__setattr__(self, "deepset_hidden", tuple(self.deepset_hidden))
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        object.__setattr__(self, "weight_scheme", WeightScheme(self.weight_scheme))

    def to_dict(self):
        return {
            "ensemble_size": self.ensemble_size,
            "scorer_hidden": list(self.scorer_hidden),
            "deepset_hidden": list(self.deepset_hidden),
            "meta_feature_dim": self.meta_feature_dim,
            "use_meta_features": self.use_meta_features,
            "activation": self.activation,
            "loss_kind": self.loss_kind.value,
            "weight_scheme": self.weight_scheme.value,
            "meta_epochs": self.meta_epochs,
            "meta_batch_lists": self.meta_batch_lists,
            "meta_lr": self.meta_lr,
            "list_size": self.list_size,
            "support_fraction": self.support_fraction,
            "fine_tune_epochs": self.fine_tune_epochs,
            "fine_tune_lr": self.fine_tune_lr,
            "random_init_epochs": self.random_init_epochs,
            "random_init_lr": self.random_init_lr,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise ValueError("unknown config fields: %s" % sorted(unknown))
        return cls(**d)


@dataclass(frozen=True)
class DreModel:
    config: DreConfig
    input_dim: int
    deepset: DeepSetParams | None
    scorers: tuple
    scorer_seeds: tuple
    deepset_seed: int

    @property
    def scorer_input_dim(self):
        extra = self.config.meta_feature_dim if self.config.use_meta_features else 0
        return self.input_dim + extra


@dataclass(frozen=True)
class RankPrediction:
    mu: np.ndarray            # (Mq,) mean rank per query
    sigma: np.ndarray         # (Mq,) std of ranks per query
    member_ranks: np.ndarray  # (N, Mq) integer ranks


@dataclass(frozen=True)
class FineTuneResult:
    model: DreModel
    updated: bool
    epoch_losses: np.ndarray  # (N, epochs) per-member loss trace


@dataclass(frozen=True)
class MetaTrainResult:
    model: DreModel
    epoch_losses: np.ndarray  # mean training loss per epoch


def init_model(config, input_dim, seed=None):
    """Seeded ensemble initialization; per-member seeds keep members diverse."""
    seed = config.seed if seed is None else seed
    state = np.random.SeedSequence(seed).generate_state(config.ensemble_size + 1, dtype=np.uint64)
    deepset_seed = int(state[0])
    scorer_seeds = tuple(int(s) for s in state[1:])
    deepset_params = None
    if config.use_meta_features:
        deepset_params = deepset_init(
            input_dim, config.deepset_hidden, config.meta_feature_dim,
            config.activation, seed=deepset_seed,
        )
    extra = config.meta_feature_dim if config.use_meta_features else 0
    scorers = tuple(
        nn.mlp_init([input_dim + extra, *config.scorer_hidden, 1],
                    config.activation, seed=s)
        for s in scorer_seeds
    )
    return DreModel(config, input_dim, deepset_params, scorers, scorer_seeds, deepset_seed)


def _scorer_inputs(model, support, queries):
    Q = np.ascontiguousarray(queries, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != model.input_dim:
        raise nn.ShapeError("queries must be (Mq, %d)" % model.input_dim)
    if model.config.use_meta_features:
        z, _ = deepset_encode(model.deepset, support)
        Q = np.hstack([Q, np.tile(z, (Q.shape[0], 1))])
    return Q


def score_query(model, member_index, support, queries):
    """Scores of one ensemble member for a list of query configurations."""
    if not 0 <= member_index < len(model.scorers):
        raise IndexError("member index %d out of range" % member_index)
    Q = _scorer_inputs(model, support, queries)
    out, _ = nn.forward_batch(model.scorers[member_index], Q)
    return out[:, 0]


def predict_universe(model, support, rank_universe):
    """Per-member ranks plus mean/std over the whole rank universe."""
    U = np.ascontiguousarray(rank_universe, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] == 0:
        raise ValueError("rank universe must be a non-empty (M, d) matrix")
    Q = _scorer_inputs(model, support, U)
    n = len(model.scorers)
    member_ranks = np.empty((n, U.shape[0]), dtype=np.int64)
    for i in range(n):
        out, _ = nn.forward_batch(model.scorers[i], Q)
        member_ranks[i] = rank_scores(out[:, 0])
    mu = member_ranks.mean(axis=0)
    sigma = np.sqrt(np.mean((member_ranks - mu) ** 2, axis=0))
    return mu, sigma, member_ranks


def predict(model, support, queries, rank_universe):
    """Rank-space prediction for queries, ranked within rank_universe."""
    U = np.ascontiguousarray(rank_universe, dtype=np.float64)
    mu, sigma, member_ranks = predict_universe(model, support, U)
    lookup = {}
    for i in range(U.shape[0]):
        lookup.setdefault(U[i].tobytes(), i)
    idx = []
    for q in np.ascontiguousarray(queries, dtype=np.float64):
        key = q.tobytes()
        if key not in lookup:
            raise ValueError("query point not contained in rank universe")
        idx.append(lookup[key])
    idx = np.asarray(idx, dtype=np.int64)
    return RankPrediction(mu[idx], sigma[idx], member_ranks[:, idx])


def _train_step(scorer, ds_params, cfg, support, Xq, yq, lr,
                adam_sc, adam_in, adam_out, update_deepset):
    """One gradient step of one member (and optionally the shared encoder)."""
    use_meta = cfg.use_meta_features
    ds_cache = None
    if use_meta:
        z, ds_cache = deepset_encode(ds_params, support)
        Q = np.hstack([Xq, np.tile(z, (Xq.shape[0], 1))])
    else:
        Q = Xq
    out, cache = nn.forward_batch(scorer, Q)
    scores = out[:, 0]
    if cfg.loss_kind is LossKind.REGRESSION_MSE:
        loss, dscores = list_loss(cfg.loss_kind, scores, None, targets=yq)
    else:
        perm = true_rank_permutation(yq)
        loss, dscores = list_loss(cfg.loss_kind, scores, perm, scheme=cfg.weight_scheme)
    dtheta, dQ = nn.backward_batch(scorer, cache, dscores[:, None])
    scorer, adam_sc = nn.adam_step(scorer, dtheta, adam_sc, lr)
    if use_meta and update_deepset:
        dz = dQ[:, Xq.shape[1]:].sum(axis=0)
        g_in, g_out = deepset_backward(ds_params, ds_cache, dz)
        inner, adam_in = nn.adam_step(ds_params.inner, g_in.dtheta, adam_in, lr)
        outer, adam_out = nn.adam_step(ds_params.outer, g_out.dtheta, adam_out, lr)
        ds_params = DeepSetParams(inner, outer)
    return loss, scorer, ds_params, adam_sc, adam_in, adam_out


def _sample_list(rng, X, y, cfg):
    """Query list plus a disjoint (when possible) support subset of a task."""
    M = y.shape[0]
    q = min(cfg.list_size, M)
    qidx = rng.choice(M, size=q, replace=False)
    support = None
    if cfg.use_meta_features:
        mask = np.ones(M, dtype=bool)
        mask[qidx] = False
        rest = np.flatnonzero(mask)
        s = max(1, int(round(cfg.support_fraction * q)))
        if rest.size > 0:
            sidx = rng.choice(rest, size=min(s, rest.size), replace=False)
        else:
            # the whole task fits in one list; support must overlap
            sidx = rng.choice(qidx, size=min(s, q), replace=False)
        support = SupportSet(X[sidx], y[sidx])
    return X[qidx], y[qidx], support


def meta_train(config, dataset):
    """Meta-train a fresh ensemble over a collection of tasks.

    Each iteration samples one task, one member, one query list and a
    disjoint support subset, then takes one Adam step on that member and
    the shared encoder.  meta_batch_lists iterations form one epoch.
    """
    items = sorted(dataset.items(), key=lambda t: t[0])
    if not items:
        raise ValueError("empty meta-dataset")
    for tid, X, y in items:
        if y.shape[0] < 2:
            raise ValueError("task %r has fewer than 2 observations" % tid)
    d = items[0][1].shape[1]
    model = init_model(config, d)
    n = config.ensemble_size
    scorers = list(model.scorers)
    ds_params = model.deepset
    adam_sc = [nn.adam_init(s) for s in scorers]
    adam_in = nn.adam_init(ds_params.inner) if ds_params else None
    adam_out = nn.adam_init(ds_params.outer) if ds_params else None
    rng_pick = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([config.seed, 17])))
    member_rngs = [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([s, 23])))
        for s in model.scorer_seeds
    ]
    epoch_losses = np.empty(config.meta_epochs)
    for epoch in range(config.meta_epochs):
        batch = np.empty(config.meta_batch_lists)
        for b in range(config.meta_batch_lists):
            t_idx = int(rng_pick.integers(len(items)))
            m = int(rng_pick.integers(n))
            _, X, y = items[t_idx]
            Xq, yq, support = _sample_list(member_rngs[m], X, y, config)
            (batch[b], scorers[m], ds_params,
             adam_sc[m], adam_in, adam_out) = _train_step(
                scorers[m], ds_params, config, support, Xq, yq,
                config.meta_lr, adam_sc[m], adam_in, adam_out, True)
        epoch_losses[epoch] = batch.mean()
    model = replace(model, scorers=tuple(scorers), deepset=ds_params)
    return MetaTrainResult(model, epoch_losses)


def _fine_tune_support(rng, observations, fraction):
    n = observations.size
    if n < 5:
        return observations
    s = max(1, int(round(fraction * n)))
    return observations.subset(rng.choice(n, size=s, replace=False))


def fine_tune(model, observations, epochs=None, lr=None, update_deepset=True):
    """Train each member on the observed history with the configured loss.

    Members train sequentially in index order; the support subset for the
    encoder is resampled per epoch from each member's own stream.  Returns a
    FineTuneResult; with fewer than 2 observations this is a flagged no-op.
    """
    cfg = model.config
    epochs = cfg.fine_tune_epochs if epochs is None else epochs
    lr = cfg.fine_tune_lr if lr is None else lr
    if observations.size < 2:
        return FineTuneResult(model, False, np.empty((len(model.scorers), 0)))
    if observations.dim != model.input_dim:
        raise nn.ShapeError("observation dim does not match model input dim")
    n_members = len(model.scorers)
    scorers = list(model.scorers)
    ds_params = model.deepset
    adam_in = nn.adam_init(ds_params.inner) if ds_params else None
    adam_out = nn.adam_init(ds_params.outer) if ds_params else None
    Xq, yq = observations.x, observations.y
    losses = np.empty((n_members, epochs))
    for m in range(n_members):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([model.scorer_seeds[m], 29, observations.size])))
        adam_sc = nn.adam_init(scorers[m])
        for e in range(epochs):
            support = None
            if cfg.use_meta_features:
                support = _fine_tune_support(rng, observations, cfg.support_fraction)
            (losses[m, e], scorers[m], ds_params,
             adam_sc, adam_in, adam_out) = _train_step(
                scorers[m], ds_params, cfg, support, Xq, yq,
                lr, adam_sc, adam_in, adam_out, update_deepset)
    new_model = replace(model, scorers=tuple(scorers), deepset=ds_params)
    return FineTuneResult(new_model, epochs > 0, losses)


_MODEL_MAGIC = b"DREM1"


def model_to_bytes(model):
    """Versioned container: JSON header + encoder blocks + N scorer blocks."""
    header = {
        "config": model.config.to_dict(),
        "input_dim": model.input_dim,
        "scorer_seeds": list(model.scorer_seeds),
        "deepset_seed": model.deepset_seed,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    buf = _MODEL_MAGIC + struct.pack("<I", len(head)) + head
    if model.deepset is not None:
        buf += nn.mlp_to_bytes(model.deepset.inner)
        buf += nn.mlp_to_bytes(model.deepset.outer)
    for s in model.scorers:
        buf += nn.mlp_to_bytes(s)
    return buf


def model_from_bytes(buf):
    if buf[:5] != _MODEL_MAGIC:
        raise ValueError("bad model container magic")
    (hlen,) = struct.unpack_from("<I", buf, 5)
    header = json.loads(buf[9:9 + hlen].decode())
    config = DreConfig.from_dict(header["config"])
    offset = 9 + hlen
    ds_params = None
    if config.use_meta_features:
        inner, offset = nn.mlp_from_bytes(buf, offset)
        outer, offset = nn.mlp_from_bytes(buf, offset)
        ds_params = DeepSetParams(inner, outer)
    scorers = []
    for _ in range(config.ensemble_size):
        s, offset = nn.mlp_from_bytes(buf, offset)
        scorers.append(s)
    return DreModel(config, header["input_dim"], ds_params, tuple(scorers),
                    tuple(header["scorer_seeds"]), header["deepset_seed"])


def save_model(model, path):
    data = model_to_bytes(model)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    import os
    os.replace(tmp, path)


def load_model(path):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
