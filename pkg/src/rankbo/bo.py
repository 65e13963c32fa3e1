"""Bayesian-optimization driver over a finite candidate pool."""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import acquisition, surrogate
from .deepset import SupportSet
from .nn import ShapeError


@dataclass(frozen=True)
class Task:
    id: str
    X: np.ndarray  # (M, d) candidate pool
    y: np.ndarray  # (M,) target per candidate, maximized

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0 or y.shape != (X.shape[0],):
            raise ShapeError("task needs a non-empty (M, d) pool with M targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite task values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def size(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class BoStep:
    index: int
    candidate_index: int
    x: np.ndarray
    y: float
    alpha: float  # nan for initial observations


@dataclass
class BoHistory:
    task_id: str
    method: str
    seed: int
    n_init: int
    steps: list = field(default_factory=list)
    status: str = "ok"

    def incumbents(self):
        """Best-so-far y after each observation (length = #observations)."""
        return np.maximum.accumulate([s.y for s in self.steps])

    def incumbent_curve(self):
        """Best-so-far y at step 0 (= after init) and after each BO step."""
        inc = self.incumbents()
        return inc[self.n_init - 1:]

    def best(self):
        k = int(np.argmax([s.y for s in self.steps]))
        return self.steps[k]


def _record_inits(history, task, init_indices):
    for j, i in enumerate(init_indices):
        history.steps.append(BoStep(j, int(i), task.X[i], float(task.y[i]), float("nan")))


def _check_init(task, init_indices, iterations):
    init_indices = [int(i) for i in init_indices]
    if not init_indices:
        raise ValueError("need at least one initial observation")
    if len(set(init_indices)) != len(init_indices):
        raise ValueError("duplicate initial indices")
    if any(not 0 <= i < task.size for i in init_indices):
        raise ValueError("initial index out of pool range")
    if iterations < 0:
        raise ValueError("iteration count must be >= 0")
    return init_indices


def default_init_indices(task, n_init, seed):
    """Uniform initial observations drawn with the run seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 5])))
    return [int(i) for i in rng.choice(task.size, size=n_init, replace=False)]


def run_bo(model, task, init_indices, iterations, acq,
           fine_tune=True, ft_epochs=None, ft_lr=None,
           reset_each_step=False, seed=0, method="dre"):
    """BO loop: (optional fine-tune) -> predict -> argmin acquisition -> observe.

    The rank universe is the full candidate pool (pending plus observed), so
    the incumbent's mean rank lives on the same scale as the candidates.
    With reset_each_step the ensemble is re-initialized from a fresh
    deterministic seed before each fine-tuning round (the randomly
    initialized variant); otherwise weights carry over between steps.
    """
    init_indices = _check_init(task, init_indices, iterations)
    if task.size < len(init_indices) + iterations:
        raise ValueError("candidate pool too small for init + iterations")
    if task.dim != model.input_dim:
        raise ShapeError("task dim does not match model input dim")
    history = BoHistory(task.id, method, seed, len(init_indices))
    _record_inits(history, task, init_indices)
    observed = list(init_indices)
    pending = [i for i in range(task.size) if i not in set(observed)]
    cur = model
    for t in range(iterations):
        if not pending:
            history.status = "exhausted"
            break
        support = SupportSet(task.X[observed], task.y[observed])
        if reset_each_step:
            step_seed = int(np.random.SeedSequence([seed, 11, t]).generate_state(1)[0])
            cur = surrogate.init_model(model.config, model.input_dim, seed=step_seed)
        if fine_tune:
            cur = surrogate.fine_tune(cur, support, epochs=ft_epochs, lr=ft_lr).model
        mu, sigma, _ = surrogate.predict_universe(cur, support, task.X)
        best_obs = observed[int(np.argmax(task.y[observed]))]
        mu_best = mu[best_obs]
        alphas = acquisition.evaluate(acq, mu[pending], sigma[pending], mu_best)
        pick = acquisition.select_next(alphas)
        sel = pending.pop(pick)
        history.steps.append(BoStep(len(observed), sel, task.X[sel],
                                    float(task.y[sel]), float(alphas[pick])))
        observed.append(sel)
    return history


def run_random_search(task, init_indices, iterations, seed=0):
    """Uniform selection without replacement from the unevaluated pool."""
    init_indices = _check_init(task, init_indices, iterations)
    history = BoHistory(task.id, "random", seed, len(init_indices))
    _record_inits(history, task, init_indices)
    observed = list(init_indices)
    pending = [i for i in range(task.size) if i not in set(observed)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 7])))
    for t in range(iterations):
        if not pending:
            history.status = "exhausted"
            break
        sel = pending.pop(int(rng.integers(len(pending))))
        history.steps.append(BoStep(len(observed), sel, task.X[sel],
                                    float(task.y[sel]), float("nan")))
        observed.append(sel)
    return history


def history_to_csv(history, path):
    """Persist one run as step,candidate_index,y,incumbent,alpha rows."""
    inc = history.incumbents()
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "candidate_index", "y", "incumbent", "alpha"])
        for s, i in zip(history.steps, inc):
            w.writerow([s.index, s.candidate_index, repr(s.y), repr(float(i)),
                        repr(s.alpha)])
    os.replace(tmp, path)


def history_from_csv(path, task_id="", method="", seed=0, n_init=None):
    """Rebuild enough of a history (steps and incumbents) from its CSV."""
    steps = []
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    alphas = [float(r["alpha"]) for r in rows]
    if n_init is None:
        n_init = sum(1 for a in alphas if np.isnan(a)) or 1
    hist = BoHistory(task_id, method, seed, n_init)
    for r in rows:
        hist.steps.append(BoStep(int(r["step"]), int(r["candidate_index"]),
                                 np.empty(0), float(r["y"]), float(r["alpha"])))
    return hist
