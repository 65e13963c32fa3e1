"""Task sources (sinusoid families, tabular meta-dataset JSON) and
method-comparison metrics (average rank, normalized regret)."""

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .bo import Task


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class MetaDataset:
    search_space_id: str
    tasks: dict  # task_id -> (X, y)

    def items(self):
        return [(tid, X, y) for tid, (X, y) in self.tasks.items()]

    def task(self, task_id):
        X, y = self.tasks[task_id]
        return Task(task_id, X, y)

    def task_ids(self):
        return sorted(self.tasks)

    @property
    def dim(self):
        first = next(iter(self.tasks.values()))
        return first[0].shape[1]


@dataclass(frozen=True)
class MetricCurve:
    method: str
    values: np.ndarray  # length K+1, step 0 = after initialization
    n_cells: int = 1


def _normalize_y(y, task_label):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise SchemaError("task %s: y must be flat or single-column" % task_label)
    return y


def _validate_task(tid, X, y):
    try:
        X = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError):
        raise SchemaError("task %s: ragged or non-numeric X" % tid)
    if X.ndim != 2:
        raise SchemaError("task %s: X must be a matrix" % tid)
    y = _normalize_y(y, tid)
    if y.shape[0] != X.shape[0]:
        raise SchemaError("task %s: %d rows of X but %d targets" % (tid, X.shape[0], y.shape[0]))
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise SchemaError("task %s: non-finite values" % tid)
    return X, y


def load_meta_dataset(path, search_space_id=None):
    """Load the nested space -> task -> {X, y} JSON layout."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or not raw:
        raise SchemaError("expected a non-empty top-level object of search spaces")
    if search_space_id is None:
        if len(raw) != 1:
            raise SchemaError("file holds %d search spaces; pass search_space_id" % len(raw))
        search_space_id = next(iter(raw))
    if search_space_id not in raw:
        raise SchemaError("search space %r not in file" % search_space_id)
    space = raw[search_space_id]
    tasks = {}
    dim = None
    for tid, entry in space.items():
        if not isinstance(entry, dict) or "X" not in entry or "y" not in entry:
            raise SchemaError("task %s: needs X and y fields" % tid)
        X, y = _validate_task(tid, entry["X"], entry["y"])
        if dim is None:
            dim = X.shape[1]
        elif X.shape[1] != dim:
            raise SchemaError("task %s: dim %d differs from %d" % (tid, X.shape[1], dim))
        tasks[tid] = (X, y)
    if not tasks:
        raise SchemaError("search space %r has no tasks" % search_space_id)
    return MetaDataset(search_space_id, tasks)


def save_meta_dataset(dataset, path):
    raw = {dataset.search_space_id: {
        tid: {"X": X.tolist(), "y": y.tolist()} for tid, (X, y) in dataset.tasks.items()
    }}
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(raw, fh)
    os.replace(tmp, path)


def make_sinusoid_task(beta, lo=-10.0, hi=10.0, step=0.1, amplitude=1.0):
    """Grid task y = amplitude * sin((x + pi)/2 + beta) on [lo, hi]."""
    if not (lo < hi and step > 0):
        raise ValueError("need lo < hi and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if n < 2:
        raise ValueError("degenerate grid")
    xs = lo + step * np.arange(n)
    y = amplitude * np.sin((xs + np.pi) / 2.0 + beta)
    return Task("sinusoid[beta=%g,amp=%g]" % (beta, amplitude), xs[:, None], y)


def sinusoid_meta_dataset(betas, amplitudes=None, lo=-10.0, hi=10.0, step=0.1):
    """Family of sinusoid grid tasks as a MetaDataset."""
    if amplitudes is None:
        amplitudes = [1.0] * len(betas)
    tasks = {}
    for beta, amp in zip(betas, amplitudes):
        t = make_sinusoid_task(beta, lo, hi, step, amp)
        tasks[t.id] = (t.X, t.y)
    return MetaDataset("sinusoid", tasks)


def average_rank_metric(histories):
    """Per-step competition rank of each method, averaged over aligned cells.

    histories maps method -> list of BoHistory; list index i is the same
    (task, seed) cell for every method.  Higher incumbent y gets rank 1;
    ties share the average rank.
    """
    methods = sorted(histories)
    if not methods:
        raise ValueError("no methods given")
    n_cells = len(histories[methods[0]])
    if any(len(histories[m]) != n_cells for m in methods):
        raise ValueError("methods have different numbers of (task, seed) cells")
    curves = {m: [h.incumbent_curve() for h in histories[m]] for m in methods}
    n_steps = len(curves[methods[0]][0])
    for m in methods:
        if any(len(c) != n_steps for c in curves[m]):
            raise ValueError("histories have unequal lengths")
    acc = np.zeros((len(methods), n_steps))
    for cell in range(n_cells):
        inc = np.array([curves[m][cell] for m in methods])  # (methods, steps)
        for t in range(n_steps):
            acc[:, t] += rankdata(-inc[:, t], method="average")
    acc /= n_cells
    return {m: MetricCurve(m, acc[k], n_cells) for k, m in enumerate(methods)}


def normalized_regret(history, y_min, y_max):
    """(y_max - incumbent) / (y_max - y_min) per step; non-increasing in [0, 1]."""
    if not y_max > y_min:
        raise ValueError("degenerate range: y_max must exceed y_min")
    inc = history.incumbent_curve()
    values = (y_max - inc) / (y_max - y_min)
    return MetricCurve(history.method, values, 1)


def curve_to_csv(curve, path):
    import csv
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "value"])
        for t, v in enumerate(curve.values):
            w.writerow([t, repr(float(v))])
    os.replace(tmp, path)


def curves_to_wide_csv(curves, path):
    import csv
    methods = sorted(curves)
    n = len(curves[methods[0]].values)
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + methods)
        for t in range(n):
            w.writerow([t] + [repr(float(curves[m].values[t])) for m in methods])
    os.replace(tmp, path)
