"""Command-line front end: meta-training, BO campaigns, ablations, metrics.

Commands validate their whole configuration before writing anything; all
outputs are CSV (plus the binary model container) written atomically.
"""

import argparse
import concurrent.futures
import csv
import json
import logging
import os
import re
import sys

import numpy as np

from . import benchmarks, bo, surrogate
from .acquisition import AcqKind
from .ranking import LossKind, WeightScheme

log = logging.getLogger("rankbo")

ACQ_NAMES = {"avg": "average_rank", "lcb": "lcb", "ei": "expected_improvement"}
LOSS_NAMES = {
    "listwise-weighted": LossKind.LISTWISE_WEIGHTED,
    "listwise": LossKind.LISTWISE_UNWEIGHTED,
    "pairwise": LossKind.PAIRWISE,
    "pointwise": LossKind.POINTWISE,
    "mse": LossKind.REGRESSION_MSE,
}
WEIGHT_NAMES = {
    "inv-log": WeightScheme.INVERSE_LOG,
    "inv-linear": WeightScheme.INVERSE_LINEAR,
    "pda": WeightScheme.PDA,
    "uniform": WeightScheme.UNIFORM,
}


class CliError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("RANKBO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CliError("cannot read config %s: %s" % (path, e))
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    return cfg


def _dre_config(args, file_cfg):
    """DreConfig from config-file fields overridden by explicit flags."""
    fields = {k: v for k, v in file_cfg.items()
              if k in surrogate.DreConfig.__dataclass_fields__}
    if getattr(args, "ensemble_size", None) is not None:
        fields["ensemble_size"] = args.ensemble_size
    if getattr(args, "loss", None) is not None:
        fields["loss_kind"] = LOSS_NAMES[args.loss]
    if getattr(args, "weights", None) is not None:
        fields["weight_scheme"] = WEIGHT_NAMES[args.weights]
    if getattr(args, "no_meta_features", False):
        fields["use_meta_features"] = False
    if getattr(args, "epochs", None) is not None:
        fields["meta_epochs"] = args.epochs
    if getattr(args, "batch_lists", None) is not None:
        fields["meta_batch_lists"] = args.batch_lists
    if getattr(args, "list_size", None) is not None:
        fields["list_size"] = args.list_size
    if getattr(args, "lr", None) is not None:
        fields["meta_lr"] = args.lr
    if getattr(args, "seed", None) is not None:
        fields["seed"] = args.seed
    try:
        return surrogate.DreConfig.from_dict(fields)
    except (TypeError, ValueError) as e:
        raise CliError("bad surrogate configuration: %s" % e)


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise CliError("expected a comma-separated number list, got %r" % text)


def _meta_dataset(args):
    if args.meta_dataset is not None:
        try:
            return benchmarks.load_meta_dataset(args.meta_dataset, args.search_space)
        except (OSError, json.JSONDecodeError, benchmarks.SchemaError) as e:
            raise CliError("meta-dataset: %s" % e)
    if getattr(args, "sinusoid_betas", None):
        return benchmarks.sinusoid_meta_dataset(_parse_floats(args.sinusoid_betas))
    raise CliError("need --meta-dataset or --sinusoid-betas")


def _tasks(args):
    """Finite-pool tasks a BO campaign runs on."""
    if getattr(args, "sinusoid_beta", None) is not None:
        return [benchmarks.make_sinusoid_task(args.sinusoid_beta,
                                              amplitude=args.amplitude)]
    ds = _meta_dataset(args)
    ids = args.task_id if args.task_id else ds.task_ids()
    missing = [t for t in ids if t not in ds.tasks]
    if missing:
        raise CliError("unknown task ids: %s" % missing)
    return [ds.task(t) for t in ids]


def _seeds(args):
    if args.seed_list is not None:
        return [int(s) for s in args.seed_list.split(",")]
    n = args.num_seeds
    master = args.master_seed
    return [int(np.random.SeedSequence([master, i]).generate_state(1)[0])
            for i in range(n)]


def _safe_name(text):
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-")


def _write_rows(path, header, rows):
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def cmd_meta_train(args):
    file_cfg = _load_config_file(args.config)
    cfg = _dre_config(args, file_cfg)
    dataset = _meta_dataset(args)
    os.makedirs(args.output, exist_ok=True)
    result = surrogate.meta_train(cfg, dataset)
    model_path = os.path.join(args.output, args.model_name)
    surrogate.save_model(result.model, model_path)
    _write_rows(os.path.join(args.output, "meta_train_loss.csv"),
                ["epoch", "loss"],
                [[e, repr(float(v))] for e, v in enumerate(result.epoch_losses)])
    log.info("wrote %s", model_path)
    return 0


def _run_cell(spec):
    """One (task, seed) BO run; importable at top level for process pools."""
    (task, seed, method, model, acq, iterations, n_init,
     fine_tune, ft_epochs, ft_lr, reset) = spec
    init = bo.default_init_indices(task, n_init, seed)
    if method == "random":
        return bo.run_random_search(task, init, iterations, seed=seed)
    return bo.run_bo(model, task, init, iterations, acq,
                     fine_tune=fine_tune, ft_epochs=ft_epochs, ft_lr=ft_lr,
                     reset_each_step=reset, seed=seed, method=method)


def _run_cells(specs, jobs):
    if jobs <= 1:
        return [_run_cell(s) for s in specs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, specs))


def _campaign_model(args, file_cfg, tasks):
    """Model plus fine-tune settings for a BO campaign."""
    if args.model is not None:
        try:
            model = surrogate.load_model(args.model)
        except (OSError, ValueError) as e:
            raise CliError("cannot load model %s: %s" % (args.model, e))
        if model.input_dim != tasks[0].dim:
            raise CliError("model dim %d, task dim %d" % (model.input_dim, tasks[0].dim))
        cfg = model.config
        ft_epochs = args.ft_epochs if args.ft_epochs is not None else cfg.fine_tune_epochs
        ft_lr = args.ft_lr if args.ft_lr is not None else cfg.fine_tune_lr
        reset = args.reset_each_step
    elif args.random_init:
        cfg = _dre_config(args, file_cfg)
        model = surrogate.init_model(cfg, tasks[0].dim)
        ft_epochs = args.ft_epochs if args.ft_epochs is not None else cfg.random_init_epochs
        ft_lr = args.ft_lr if args.ft_lr is not None else cfg.random_init_lr
        # randomly initialized variant retrains from scratch each BO step
        reset = True if args.reset_each_step is None else args.reset_each_step
    else:
        raise CliError("need --model or --random-init")
    return model, ft_epochs, ft_lr, bool(reset)


def cmd_run_bo(args):
    file_cfg = _load_config_file(args.config)
    tasks = _tasks(args)
    seeds = _seeds(args)
    acq = AcqKind(ACQ_NAMES[args.acq], beta=args.beta)
    method = args.method
    model = ft_epochs = ft_lr = reset = None
    if method != "random":
        model, ft_epochs, ft_lr, reset = _campaign_model(args, file_cfg, tasks)
    for task in tasks:
        if task.size < args.inits + args.iterations:
            raise CliError("pool of task %s too small for %d inits + %d steps"
                           % (task.id, args.inits, args.iterations))
    os.makedirs(args.output, exist_ok=True)
    specs = [(task, seed, method, model, acq, args.iterations, args.inits,
              not args.no_fine_tune, ft_epochs, ft_lr, reset)
             for task in tasks for seed in seeds]
    failures = []
    summary = []
    for spec, hist in zip(specs, _run_cells(specs, args.jobs)):
        task, seed = spec[0], spec[1]
        name = "%s__%s__%d.csv" % (_safe_name(task.id), method, seed)
        bo.history_to_csv(hist, os.path.join(args.output, name))
        summary.append([task.id, method, seed, repr(float(hist.incumbents()[-1])),
                        hist.status])
        if hist.status != "ok":
            failures.append((task.id, seed, hist.status))
    _write_rows(os.path.join(args.output, "summary.csv"),
                ["task", "method", "seed", "final_incumbent", "status"], summary)
    for tid, seed, status in failures:
        print("FAILED cell task=%s seed=%d: %s" % (tid, seed, status), file=sys.stderr)
    return 1 if failures else 0


_ABLATE_AXES = {
    "acq": ["ei", "lcb", "avg", "random"],
    "loss": list(LOSS_NAMES),
    "features": ["with", "without"],
}


def cmd_ablate(args):
    file_cfg = _load_config_file(args.config)
    tasks = _tasks(args)
    seeds = _seeds(args)
    variants = [v.strip() for v in args.variants.split(",")]
    known = _ABLATE_AXES[args.axis]
    unknown = [v for v in variants if v not in known]
    if unknown:
        raise CliError("unknown %s variants: %s (choose from %s)"
                       % (args.axis, unknown, known))
    base_cfg = _dre_config(args, file_cfg)
    plans = {}
    for v in variants:
        cfg, acq, method = base_cfg, AcqKind(ACQ_NAMES["ei"], beta=args.beta), "dre-" + v
        if args.axis == "acq":
            if v == "random":
                method = "random"
            else:
                acq = AcqKind(ACQ_NAMES[v], beta=args.beta)
        elif args.axis == "loss":
            cfg = surrogate.DreConfig(**{**base_cfg.to_dict(), "loss_kind": LOSS_NAMES[v]})
        else:
            cfg = surrogate.DreConfig(**{**base_cfg.to_dict(),
                                         "use_meta_features": v == "with"})
        plans[v] = (cfg, acq, method)
    os.makedirs(args.output, exist_ok=True)
    ft_epochs = args.ft_epochs
    ft_lr = args.ft_lr
    histories = {}
    for v, (cfg, acq, method) in plans.items():
        if method == "random":
            model, ftf = None, False
        elif args.meta_train_variants:
            ds = benchmarks.MetaDataset("ablate", {t.id: (t.X, t.y) for t in tasks})
            model = surrogate.meta_train(cfg, ds).model
            ftf = not args.no_fine_tune
        else:
            model = surrogate.init_model(cfg, tasks[0].dim)
            ftf = not args.no_fine_tune
        specs = [(task, seed, method, model, acq, args.iterations, args.inits,
                  ftf, ft_epochs, ft_lr, bool(args.reset_each_step))
                 for task in tasks for seed in seeds]
        histories[v] = _run_cells(specs, args.jobs)
        hdir = os.path.join(args.output, "histories", _safe_name(v))
        os.makedirs(hdir, exist_ok=True)
        for spec, hist in zip(specs, histories[v]):
            name = "%s__%s__%d.csv" % (_safe_name(spec[0].id), method, spec[1])
            bo.history_to_csv(hist, os.path.join(hdir, name))
    curves = benchmarks.average_rank_metric(histories)
    for v, curve in curves.items():
        benchmarks.curve_to_csv(curve, os.path.join(args.output,
                                                    "avg_rank__%s.csv" % _safe_name(v)))
    benchmarks.curves_to_wide_csv(curves, os.path.join(args.output, "avg_rank_all.csv"))
    return 0


def cmd_metrics(args):
    pattern = re.compile(r"^(?P<task>.+)__(?P<method>.+)__(?P<seed>\d+)\.csv$")
    cells = {}
    for fname in sorted(os.listdir(args.runs)):
        m = pattern.match(fname)
        if not m:
            continue
        key = (m.group("task"), int(m.group("seed")))
        cells.setdefault(m.group("method"), {})[key] = os.path.join(args.runs, fname)
    if not cells:
        raise CliError("no history CSVs found in %s" % args.runs)
    methods = sorted(cells)
    keys = sorted(cells[methods[0]])
    for method in methods:
        if sorted(cells[method]) != keys:
            raise CliError("method %s is missing (task, seed) cells" % method)
    histories = {
        method: [bo.history_from_csv(cells[method][k], k[0], method, k[1],
                                     n_init=args.inits)
                 for k in keys]
        for method in methods
    }
    os.makedirs(args.output, exist_ok=True)
    curves = benchmarks.average_rank_metric(histories)
    for v, curve in curves.items():
        benchmarks.curve_to_csv(curve, os.path.join(args.output,
                                                    "avg_rank__%s.csv" % _safe_name(v)))
    benchmarks.curves_to_wide_csv(curves, os.path.join(args.output, "avg_rank_all.csv"))
    return 0


def _add_task_source(p, campaign=True):
    p.add_argument("--meta-dataset", help="meta-dataset JSON file")
    p.add_argument("--search-space", help="search-space id inside the file")
    if campaign:
        p.add_argument("--task-id", action="append", help="restrict to task id (repeatable)")
        p.add_argument("--sinusoid-beta", type=float, help="single sinusoid grid task")
        p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--sinusoid-betas", help="comma list of betas for a sinusoid family")


def _add_seeds(p):
    p.add_argument("--seed-list", help="explicit comma-separated run seeds")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--num-seeds", type=int, default=1)


def _add_dre_flags(p):
    p.add_argument("--ensemble-size", type=int)
    p.add_argument("--loss", choices=list(LOSS_NAMES))
    p.add_argument("--weights", choices=list(WEIGHT_NAMES))
    p.add_argument("--no-meta-features", action="store_true")
    p.add_argument("--seed", type=int)


def _add_campaign_flags(p):
    p.add_argument("--acq", choices=list(ACQ_NAMES), default="ei")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--iterations", "-K", type=int, default=100)
    p.add_argument("--inits", type=int, default=5)
    p.add_argument("--no-fine-tune", action="store_true")
    p.add_argument("--ft-epochs", type=int)
    p.add_argument("--ft-lr", type=float)
    p.add_argument("--jobs", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="rankbo",
                                     description="Ranking-ensemble Bayesian optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("meta-train", help="meta-train a surrogate over tasks")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", required=True)
    p.add_argument("--model-name", default="model.drem")
    _add_task_source(p, campaign=False)
    _add_dre_flags(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-lists", type=int)
    p.add_argument("--list-size", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_meta_train)

    p = sub.add_parser("run-bo", help="run BO campaigns and write history CSVs")
    p.add_argument("--config")
    p.add_argument("--output", required=True)
    p.add_argument("--model", help="model container file")
    p.add_argument("--random-init", action="store_true")
    p.add_argument("--method", default="dre")
    p.add_argument("--reset-each-step", action="store_true", default=None)
    _add_task_source(p)
    _add_seeds(p)
    _add_dre_flags(p)
    _add_campaign_flags(p)
    p.set_defaults(func=cmd_run_bo)

    p = sub.add_parser("ablate", help="run a variant cross-product and rank it")
    p.add_argument("--config")
    p.add_argument("--output", required=True)
    p.add_argument("--axis", "--ablate", dest="axis", required=True,
                   choices=list(_ABLATE_AXES))
    p.add_argument("--variants", required=True)
    p.add_argument("--meta-train-variants", action="store_true",
                   help="meta-train each variant on the task family first")
    p.add_argument("--reset-each-step", action="store_true")
    _add_task_source(p)
    _add_seeds(p)
    _add_dre_flags(p)
    _add_campaign_flags(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-lists", type=int)
    p.add_argument("--list-size", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("metrics", help="average-rank curves from history CSVs")
    p.add_argument("--runs", required=True, help="directory of history CSVs")
    p.add_argument("--output", required=True)
    p.add_argument("--inits", type=int, default=None,
                   help="number of initial observations per run")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
