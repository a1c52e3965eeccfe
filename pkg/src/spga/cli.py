"""Command line entry point: ``spga <subcommand> ...``.

Relative output paths are resolved against ``--out-dir`` when it is given.
Tabular output is CSV with a header row (matrix files excepted, which are
headerless); structured dumps are JSON lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import gsl, simworld
from .classifier import TrainMetrics, init_params, train
from .config import ConfigError, parse_config, parse_train_config
from .harness import csv_text, run_plan, run_seed, world_seed, write_atomic
from .spsg import augment, confidence_intervals, make_rng
from .tdist import TQuery, t_two_sided_critical

DEFAULT_PLAN_DIR = "spga-runs"


def read_matrix(path) -> np.ndarray:
    """Headerless numeric CSV, one row per feature vector."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)


def matrix_text(data) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    for row in np.atleast_2d(data):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def read_batch(path) -> gsl.LabeledBatch:
    """CSV with a header naming ``label`` and either ``logit`` or ``probability``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        rows = list(reader)
    if "label" not in cols or not cols & {"logit", "probability"}:
        raise ValueError(f"{path}: need columns 'label' and 'logit' or 'probability'")
    labels = [int(r["label"]) for r in rows]
    if "logit" in cols:
        return gsl.LabeledBatch([float(r["logit"]) for r in rows], labels)
    return gsl.LabeledBatch.from_probabilities([float(r["probability"]) for r in rows], labels)


def _out_path(args, path):
    p = Path(path)
    if args.out_dir is not None and not p.is_absolute():
        p = Path(args.out_dir) / p
    return p


def _emit(args, path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_atomic(_out_path(args, path), text)


def cmd_quantile(args):
    t = t_two_sided_critical(TQuery(args.alpha, args.df))
    print(f"{t:.9g}")
    return 0


def cmd_spsg(args):
    f = read_matrix(args.input)
    iv = confidence_intervals(f, args.alpha)
    out = augment(f, args.alpha, args.m, rng=make_rng(args.seed))
    _emit(args, args.out, matrix_text(out))
    if args.intervals is not None:
        _emit(args, args.intervals, "".join(json.dumps(r) + "\n" for r in iv.records()))
    return 0


def cmd_loss_demo(args):
    batch = read_batch(args.batch)
    w = gsl.loss_weights(batch, args.mode, args.epsilon, args.weight_mode)
    _, per = gsl.gsl_loss(batch, w)
    grad = batch.gradients
    dens = w.density.densities if w.density is not None else [None] * len(batch)
    rows = [
        [i, int(batch.labels[i]), float(grad[i]), None if dens[i] is None else float(dens[i]),
         float(w.weights[i]), float(per[i])]
        for i in range(len(batch))
    ]
    _emit(args, args.out, csv_text(["index", "label", "gradient", "density", "weight", "loss"], rows))
    return 0


def cmd_train(args):
    text = Path(args.config).read_text() if args.config else ""
    run = parse_train_config(text, seed=args.seed)
    pos, neg = read_matrix(args.pos), read_matrix(args.neg)
    if pos.shape[1] != neg.shape[1]:
        raise ValueError("positive and negative matrices differ in width")
    params = init_params(run.architecture, pos.shape[1], run.hidden, seed=run.train.seed, scale=run.init_scale)
    metrics = TrainMetrics()
    model = train(params, pos, neg, run.train, run.spsg, metrics)
    _emit(args, args.out, model.to_json() + "\n")
    if args.metrics is not None:
        cols = ["iteration", "loss", "pos_weight_mean", "neg_weight_mean"]
        _emit(args, args.metrics, csv_text(cols, ([r[c] for c in cols] for r in metrics.rows)))
    return 0


def cmd_track(args):
    plan = parse_config(Path(args.config).read_text())
    variant = plan.variant(args.variant) if args.variant else plan.baseline
    seq = simworld.make_sequence(plan.world, world_seed(args.seed))
    record = simworld.run(seq, variant.tracker, run_seed(args.seed))
    _emit(args, args.out, record.to_csv())
    print(f"success_rate={record.success_rate!r} updates={record.n_updates}", file=sys.stderr)
    return 0


def cmd_plan(args):
    plan = parse_config(Path(args.config).read_text())
    out_dir = args.out_dir or plan.output_dir or DEFAULT_PLAN_DIR
    result = run_plan(plan, out_dir=out_dir, jobs=args.jobs)
    sys.stdout.write(result.summary_csv())
    for r in result.runs:
        if not r.ok:
            print(f"run {r.variant} seed {r.seed} failed: {r.error}", file=sys.stderr)
    return 1 if result.n_errors else 0


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="parallel runs (default 1)")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="base directory for outputs")

    parser = argparse.ArgumentParser(
        prog="spga", description="Positive sample generation and gradient-aware loss toolkit.", parents=[common]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantile", parents=[common], help="two-sided Student t critical value")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--df", type=int, required=True)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("spsg", parents=[common], help="augment a positive feature matrix")
    p.add_argument("--input", required=True, help="headerless CSV, one vector per row")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--out", default=None, help="augmented matrix (default stdout)")
    p.add_argument("--intervals", default=None, help="JSON-lines interval dump")
    p.set_defaults(func=cmd_spsg)

    p = sub.add_parser("loss-demo", parents=[common], help="per-sample weights and losses for a batch")
    p.add_argument("--batch", required=True, help="CSV with label and logit (or probability)")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--mode", choices=[m.value for m in gsl.LossMode], default="gsl")
    p.add_argument("--weight-mode", choices=[m.value for m in gsl.WeightMode], default="raw")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_loss_demo)

    p = sub.add_parser("train", parents=[common], help="train a classifier head")
    p.add_argument("--pos", required=True)
    p.add_argument("--neg", required=True)
    p.add_argument("--config", default=None, help="flat key=value training settings")
    p.add_argument("--out", required=True, help="model checkpoint (JSON)")
    p.add_argument("--metrics", default=None, help="per-iteration metrics CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("track", parents=[common], help="one tracking run from a plan")
    p.add_argument("--config", required=True, help="experiment plan")
    p.add_argument("--variant", default=None, help="variant name (default: the first)")
    p.add_argument("--out", default=None, help="track record CSV (default stdout)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("plan", parents=[common], help="run every variant and seed of a plan")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("seed", 0), ("jobs", 1), ("out_dir", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"spga {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
