"""Command-line entry point: ``listrank <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure,
4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .dataset import SplitSpec, split_train_test, write_movielens
from .errors import PARTIAL_FAILURE_EXIT, ListrankError, UsageError
from .factors import load_model, save_model
from .harness import (
    ALGORITHMS,
    CSV_HEADER,
    DEFAULT_GRID,
    ExperimentConfig,
    csv_row,
    fit,
    load_dataset,
    run_experiment,
    sweep,
)
from .metrics import topk_recommend
from .orderstat import DensitySpec, normalization_check
from .synth import movielens_like


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _lr_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid learning rate list {text!r}") from None


def _pair(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return tuple(p.strip() for p in parts)


def _experiment_flags(p):
    p.add_argument("--config", help="JSON file with flat ExperimentConfig keys")
    p.add_argument("--dataset")
    p.add_argument("--format", choices=("movielens_dat", "csv"))
    p.add_argument("--columns", type=lambda s: tuple(s.split(",")), help="user,item,rating CSV column names")
    p.add_argument("--scale", type=_pair, help="rating scale override 'min,max'")
    p.add_argument("--algo", dest="algorithm", help=f"one of {', '.join(ALGORITHMS)} (comma list for sweep)")
    p.add_argument("--lr", type=_lr_list, help="learning rate, or comma list for sweep")
    p.add_argument("--dim", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--split", type=float)
    p.add_argument("--out")
    p.add_argument("--report", choices=("csv", "svg", "both"))
    p.add_argument("--jobs", type=int, help="concurrent sweep points")


_CONFIG_KEYS = ("dataset", "format", "columns", "algorithm", "dim", "lr", "steps",
                "seed", "split", "k", "scale", "out", "report", "jobs")


def _config(args, default_grid=False) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if data.get("scale") is not None:
        try:
            data["scale"] = tuple(float(x) for x in data["scale"])
        except (TypeError, ValueError):
            raise UsageError(f"invalid scale {data['scale']!r}") from None
    if default_grid and "lr" not in data:
        data["lr"] = DEFAULT_GRID
    return ExperimentConfig.from_dict(data)


def _print_rows(reports):
    print(",".join(CSV_HEADER))
    for r in reports:
        print(",".join(csv_row(r)))


def cmd_train(args):
    cfg = _config(args)
    algo = cfg.algorithms[0]
    if algo not in ("zeroshot_listwise", "mf", "bpr"):
        raise UsageError(f"{algo} has no factor model to train")
    ds = load_dataset(cfg)
    train, _ = split_train_test(ds, SplitSpec(cfg.split, cfg.seed))
    model = fit(algo, train, cfg.grid[0], cfg)
    out = cfg.out or "model.npz"
    save_model(model, out)
    print(f"saved {algo} model ({model.n_users}x{model.n_items}, d={model.d}) to {out}")
    return 0


def cmd_eval(args):
    report = run_experiment(_config(args))
    _print_rows([report])
    return 0


def cmd_sweep(args):
    reports = sweep(_config(args, default_grid=True))
    _print_rows(reports)
    return PARTIAL_FAILURE_EXIT if any(r.failed for r in reports) else 0


def cmd_recommend(args):
    cfg = _config(args)
    ds = load_dataset(cfg)
    train, _ = split_train_test(ds, SplitSpec(cfg.split, cfg.seed))
    if args.model:
        predictor = load_model(args.model)
        if (predictor.n_users, predictor.n_items) != (ds.n_users, ds.n_items):
            raise UsageError("model shape does not match the dataset")
    else:
        predictor = fit(cfg.algorithms[0], train, cfg.grid[0], cfg)
    try:
        user = ds.user_index(args.user)
    except KeyError:
        raise UsageError(f"unknown user id {args.user!r}") from None
    seen = train.items[train.users == user]
    items = topk_recommend(predictor, user, cfg.k, exclude=seen)
    scores = predictor.predict([user] * len(items), items)
    for rank, (i, s) in enumerate(zip(items, scores), 1):
        print(f"{rank}\t{ds.item_ids[i]}\t{s:.4f}")
    return 0


def cmd_orderstat(args):
    if args.family == "power":
        f = DensitySpec.power(args.alpha, args.a, args.b)
    else:
        f = DensitySpec.uniform(args.a, args.b)
    worst = 0.0
    print("n,estimate,stderr")
    for n in args.n:
        est = normalization_check(f, n, args.samples, args.seed)
        worst = max(worst, abs(est.estimate - 1.0))
        print(f"{n},{est.estimate:.6f},{est.stderr:.6f}")
    if worst > args.tol:
        print(f"normalisation off by {worst:.4f} > {args.tol}", file=sys.stderr)
        return 3
    return 0


def cmd_synth(args):
    ds, ts = movielens_like(args.users, args.items, args.ratings, args.seed)
    write_movielens(ds, args.out, ts)
    print(f"wrote {len(ds)} ratings to {args.out}")
    return 0


def build_parser():
    parser = _Parser(prog="listrank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a factor model and dump it")
    _experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="train and evaluate one configuration")
    _experiment_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="evaluate over a learning-rate grid")
    _experiment_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recommend", help="top-K items for one user")
    _experiment_flags(p)
    p.add_argument("--user", required=True, help="original user id")
    p.add_argument("--model", help="model dump from 'train'; trains afresh when omitted")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("orderstat-check", help="Monte Carlo normalisation of the order-statistic density")
    p.add_argument("--n", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2, 3])
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", choices=("uniform", "power"), default="uniform")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=0.02)
    p.set_defaults(func=cmd_orderstat)

    p = sub.add_parser("synth", help="write a synthetic MovieLens-format rating file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=943)
    p.add_argument("--items", type=int, default=1682)
    p.add_argument("--ratings", type=int, default=100_000)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("kernel backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except ListrankError as exc:
        print(f"listrank: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
