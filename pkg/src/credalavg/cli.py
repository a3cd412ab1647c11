"""Command-line interface.

Subcommands: synth (generate data), fit (ensemble summary), predict
(per-row point or interval predictions), inclusion (per-covariate report),
experiment (replicated protocol).  Exit codes: 0 success, 1 usage error,
2 data/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from ._config import ConfigError, load_toml
from . import experiment as exp
from .bma import inclusion_prob, posterior_weights, predict_matrix
from .cma_ib import (
    DEFAULT_EPSILON,
    ProbabilityInterval,
    ScalarCredalSet,
    class_intervals,
    inclusion_intervals,
)
from .cma_nb import (
    BoxCredalSet,
    box_from_mapping,
    class_intervals_nb,
    experts_hull_box,
    ignorance_box,
    inclusion_intervals_nb,
)
from .dataset import DataError, generate_synthetic, load_csv, save_csv
from .decision import decide_interval, decide_point
from .logit import FitConvergenceError
from .model_space import fit_ensemble
from .priors import (
    BBPrior,
    IBPrior,
    PriorSpec,
    experts_central_prior,
    load_prior_config,
    prior_from_mapping,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

BMA_METHODS = ("bma_ib", "bma_bb", "bma_nb")
CMA_METHODS = ("cma_ib", "cma_nb", "cma_exp")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors to exit code 1
        raise _UsageError(message)


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} must be a comma-separated list of numbers") from None


def _parse_ints(text: str, flag: str) -> list[int]:
    if text.strip().lower() in ("", "none"):
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise _UsageError(f"{flag} must be a comma-separated list of integers") from None


def _default_jobs() -> int:
    return os.cpu_count() or 1


def _resolve_prior(method: str, config_path: str | None, k: int) -> PriorSpec:
    if config_path is not None:
        return load_prior_config(config_path)
    if method == "bma_ib":
        return IBPrior(0.5)
    if method == "bma_bb":
        return BBPrior(1.0, 1.0)
    if k == 6:
        return experts_central_prior()
    raise ConfigError(f"bma_nb needs --config with a theta_vec for k={k}")


def _resolve_scalar_set(config_path: str | None) -> ScalarCredalSet:
    if config_path is None:
        return ScalarCredalSet(DEFAULT_EPSILON, 1.0 - DEFAULT_EPSILON)
    data = load_toml(config_path)
    try:
        lo = float(data.get("theta_lo", DEFAULT_EPSILON))
        hi = float(data.get("theta_hi", 1.0 - DEFAULT_EPSILON))
        return ScalarCredalSet(lo, hi)
    except ValueError as err:
        raise ConfigError(f"{config_path}: {err}") from None


def _resolve_box(method: str, config_path: str | None, k: int) -> BoxCredalSet:
    if config_path is not None:
        return box_from_mapping(load_toml(config_path), where=config_path, k=k)
    if method == "cma_nb":
        return ignorance_box(k)
    if k == 6:
        return experts_hull_box()
    raise ConfigError(f"cma_exp needs --config with lo/hi bounds for k={k}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cmd_synth(args) -> int:
    coeffs = _parse_floats(args.coeffs, "--coeffs")
    if len(coeffs) != args.k + 1:
        raise _UsageError(f"--coeffs must list k + 1 = {args.k + 1} values")
    active = set(_parse_ints(args.active, "--active"))
    d = generate_synthetic(args.k, args.n, np.array(coeffs), active, args.seed)
    save_csv(d, args.out)
    return EXIT_OK


def _cmd_fit(args) -> int:
    d = load_csv(args.data)
    if args.standardize:
        d = exp.standardize_pair(d)
    prior = load_prior_config(args.prior_config) if args.prior_config else IBPrior(0.5)
    e = fit_ensemble(d, jobs=args.jobs)
    w = posterior_weights(e, prior)
    weights = w.weights
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mask", "covariates", "size", "log_lik", "bic", "log_marginal", "posterior_weight"])
        for i, m in enumerate(e.models):
            names = "+".join(e.covariate_names[j - 1] for j in m.structure.covariates)
            writer.writerow(
                [m.structure.mask, names, m.structure.size]
                + [_fmt(v) for v in (m.log_lik, m.bic, m.log_marginal, float(weights[i]))]
            )
    return EXIT_OK


def _cmd_predict(args) -> int:
    train = load_csv(args.data)
    test = load_csv(args.test)
    if train.covariate_names != test.covariate_names:
        raise DataError("train and test files have different covariate columns")
    if args.standardize:
        train, test = exp.standardize_pair(train, test)
    e = fit_ensemble(train, jobs=args.jobs)

    if args.method in BMA_METHODS:
        prior = _resolve_prior(args.method, args.config, train.k)
        probs = predict_matrix(e, posterior_weights(e, prior), test.X)
        rows = []
        for i, p in enumerate(probs):
            label = "c1" if decide_point(float(p)).predicted == 1 else "c0"
            rows.append((i, _fmt(float(p)), "", "", label))
    else:
        if args.method == "cma_ib":
            cs = _resolve_scalar_set(args.config)
            lo, hi = class_intervals(e, cs, test.X)
        else:
            box = _resolve_box(args.method, args.config, train.k)
            lo, hi = class_intervals_nb(e, box, test.X)
        rows = []
        for i, (l, h) in enumerate(zip(lo, hi)):
            pred = decide_interval(ProbabilityInterval(float(l), float(h)))
            label = "both" if not pred.determinate else ("c1" if pred.predicted == 1 else "c0")
            rows.append((i, "", _fmt(float(l)), _fmt(float(h)), label))

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "p_point", "p_lo", "p_hi", "decision"])
        writer.writerows(rows)
    return EXIT_OK


def _cmd_inclusion(args) -> int:
    d = load_csv(args.data)
    if args.standardize:
        d = exp.standardize_pair(d)
    e = fit_ensemble(d, jobs=args.jobs)

    if args.method in BMA_METHODS:
        prior = _resolve_prior(args.method, args.config, d.k)
        w = posterior_weights(e, prior)
        points = [inclusion_prob(e, w, j) for j in range(1, d.k + 1)]
        los = his = [None] * d.k
    else:
        if args.method == "cma_ib":
            cs = _resolve_scalar_set(args.config)
            lo, hi = inclusion_intervals(e, cs)
        else:
            box = _resolve_box(args.method, args.config, d.k)
            lo, hi = inclusion_intervals_nb(e, box)
        points = [None] * d.k
        los, his = [float(v) for v in lo], [float(v) for v in hi]

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["covariate", "point", "lo", "hi"])
        for j in range(d.k):
            writer.writerow([d.covariate_names[j], _fmt(points[j]), _fmt(los[j]), _fmt(his[j])])
    return EXIT_OK


def _cmd_experiment(args) -> int:
    d = load_csv(args.data)
    cfg = exp.load_protocol_config(args.protocol_config)
    if args.standardize:
        cfg = exp.with_defaults(cfg, standardize=True)
    os.makedirs(args.out_dir, exist_ok=True)

    metric_rows = exp.run_protocol(d, cfg, jobs=args.jobs)
    exp.write_csv(metric_rows, exp.metrics_columns(), os.path.join(args.out_dir, "metrics.csv"))
    exp.write_csv(
        exp.aggregate_metrics(metric_rows),
        exp._agg_columns(("size", "method"), exp.METRIC_COLUMNS),
        os.path.join(args.out_dir, "metrics_agg.csv"),
    )

    incl_rows = exp.inclusion_curves(d, cfg, jobs=args.jobs)
    exp.write_csv(incl_rows, exp.inclusion_columns(), os.path.join(args.out_dir, "inclusion.csv"))
    exp.write_csv(
        exp.aggregate_inclusion(incl_rows),
        exp._agg_columns(("size", "covariate", "method"), exp.INCLUSION_COLUMNS),
        os.path.join(args.out_dir, "inclusion_agg.csv"),
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="credalavg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic presence/absence data")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--coeffs", required=True, help="k+1 comma-separated values, intercept first")
    p.add_argument("--active", default="", help="comma-separated 1-based covariate indices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit the ensemble and write a per-model summary")
    p.add_argument("--data", required=True)
    p.add_argument("--prior-config")
    p.add_argument("--out", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict test rows with one method")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--method", required=True, choices=BMA_METHODS + CMA_METHODS)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("inclusion", help="per-covariate inclusion probabilities")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=BMA_METHODS + CMA_METHODS)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=_cmd_inclusion)

    p = sub.add_parser("experiment", help="run the replicated evaluation protocol")
    p.add_argument("--data", required=True)
    p.add_argument("--protocol-config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except FitConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
