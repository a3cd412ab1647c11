"""Replicated down-sampling protocol comparing the averaging variants.

For every training size and replicate one stratified train/test split is
drawn, the model ensemble is fitted once, and every requested method is
evaluated on the shared test set.  Credal methods are paired with the
point predictor whose prior lies inside their credal set when reporting
the safe / prior-dependent accuracy split:

    cma_ib  -> bma_ib      cma_nb -> bma_ib      cma_exp -> bma_nb

Replicate seeds are derived from (seed, size, replicate), so adding sizes
or methods never reshuffles existing replicates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from ._config import ConfigError, float_list, load_toml
from .bma import posterior_weights, predict_matrix, inclusion_prob
from .cma_ib import (
    DEFAULT_EPSILON,
    ProbabilityInterval,
    ScalarCredalSet,
    class_intervals,
    inclusion_intervals,
)
from .cma_nb import (
    BoxCredalSet,
    class_intervals_nb,
    experts_hull_box,
    ignorance_box,
    inclusion_intervals_nb,
)
from .dataset import DataError, Dataset, SplitSpec, stratified_split
from .decision import decide_interval, decide_point
from .metrics import split_report
from .model_space import Ensemble, fit_ensemble
from .priors import BBPrior, IBPrior, NBPrior, PriorSpec, experts_central_prior

METHODS = ("bma_ib", "bma_bb", "bma_nb", "cma_ib", "cma_nb", "cma_exp")
BMA_METHODS = ("bma_ib", "bma_bb", "bma_nb")
CMA_METHODS = ("cma_ib", "cma_nb", "cma_exp")
REFERENCE_BMA = {"cma_ib": "bma_ib", "cma_nb": "bma_ib", "cma_exp": "bma_nb"}

METRIC_COLUMNS = (
    "accuracy",
    "auc",
    "recall",
    "indeterminacy",
    "disc_acc",
    "u65",
    "u80",
    "acc_safe",
    "acc_prior_dep",
    "n_indet",
)
INCLUSION_COLUMNS = ("point", "lo", "hi")


@dataclass(frozen=True)
class ProtocolConfig:
    """Sizes, replication, seeds, and per-method configuration."""

    sizes: tuple[int, ...] = (30, 60, 100, 200, 400, 600, 1000, 1500)
    replicates: int = 30
    test_size: int = 1000
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    ib_theta: float = 0.5
    bb_alpha: float = 1.0
    bb_beta: float = 1.0
    nb_prior: NBPrior | None = None
    ib_credal: ScalarCredalSet | None = None
    nb_box: BoxCredalSet | None = None
    exp_box: BoxCredalSet | None = None
    epsilon: float = DEFAULT_EPSILON
    inclusion_sizes: tuple[int, ...] | None = None
    standardize: bool = False

    def __post_init__(self) -> None:
        if not self.sizes or list(self.sizes) != sorted(self.sizes):
            raise ConfigError("sizes must be a non-empty ascending list")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.test_size < 1:
            raise ConfigError("test_size must be at least 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise ConfigError("at least one method is required")


def _resolve_priors(cfg: ProtocolConfig, k: int) -> dict[str, PriorSpec]:
    priors: dict[str, PriorSpec] = {
        "bma_ib": IBPrior(cfg.ib_theta),
        "bma_bb": BBPrior(cfg.bb_alpha, cfg.bb_beta),
    }
    needs_nb = "bma_nb" in cfg.methods or "cma_exp" in cfg.methods
    if needs_nb:
        if cfg.nb_prior is not None:
            prior = cfg.nb_prior
        elif k == 6:
            prior = experts_central_prior()
        else:
            raise ConfigError(
                f"bma_nb/cma_exp need a theta_vec for k={k}; only k=6 has a canned default"
            )
        if len(prior.theta_vec) != k:
            raise ConfigError(f"nb prior has {len(prior.theta_vec)} entries for k={k}")
        priors["bma_nb"] = prior
    return priors


def _resolve_credal(cfg: ProtocolConfig, k: int) -> dict[str, object]:
    credal: dict[str, object] = {}
    if "cma_ib" in cfg.methods:
        credal["cma_ib"] = cfg.ib_credal or ScalarCredalSet(cfg.epsilon, 1.0 - cfg.epsilon)
    if "cma_nb" in cfg.methods:
        credal["cma_nb"] = cfg.nb_box or ignorance_box(k, cfg.epsilon)
    if "cma_exp" in cfg.methods:
        if cfg.exp_box is not None:
            box = cfg.exp_box
        elif k == 6:
            box = experts_hull_box()
        else:
            raise ConfigError(
                f"cma_exp needs explicit lo/hi bounds for k={k}; only k=6 has a canned default"
            )
        if box.k != k:
            raise ConfigError(f"expert box has {box.k} covariates for k={k}")
        credal["cma_exp"] = box
    for name, box in credal.items():
        if isinstance(box, BoxCredalSet) and box.k != k:
            raise ConfigError(f"{name} box has {box.k} covariates for k={k}")
    return credal


def _cell_seed(seed: int, size: int, replicate: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(size, replicate))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def standardize_pair(train: Dataset, test: Dataset | None = None):
    """Z-score covariates using the training statistics only."""
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    new_train = Dataset(train.covariate_names, (train.X - mean) / std, train.y)
    if test is None:
        return new_train
    new_test = Dataset(test.covariate_names, (test.X - mean) / std, test.y)
    return new_train, new_test


def _bma_method_probs(
    e: Ensemble, X: np.ndarray, priors: dict[str, PriorSpec], names: set[str]
) -> dict[str, np.ndarray]:
    out = {}
    for name in sorted(names):
        out[name] = predict_matrix(e, posterior_weights(e, priors[name]), X)
    return out


def _evaluate_cell(
    d: Dataset, cfg: ProtocolConfig, size: int, replicate: int
) -> list[dict]:
    priors = _resolve_priors(cfg, d.k)
    credal = _resolve_credal(cfg, d.k)
    seed = _cell_seed(cfg.seed, size, replicate)
    train, test = stratified_split(d, SplitSpec(size, cfg.test_size, seed))
    if cfg.standardize:
        train, test = standardize_pair(train, test)
    e = fit_ensemble(train)

    bma_needed = {m for m in cfg.methods if m in BMA_METHODS}
    bma_needed.update(REFERENCE_BMA[m] for m in cfg.methods if m in CMA_METHODS)
    probs = _bma_method_probs(e, test.X, priors, bma_needed)

    rows = []
    for method in cfg.methods:
        if method in BMA_METHODS:
            ref_probs = probs[method]
            preds = [decide_point(p) for p in ref_probs]
        else:
            if method == "cma_ib":
                lo, hi = class_intervals(e, credal[method], test.X)
            else:
                lo, hi = class_intervals_nb(e, credal[method], test.X)
            preds = [decide_interval(ProbabilityInterval(l, h)) for l, h in zip(lo, hi)]
            ref_probs = probs[REFERENCE_BMA[method]]
        report = split_report(ref_probs, preds, test.y)
        rows.append(
            {
                "size": size,
                "replicate": replicate,
                "method": method,
                "accuracy": report.accuracy,
                "auc": report.auc,
                "recall": report.recall,
                "indeterminacy": report.indeterminacy,
                "disc_acc": report.discounted_accuracy,
                "u65": report.u65,
                "u80": report.u80,
                "acc_safe": report.acc_safe,
                "acc_prior_dep": report.acc_prior_dependent,
                "n_indet": report.n_indeterminate,
            }
        )
    return rows


def _inclusion_cell(
    d: Dataset, cfg: ProtocolConfig, size: int, replicate: int
) -> list[dict]:
    priors = _resolve_priors(cfg, d.k)
    credal = _resolve_credal(cfg, d.k)
    seed = _cell_seed(cfg.seed, size, replicate)
    train, _ = stratified_split(d, SplitSpec(size, cfg.test_size, seed))
    if cfg.standardize:
        train = standardize_pair(train)
    e = fit_ensemble(train)

    rows = []
    for method in cfg.methods:
        if method in BMA_METHODS:
            w = posterior_weights(e, priors[method])
            points = [inclusion_prob(e, w, j) for j in range(1, d.k + 1)]
            los = his = [None] * d.k
        else:
            if method == "cma_ib":
                lo, hi = inclusion_intervals(e, credal[method])
            else:
                lo, hi = inclusion_intervals_nb(e, credal[method])
            points = [None] * d.k
            los, his = list(lo), list(hi)
        for j in range(d.k):
            rows.append(
                {
                    "size": size,
                    "replicate": replicate,
                    "covariate": d.covariate_names[j],
                    "method": method,
                    "point": points[j],
                    "lo": los[j],
                    "hi": his[j],
                }
            )
    return rows


def _run_cells(d, cfg, sizes, cell_fn, jobs):
    max_need = max(sizes) + cfg.test_size
    if max_need > d.n:
        raise DataError(
            f"largest size needs {max_need} rows but the dataset has {d.n}"
        )
    cells = [(size, rep) for size in sizes for rep in range(cfg.replicates)]
    if jobs == 1:
        results = [cell_fn(d, cfg, size, rep) for size, rep in cells]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=jobs)(
            delayed(cell_fn)(d, cfg, size, rep) for size, rep in cells
        )
    return [row for cell_rows in results for row in cell_rows]


def run_protocol(d: Dataset, cfg: ProtocolConfig, jobs: int = 1) -> list[dict]:
    """Per-(size, replicate, method) metric rows over the whole grid."""
    _resolve_priors(cfg, d.k)  # fail fast on missing method configs
    _resolve_credal(cfg, d.k)
    return _run_cells(d, cfg, cfg.sizes, _evaluate_cell, jobs)


def inclusion_curves(d: Dataset, cfg: ProtocolConfig, jobs: int = 1) -> list[dict]:
    """Per-(size, replicate, covariate, method) inclusion probability rows."""
    _resolve_priors(cfg, d.k)
    _resolve_credal(cfg, d.k)
    sizes = cfg.inclusion_sizes or cfg.sizes
    if list(sizes) != sorted(sizes):
        raise ConfigError("inclusion_sizes must be ascending")
    return _run_cells(d, cfg, sizes, _inclusion_cell, jobs)


def aggregate(rows: list[dict], keys: tuple[str, ...], columns: tuple[str, ...]) -> list[dict]:
    """Mean/median/quartile summaries over replicates, grouped by ``keys``.

    None entries (empty partitions, inapplicable columns) are skipped; a
    group whose column is all-None aggregates to None.
    """
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for group_key in groups:
        agg = dict(zip(keys, group_key))
        for col in columns:
            vals = [r[col] for r in groups[group_key] if r[col] is not None]
            if vals:
                arr = np.asarray(vals, dtype=np.float64)
                agg[f"{col}_mean"] = float(arr.mean())
                agg[f"{col}_median"] = float(np.median(arr))
                agg[f"{col}_q1"] = float(np.percentile(arr, 25))
                agg[f"{col}_q3"] = float(np.percentile(arr, 75))
            else:
                for stat in ("mean", "median", "q1", "q3"):
                    agg[f"{col}_{stat}"] = None
        out.append(agg)
    return out


def aggregate_metrics(rows: list[dict]) -> list[dict]:
    return aggregate(rows, keys=("size", "method"), columns=METRIC_COLUMNS)


def aggregate_inclusion(rows: list[dict]) -> list[dict]:
    return aggregate(rows, keys=("size", "covariate", "method"), columns=INCLUSION_COLUMNS)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: list[dict], columns: tuple[str, ...], path: str) -> None:
    """Write result rows with a fixed column order; deterministic output."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def metrics_columns() -> tuple[str, ...]:
    return ("size", "replicate", "method") + METRIC_COLUMNS


def inclusion_columns() -> tuple[str, ...]:
    return ("size", "replicate", "covariate", "method") + INCLUSION_COLUMNS


def _agg_columns(keys: tuple[str, ...], columns: tuple[str, ...]) -> tuple[str, ...]:
    stats = ("mean", "median", "q1", "q3")
    return keys + tuple(f"{c}_{s}" for c in columns for s in stats)


def load_protocol_config(path: str) -> ProtocolConfig:
    """Read a protocol configuration from a key-value config file.

    Recognized keys: sizes, replicates, test_size, seed, methods, theta,
    alpha, beta, theta_vec, theta_lo, theta_hi, epsilon, exp_lo, exp_hi,
    inclusion_sizes.  Unset keys take the protocol defaults.
    """
    data = load_toml(path)
    kwargs: dict = {}
    try:
        if "sizes" in data:
            kwargs["sizes"] = tuple(int(s) for s in data["sizes"])
        if "inclusion_sizes" in data:
            kwargs["inclusion_sizes"] = tuple(int(s) for s in data["inclusion_sizes"])
        for key, target in (("replicates", "replicates"), ("test_size", "test_size"), ("seed", "seed")):
            if key in data:
                kwargs[target] = int(data[key])
        if "methods" in data:
            kwargs["methods"] = tuple(str(m) for m in data["methods"])
        if "theta" in data:
            kwargs["ib_theta"] = float(data["theta"])
        if "alpha" in data:
            kwargs["bb_alpha"] = float(data["alpha"])
        if "beta" in data:
            kwargs["bb_beta"] = float(data["beta"])
        if "theta_vec" in data:
            vec = float_list(data["theta_vec"], "theta_vec", path)
            kwargs["nb_prior"] = NBPrior(tuple(vec))
        if "epsilon" in data:
            kwargs["epsilon"] = float(data["epsilon"])
        if "theta_lo" in data or "theta_hi" in data:
            eps = kwargs.get("epsilon", DEFAULT_EPSILON)
            kwargs["ib_credal"] = ScalarCredalSet(
                float(data.get("theta_lo", eps)), float(data.get("theta_hi", 1.0 - eps))
            )
        if "exp_lo" in data or "exp_hi" in data:
            lo = float_list(data["exp_lo"], "exp_lo", path)
            hi = float_list(data["exp_hi"], "exp_hi", path)
            kwargs["exp_box"] = BoxCredalSet(np.array(lo), np.array(hi))
        if "standardize" in data:
            kwargs["standardize"] = bool(data["standardize"])
    except (ValueError, KeyError) as err:
        raise ConfigError(f"{path}: {err}") from None
    return ProtocolConfig(**kwargs)


def with_defaults(cfg: ProtocolConfig, **overrides) -> ProtocolConfig:
    """Convenience wrapper around dataclasses.replace for CLI flag overrides."""
    return replace(cfg, **overrides)
