"""Bayesian and credal model averaging over ensembles of logistic regressors.

Point inference averages all 2^k covariate-subset models with
BIC-approximated evidence under one prior over structures; credal
inference replaces that prior by a set of priors and returns probability
intervals, suspending judgment on instances whose most probable class
depends on the prior.
"""

from .bma import PosteriorWeights, inclusion_prob, posterior_weights, predict
from .cma_ib import (
    ClassProbability,
    GroupedSums,
    Inclusion,
    ProbabilityInterval,
    ScalarCredalSet,
    build_grouped_sums,
    class_interval,
    inclusion_interval,
    optimize_scalar,
)
from .cma_nb import (
    BoxCredalSet,
    class_interval_nb,
    experts_hull_box,
    ignorance_box,
    inclusion_interval_nb,
    objective,
    optimize_box,
)
from .dataset import Dataset, SplitSpec, generate_synthetic, load_csv, stratified_split
from .decision import Prediction, decide_interval, decide_point
from .experiment import ProtocolConfig, inclusion_curves, run_protocol
from .logit import FitConvergenceError, FittedModel, fit, predict_prob
from .metrics import (
    EvaluationReport,
    accuracy,
    auc,
    discounted_accuracy,
    recall,
    split_report,
    utility,
)
from .model_space import Ensemble, ModelStructure, enumerate_structures, fit_ensemble
from .priors import BBPrior, IBPrior, NBPrior, experts_central_prior, log_prior_mass, model_size_pmf

__version__ = "0.1.0"

__all__ = [
    "BBPrior",
    "BoxCredalSet",
    "ClassProbability",
    "Dataset",
    "Ensemble",
    "EvaluationReport",
    "FitConvergenceError",
    "FittedModel",
    "GroupedSums",
    "IBPrior",
    "Inclusion",
    "ModelStructure",
    "NBPrior",
    "PosteriorWeights",
    "Prediction",
    "ProbabilityInterval",
    "ProtocolConfig",
    "ScalarCredalSet",
    "SplitSpec",
    "accuracy",
    "auc",
    "build_grouped_sums",
    "class_interval",
    "class_interval_nb",
    "decide_interval",
    "decide_point",
    "discounted_accuracy",
    "enumerate_structures",
    "experts_central_prior",
    "experts_hull_box",
    "fit",
    "fit_ensemble",
    "generate_synthetic",
    "ignorance_box",
    "inclusion_curves",
    "inclusion_interval",
    "inclusion_interval_nb",
    "inclusion_prob",
    "load_csv",
    "log_prior_mass",
    "model_size_pmf",
    "objective",
    "optimize_box",
    "optimize_scalar",
    "posterior_weights",
    "predict",
    "predict_prob",
    "recall",
    "run_protocol",
    "split_report",
    "stratified_split",
    "utility",
]
