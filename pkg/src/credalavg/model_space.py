"""Exhaustive enumeration of covariate subsets and ensemble fitting.

All marginal-likelihood bookkeeping stays in log space; quantities feeding
the averaging and interval modules are shift-invariant, so downstream code
applies a single global shift before exponentiating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import logit
from .dataset import Dataset
from .logit import FitConvergenceError, FittedModel, sigmoid

MAX_COVARIATES = 20


@dataclass(frozen=True)
class ModelStructure:
    """One covariate subset, encoded as a bitmask (bit j-1 <-> covariate j)."""

    mask: int

    def __post_init__(self) -> None:
        if self.mask < 0:
            raise ValueError("mask must be non-negative")

    @property
    def size(self) -> int:
        return int(self.mask).bit_count()

    @property
    def covariates(self) -> tuple[int, ...]:
        """Included covariate indices, 1-based, ascending."""
        return tuple(j + 1 for j in range(self.mask.bit_length()) if (self.mask >> j) & 1)

    def includes(self, j: int) -> bool:
        return bool((self.mask >> (j - 1)) & 1)


def enumerate_structures(k: int) -> list[ModelStructure]:
    """All 2^k covariate subsets in ascending mask order."""
    if k < 1 or k > MAX_COVARIATES:
        raise ValueError(
            f"k={k} is outside 1..{MAX_COVARIATES}; exhaustive enumeration is "
            f"capped at {MAX_COVARIATES} covariates and model-space sampling "
            "is not implemented"
        )
    return [ModelStructure(mask) for mask in range(2**k)]


def bit_matrix(k: int) -> np.ndarray:
    """(2^k, k) boolean matrix; row m holds the bits of mask m."""
    masks = np.arange(2**k, dtype=np.int64)
    return (masks[:, None] >> np.arange(k)) & 1 > 0


@dataclass(frozen=True)
class Ensemble:
    """All 2^k fitted regressors plus cached per-size evidence sums.

    ``coeff_matrix`` scatters each model's coefficients into full-width
    rows (zeros for excluded covariates) so predictions vectorize, and
    ``grouped_log_sums[j]`` is log sum of marginal likelihoods over the
    models of size j.
    """

    k: int
    n: int
    covariate_names: tuple[str, ...]
    models: tuple[FittedModel, ...]
    masks: np.ndarray
    sizes: np.ndarray
    log_marginals: np.ndarray
    grouped_log_sums: np.ndarray
    coeff_matrix: np.ndarray
    incl_matrix: np.ndarray

    def __post_init__(self) -> None:
        for name in ("masks", "sizes", "log_marginals", "grouped_log_sums", "coeff_matrix", "incl_matrix"):
            getattr(self, name).setflags(write=False)
        if len(self.models) != 2**self.k:
            raise ValueError(f"expected {2**self.k} models, got {len(self.models)}")

    @property
    def n_models(self) -> int:
        return len(self.models)

    def member_probs(self, x: np.ndarray) -> np.ndarray:
        """Per-model probability of class 1 at one covariate vector, (2^k,)."""
        x = np.asarray(x, dtype=np.float64)
        eta = self.coeff_matrix[:, 0] + self.coeff_matrix[:, 1:] @ x
        return sigmoid(eta)

    def member_probs_matrix(self, X: np.ndarray) -> np.ndarray:
        """Per-model probabilities for many rows, (n_rows, 2^k)."""
        X = np.asarray(X, dtype=np.float64)
        eta = X @ self.coeff_matrix[:, 1:].T + self.coeff_matrix[:, 0]
        return sigmoid(eta)


def build_ensemble(
    models: list[FittedModel] | tuple[FittedModel, ...],
    n: int,
    covariate_names: tuple[str, ...],
) -> Ensemble:
    """Assemble the cached ensemble arrays from fitted models in mask order."""
    k = len(covariate_names)
    if len(models) != 2**k:
        raise ValueError(f"expected {2**k} models for k={k}, got {len(models)}")
    masks = np.arange(2**k, dtype=np.int64)
    for i, m in enumerate(models):
        if m.structure.mask != i:
            raise ValueError(f"model {i} is out of mask order (mask={m.structure.mask})")
    sizes = np.array([m.structure.size for m in models], dtype=np.int64)
    log_marginals = np.array([m.log_marginal for m in models], dtype=np.float64)
    coeff_matrix = np.zeros((2**k, k + 1))
    for i, m in enumerate(models):
        coeff_matrix[i, 0] = m.coeffs[0]
        for pos, j in enumerate(m.structure.covariates, start=1):
            coeff_matrix[i, j] = m.coeffs[pos]
    grouped = np.empty(k + 1)
    for j in range(k + 1):
        grouped[j] = logsumexp(log_marginals[sizes == j])
    return Ensemble(
        k=k,
        n=n,
        covariate_names=tuple(covariate_names),
        models=tuple(models),
        masks=masks,
        sizes=sizes,
        log_marginals=log_marginals,
        grouped_log_sums=grouped,
        coeff_matrix=coeff_matrix,
        incl_matrix=bit_matrix(k),
    )


def fit_ensemble(d: Dataset, jobs: int = 1) -> Ensemble:
    """Fit every covariate subset of ``d`` and cache the grouped sums."""
    structures = enumerate_structures(d.k)

    def fit_one(s: ModelStructure) -> FittedModel:
        try:
            return logit.fit(d, s)
        except FitConvergenceError as err:
            raise FitConvergenceError(
                f"fit failed for mask {s.mask:#06b} (covariates {s.covariates}): {err}",
                coeffs=err.coeffs,
            ) from err

    if jobs == 1 or len(structures) < 64:
        models = [fit_one(s) for s in structures]
    else:
        from joblib import Parallel, delayed

        models = Parallel(n_jobs=jobs)(delayed(fit_one)(s) for s in structures)
    return build_ensemble(models, n=d.n, covariate_names=d.covariate_names)
