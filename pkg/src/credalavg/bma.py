"""Model averaging under a single (precise) prior over structures.

Posterior model weights follow from the BIC-approximated marginal
likelihoods and the chosen prior mass; predictions and inclusion
probabilities are the weight-averaged per-model quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model_space import Ensemble, ModelStructure
from .priors import PriorSpec, log_prior_mass


@dataclass(frozen=True)
class PosteriorWeights:
    """Normalized posterior model probabilities, stored as logs."""

    log_weights: np.ndarray

    def __post_init__(self) -> None:
        lw = np.asarray(self.log_weights, dtype=np.float64)
        total = logsumexp(lw)
        if abs(total) > 1e-8:
            raise ValueError(f"log weights are not normalized (logsumexp = {total:g})")
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def posterior_weights(e: Ensemble, p: PriorSpec) -> PosteriorWeights:
    """Posterior probability of every model: marginal likelihood times prior."""
    log_prior = np.array(
        [log_prior_mass(p, ModelStructure(int(mask)), e.k) for mask in e.masks]
    )
    unnorm = e.log_marginals + log_prior
    return PosteriorWeights(log_weights=unnorm - logsumexp(unnorm))


def predict(e: Ensemble, w: PosteriorWeights, x: np.ndarray) -> float:
    """Model-averaged probability of class 1 at covariate vector ``x``."""
    return float(w.weights @ e.member_probs(x))


def predict_matrix(e: Ensemble, w: PosteriorWeights, X: np.ndarray) -> np.ndarray:
    """Model-averaged class-1 probabilities for many rows at once."""
    return e.member_probs_matrix(X) @ w.weights


def inclusion_prob(e: Ensemble, w: PosteriorWeights, j: int) -> float:
    """Posterior probability that covariate ``j`` (1-based) is included."""
    if not 1 <= j <= e.k:
        raise ValueError(f"covariate index {j} outside 1..{e.k}")
    return float(np.sum(w.weights[e.incl_matrix[:, j - 1]]))
