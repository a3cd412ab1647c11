"""Prior mass functions over model structures.

Three families are supported:

* IB  -- every covariate included independently with one shared probability,
* BB  -- the shared inclusion probability is itself Beta-distributed,
* NB  -- each covariate has its own inclusion probability.

Inclusion probabilities must lie strictly inside (0, 1): a prior that is
certain about any covariate cannot be revised by data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from ._config import ConfigError, float_list, load_packaged_toml, load_toml, require
from .model_space import ModelStructure


def _check_open_unit(value: float, name: str) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value}")


@dataclass(frozen=True)
class IBPrior:
    """Shared inclusion probability ``theta`` for every covariate."""

    theta: float

    def __post_init__(self) -> None:
        _check_open_unit(self.theta, "theta")


@dataclass(frozen=True)
class BBPrior:
    """Beta(alpha, beta_param) hyperprior on the shared inclusion probability."""

    alpha: float = 1.0
    beta_param: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta_param <= 0:
            raise ValueError("alpha and beta_param must be positive")


@dataclass(frozen=True)
class NBPrior:
    """Per-covariate inclusion probabilities."""

    theta_vec: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_vec", tuple(float(t) for t in self.theta_vec))
        for j, t in enumerate(self.theta_vec, start=1):
            _check_open_unit(t, f"theta_vec[{j}]")


PriorSpec = IBPrior | BBPrior | NBPrior


def _bernoulli_log_mass(mask: int, log_t: np.ndarray, log_1mt: np.ndarray) -> float:
    k = len(log_t)
    bits = (mask >> np.arange(k)) & 1 > 0
    return float(np.sum(np.where(bits, log_t, log_1mt)))


def log_prior_mass(p: PriorSpec, s: ModelStructure, k: int) -> float:
    """Log prior probability of the model structure ``s`` among k covariates."""
    if s.mask >= 2**k:
        raise ValueError(f"mask {s.mask} is not a subset of 1..{k}")
    if isinstance(p, IBPrior):
        # same summation path as NB so that NB with equal entries matches bitwise
        log_t = np.full(k, np.log(p.theta))
        log_1mt = np.full(k, np.log1p(-p.theta))
        return _bernoulli_log_mass(s.mask, log_t, log_1mt)
    if isinstance(p, BBPrior):
        a, b = p.alpha, p.beta_param
        ki = s.size
        return float(
            gammaln(a + b) - gammaln(a) - gammaln(b)
            + gammaln(a + ki) + gammaln(b + k - ki) - gammaln(a + b + k)
        )
    if isinstance(p, NBPrior):
        if len(p.theta_vec) != k:
            raise ValueError(f"theta_vec has {len(p.theta_vec)} entries for k={k}")
        t = np.asarray(p.theta_vec)
        return _bernoulli_log_mass(s.mask, np.log(t), np.log1p(-t))
    raise TypeError(f"unknown prior spec {type(p).__name__}")


def model_size_pmf(p: PriorSpec, k: int) -> np.ndarray:
    """Prior probability of each model size 0..k, as a (k+1,) vector."""
    sizes = np.arange(k + 1)
    if isinstance(p, IBPrior):
        return binom.pmf(sizes, k, p.theta)
    if isinstance(p, BBPrior):
        log_choose = gammaln(k + 1) - gammaln(sizes + 1) - gammaln(k - sizes + 1)
        a, b = p.alpha, p.beta_param
        log_mass = (
            gammaln(a + b) - gammaln(a) - gammaln(b)
            + gammaln(a + sizes) + gammaln(b + k - sizes) - gammaln(a + b + k)
        )
        return np.exp(log_choose + log_mass)
    if isinstance(p, NBPrior):
        if len(p.theta_vec) != k:
            raise ValueError(f"theta_vec has {len(p.theta_vec)} entries for k={k}")
        # Poisson-binomial pmf by convolving one Bernoulli at a time
        pmf = np.zeros(k + 1)
        pmf[0] = 1.0
        for j, t in enumerate(p.theta_vec, start=1):
            upd = pmf[: j + 1].copy()
            upd[: j] *= 1.0 - t
            upd[1 : j + 1] += pmf[:j] * t
            pmf[: j + 1] = upd
        return pmf
    raise TypeError(f"unknown prior spec {type(p).__name__}")


def load_prior_config(path: str) -> PriorSpec:
    """Read a prior from a key-value config file.

    Keys: ``prior`` ("ib" | "bb" | "nb"), plus ``theta`` (ib),
    ``alpha``/``beta`` (bb), or ``theta_vec`` (nb).
    """
    data = load_toml(path)
    return prior_from_mapping(data, where=path)


def prior_from_mapping(data: dict, where: str) -> PriorSpec:
    variant = require(data, "prior", where)
    try:
        if variant == "ib":
            return IBPrior(theta=float(data.get("theta", 0.5)))
        if variant == "bb":
            return BBPrior(alpha=float(data.get("alpha", 1.0)), beta_param=float(data.get("beta", 1.0)))
        if variant == "nb":
            vec = float_list(require(data, "theta_vec", where), "theta_vec", where)
            return NBPrior(theta_vec=tuple(vec))
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from None
    raise ConfigError(f"{where}: unknown prior variant {variant!r} (expected ib, bb, or nb)")


def experts_central_prior() -> NBPrior:
    """Canned per-covariate prior: central points of the shipped expert hulls."""
    data = load_packaged_toml("experts_central.toml")
    prior = prior_from_mapping(data, where="experts_central.toml")
    assert isinstance(prior, NBPrior)
    return prior
