"""Maximum-likelihood fitting of a single logistic regressor.

Fitting is Newton/IRLS on the Bernoulli log-likelihood with a small fixed
ridge penalty on the non-intercept coefficients, which keeps the optimum
finite under (quasi-)separation while perturbing the reported quantities
by O(ridge * |coeffs|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

if TYPE_CHECKING:  # pragma: no cover
    from .dataset import Dataset
    from .model_space import ModelStructure

RIDGE = 1e-6
MAX_ITER = 100
DEVIANCE_TOL = 1e-10
COEF_TOL = 1e-9
_JITTER = 1e-10


class FitConvergenceError(RuntimeError):
    """IRLS did not converge; ``coeffs`` holds the last iterate."""

    def __init__(self, message: str, coeffs: np.ndarray):
        super().__init__(message)
        self.coeffs = coeffs


def sigmoid(eta):
    """Numerically stable logistic function for scalars or arrays."""
    arr = np.asarray(eta, dtype=np.float64)
    e = np.exp(-np.abs(arr))
    out = np.where(arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if np.isscalar(eta) or arr.ndim == 0:
        return float(out)
    return out


def log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood given linear predictors, without overflow."""
    # log(1 + e^eta) = max(eta, 0) + log1p(e^{-|eta|})
    log1pexp = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    return float(np.sum(y * eta - log1pexp))


def _design_matrix(X: np.ndarray, covariates: tuple[int, ...]) -> np.ndarray:
    n = X.shape[0]
    cols = [np.ones(n)]
    for j in covariates:
        cols.append(X[:, j - 1])
    return np.column_stack(cols)


def _solve_spd(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Cholesky solve with an escalating diagonal jitter fallback."""
    jitter = 0.0
    eye = np.eye(H.shape[0])
    for _ in range(8):
        try:
            c = cho_factor(H + jitter * eye, lower=True)
            return cho_solve(c, rhs)
        except LinAlgError:
            jitter = _JITTER if jitter == 0.0 else jitter * 100.0
    return np.linalg.lstsq(H, rhs, rcond=None)[0]


def fit(d: "Dataset", s: "ModelStructure", max_iter: int = MAX_ITER) -> "FittedModel":
    """Fit one logistic regressor on the covariate subset ``s``.

    Returns the ridge-stabilized maximum-likelihood coefficients together
    with the unpenalized log-likelihood, the BIC, and the BIC-approximated
    log marginal likelihood (-BIC/2).  Raises
    :class:`FitConvergenceError` after ``max_iter`` Newton steps without
    meeting the deviance or coefficient tolerances.
    """
    covariates = s.covariates
    Xd = _design_matrix(d.X, covariates)
    y = d.y.astype(np.float64)
    p_count = Xd.shape[1]
    pen = np.full(p_count, RIDGE)
    pen[0] = 0.0  # intercept unpenalized

    beta = np.zeros(p_count)
    eta = Xd @ beta
    pll = log_likelihood(eta, y)  # penalty is zero at beta = 0
    deviance = -2.0 * pll
    converged = False
    for _ in range(max_iter):
        p = sigmoid(eta)
        w = p * (1.0 - p)
        grad = Xd.T @ (y - p) - pen * beta
        H = (Xd * w[:, None]).T @ Xd + np.diag(pen)
        step = _solve_spd(H, grad)

        # step halving keeps the penalized objective non-decreasing
        scale = 1.0
        for _ in range(30):
            beta_new = beta + scale * step
            eta_new = Xd @ beta_new
            pll_new = log_likelihood(eta_new, y) - 0.5 * np.sum(pen * beta_new**2)
            if pll_new >= pll - 1e-12:
                break
            scale *= 0.5

        coef_change = float(np.max(np.abs(beta_new - beta)))
        deviance_new = -2.0 * log_likelihood(eta_new, y)
        dev_change = abs(deviance - deviance_new)
        beta, eta, pll, deviance = beta_new, eta_new, pll_new, deviance_new
        if dev_change < DEVIANCE_TOL or coef_change < COEF_TOL:
            converged = True
            break
    if not converged:
        raise FitConvergenceError(
            f"IRLS did not converge in {max_iter} iterations for covariates {covariates}",
            coeffs=beta,
        )

    ll = log_likelihood(Xd @ beta, y)
    bic = -2.0 * ll + p_count * math.log(d.n)
    return FittedModel(
        structure=s,
        coeffs=beta,
        log_lik=ll,
        bic=bic,
        log_marginal=-bic / 2.0,
    )


@dataclass(frozen=True)
class FittedModel:
    """One fitted logistic regressor and its BIC-derived evidence."""

    structure: "ModelStructure"
    coeffs: np.ndarray  # intercept first, then one entry per included covariate
    log_lik: float
    bic: float
    log_marginal: float

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if coeffs.shape != (self.structure.size + 1,):
            raise ValueError("coefficient vector must have length size + 1")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)


def predict_prob(m: FittedModel, x: np.ndarray) -> float:
    """Probability of class 1 at the full covariate vector ``x``."""
    x = np.asarray(x, dtype=np.float64)
    eta = m.coeffs[0]
    for pos, j in enumerate(m.structure.covariates, start=1):
        eta += m.coeffs[pos] * x[j - 1]
    return sigmoid(eta)
