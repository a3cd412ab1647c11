"""Exact posterior intervals under a scalar credal set of inclusion priors.

With one shared inclusion probability ``theta`` ranging over an interval,
every averaged posterior quantity is a ratio of two degree-k polynomials in
``theta`` whose coefficients are per-model-size sums of (weighted) marginal
likelihoods:

    h(theta) = sum_j theta^j (1-theta)^(k-j) Z_j
             / sum_j theta^j (1-theta)^(k-j) L_j

The extrema of ``h`` over [theta_lo, theta_hi] lie at the interval
endpoints or at real roots of the numerator of ``h'``; the roots are
isolated by sign-change bisection and polished by Newton steps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model_space import Ensemble

DEFAULT_EPSILON = 0.05
_BISECT_TOL = 1e-12
_RANGE_SLACK = 1e-9
_GRID_STEP = 1e-4


@dataclass(frozen=True)
class ProbabilityInterval:
    """Lower and upper posterior probability."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"invalid probability interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= p <= self.hi + tol


@dataclass(frozen=True)
class ScalarCredalSet:
    """Interval [theta_lo, theta_hi] for the shared inclusion probability.

    The endpoints 0 and 1 are excluded: a prior certain about inclusion or
    exclusion assigns hard zeros that no amount of data can revise.
    """

    theta_lo: float
    theta_hi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_lo <= self.theta_hi < 1.0):
            raise ValueError(
                f"need 0 < theta_lo <= theta_hi < 1, got [{self.theta_lo}, {self.theta_hi}]"
            )


def ignorance_scalar(epsilon: float = DEFAULT_EPSILON) -> ScalarCredalSet:
    """Near-ignorance scalar credal set [epsilon, 1 - epsilon]."""
    return ScalarCredalSet(epsilon, 1.0 - epsilon)


@dataclass(frozen=True)
class ClassProbability:
    """Target: posterior probability of class 1 at covariate vector ``x``."""

    x: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=np.float64)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class Inclusion:
    """Target: posterior probability of inclusion of covariate ``j`` (1-based)."""

    j: int


Target = ClassProbability | Inclusion


@dataclass(frozen=True)
class GroupedSums:
    """Per-size log sums feeding the rational objective.

    ``log_L[j]`` is the log marginal-likelihood sum over models of size j;
    ``log_Z[j]`` is the same sum with each model weighted by its target
    coefficient (per-model class probability, or the 0/1 inclusion
    indicator), so entries may be -inf.
    """

    log_L: np.ndarray
    log_Z: np.ndarray

    def __post_init__(self) -> None:
        log_L = np.asarray(self.log_L, dtype=np.float64)
        log_Z = np.asarray(self.log_Z, dtype=np.float64)
        if log_L.shape != log_Z.shape or log_L.ndim != 1:
            raise ValueError("log_L and log_Z must be equal-length vectors")
        if np.any(log_Z > log_L + 1e-9):
            raise ValueError("log_Z must not exceed log_L (target coefficients lie in [0, 1])")
        log_L.setflags(write=False)
        log_Z.setflags(write=False)
        object.__setattr__(self, "log_L", log_L)
        object.__setattr__(self, "log_Z", log_Z)

    @property
    def k(self) -> int:
        return len(self.log_L) - 1


def target_coefficients(e: Ensemble, target: Target) -> np.ndarray:
    """Per-model coefficients a_i in [0, 1] for the requested inference."""
    if isinstance(target, ClassProbability):
        if target.x.shape != (e.k,):
            raise ValueError(f"covariate vector must have length {e.k}")
        return e.member_probs(target.x)
    if isinstance(target, Inclusion):
        if not 1 <= target.j <= e.k:
            raise ValueError(f"covariate index {target.j} outside 1..{e.k}")
        return e.incl_matrix[:, target.j - 1].astype(np.float64)
    raise TypeError(f"unknown target {type(target).__name__}")


def build_grouped_sums(e: Ensemble, target: Target) -> GroupedSums:
    """Aggregate per-model evidence into per-size sums for ``target``."""
    a = target_coefficients(e, target)
    log_Z = np.empty(e.k + 1)
    for j in range(e.k + 1):
        sel = e.sizes == j
        log_Z[j] = logsumexp(e.log_marginals[sel], b=a[sel], return_sign=False)
    return GroupedSums(log_L=e.grouped_log_sums, log_Z=log_Z)


def _binomial_basis(k: int) -> np.ndarray:
    """Row j holds the ascending monomial coefficients of theta^j (1-theta)^(k-j)."""
    B = np.zeros((k + 1, k + 1))
    for j in range(k + 1):
        for r in range(k - j + 1):
            B[j, j + r] = math.comb(k - j, r) * (-1.0) ** r
    return B


def _power_basis(theta: np.ndarray, k: int) -> np.ndarray:
    """Columns theta^j (1-theta)^(k-j) for j = 0..k, evaluated in log space."""
    theta = np.asarray(theta, dtype=np.float64)
    j = np.arange(k + 1)
    return np.exp(j * np.log(theta)[..., None] + (k - j) * np.log1p(-theta)[..., None])


def _horner_grid(C: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Evaluate per-row ascending-coefficient polynomials on a shared grid."""
    res = np.zeros((C.shape[0], len(xs)))
    for i in range(C.shape[1] - 1, -1, -1):
        res = res * xs[None, :] + C[:, i : i + 1]
    return res


def _horner_at(C: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate per-row polynomials at one point per row."""
    res = np.zeros(C.shape[0])
    for i in range(C.shape[1] - 1, -1, -1):
        res = res * x + C[:, i]
    return res


def _batch_conv(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Polynomial product of each row of A with the vector b (ascending coeffs)."""
    out = np.zeros((A.shape[0], A.shape[1] + len(b) - 1))
    for i, bi in enumerate(b):
        if bi != 0.0:
            out[:, i : i + A.shape[1]] += A * bi
    return out


def _stationary_candidates(
    N: np.ndarray, theta_lo: float, theta_hi: float, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sign-changing real roots of each row of N inside (theta_lo, theta_hi).

    Returns (row indices, root locations).  Bisection over 4k subintervals,
    refined to 1e-12 and polished with clipped Newton steps.  Roots where N
    touches zero without changing sign are not extrema of h and are skipped.
    """
    edges = np.linspace(theta_lo, theta_hi, 4 * k + 1)
    E = _horner_grid(N, edges)

    zero_rows, zero_cols = np.nonzero(E[:, 1:-1] == 0.0)
    zero_pts = edges[zero_cols + 1]

    rows, cols = np.nonzero(E[:, :-1] * E[:, 1:] < 0.0)
    if len(rows) == 0:
        return zero_rows, zero_pts

    a = edges[cols].copy()
    b = edges[cols + 1].copy()
    fa = E[rows, cols]
    Nb = N[rows]
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = _horner_at(Nb, mid)
        left = fa * fm <= 0.0
        b = np.where(left, mid, b)
        fa_new = np.where(left, fa, fm)
        a = np.where(left, a, mid)
        fa = fa_new
        if np.all(b - a < _BISECT_TOL):
            break
    roots = 0.5 * (a + b)

    dNb = Nb[:, 1:] * np.arange(1, N.shape[1])
    for _ in range(3):
        val = _horner_at(Nb, roots)
        der = _horner_at(dNb, roots)
        step = np.divide(val, der, out=np.zeros_like(val), where=der != 0.0)
        roots = np.clip(roots - step, a, b)

    return np.concatenate([rows, zero_rows]), np.concatenate([roots, zero_pts])


def _optimize_grouped(
    L: np.ndarray, Zs: np.ndarray, theta_lo: float, theta_hi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Extremize h over [theta_lo, theta_hi] for many numerators at once.

    L has shape (k+1,); Zs has shape (m, k+1); both already shifted so that
    max(L) is O(1).  Returns per-row lower and upper values of h.
    """
    m, kp1 = Zs.shape
    k = kp1 - 1
    B = _binomial_basis(k)
    gc = B.T @ L
    F = Zs @ B
    dg = gc[1:] * np.arange(1, k + 1)
    dF = F[:, 1:] * np.arange(1, k + 1)
    N = _batch_conv(dF, gc) - _batch_conv(F, dg)

    T_end = _power_basis(np.array([theta_lo, theta_hi]), k)
    denom_end = L @ T_end.T
    h_end = (Zs @ T_end.T) / denom_end[None, :]
    lo_vals = h_end.min(axis=1)
    hi_vals = h_end.max(axis=1)

    rows, roots = _stationary_candidates(N, theta_lo, theta_hi, k)
    if len(rows):
        T_roots = _power_basis(roots, k)
        numer = np.einsum("ij,ij->i", Zs[rows], T_roots)
        h_roots = numer / (T_roots @ L)
        np.minimum.at(lo_vals, rows, h_roots)
        np.maximum.at(hi_vals, rows, h_roots)

    # h is a weighted mean of Z_j / L_j, so values outside that range signal
    # numerical trouble; rerun the offending rows on a dense grid.
    pos = L > 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = Zs[:, pos] / L[pos][None, :]
    rmin = ratios.min(axis=1)
    rmax = ratios.max(axis=1)
    bad = (
        (lo_vals < rmin - _RANGE_SLACK)
        | (hi_vals > rmax + _RANGE_SLACK)
        | ~np.isfinite(lo_vals)
        | ~np.isfinite(hi_vals)
    )
    if bad.any():
        warnings.warn(
            f"candidate-root optimizer out of range for {int(bad.sum())} instance(s); "
            "falling back to dense grid search",
            RuntimeWarning,
        )
        n_pts = max(2, int(round((theta_hi - theta_lo) / _GRID_STEP)) + 1)
        grid = np.linspace(theta_lo, theta_hi, n_pts)
        T = _power_basis(grid, k)
        hg = (Zs[bad] @ T.T) / (L @ T.T)[None, :]
        lo_vals[bad] = hg.min(axis=1)
        hi_vals[bad] = hg.max(axis=1)

    return np.clip(lo_vals, 0.0, 1.0), np.clip(hi_vals, 0.0, 1.0)


def _shifted_linear(g: GroupedSums) -> tuple[np.ndarray, np.ndarray]:
    finite = np.isfinite(g.log_L)
    if not finite.any():
        raise ValueError("all grouped marginal-likelihood sums are zero")
    shift = g.log_L[finite].max()
    return np.exp(g.log_L - shift), np.exp(g.log_Z - shift)


def optimize_scalar(g: GroupedSums, cs: ScalarCredalSet) -> ProbabilityInterval:
    """Exact extrema of the rational objective over the scalar credal set."""
    L, Z = _shifted_linear(g)
    lo, hi = _optimize_grouped(L, Z[None, :], cs.theta_lo, cs.theta_hi)
    return ProbabilityInterval(float(lo[0]), float(hi[0]))


def evaluate_objective(g: GroupedSums, theta: np.ndarray) -> np.ndarray:
    """h(theta) on a grid; the independent check for the optimizer."""
    L, Z = _shifted_linear(g)
    T = _power_basis(np.asarray(theta, dtype=np.float64), g.k)
    return (T @ Z) / (T @ L)


def class_interval(
    e: Ensemble, cs: ScalarCredalSet, x: np.ndarray
) -> tuple[ProbabilityInterval, ProbabilityInterval]:
    """Posterior probability intervals of (class 1, class 0) at ``x``."""
    c1 = optimize_scalar(build_grouped_sums(e, ClassProbability(x)), cs)
    c0 = ProbabilityInterval(1.0 - c1.hi, 1.0 - c1.lo)
    return c1, c0


def inclusion_interval(e: Ensemble, cs: ScalarCredalSet, j: int) -> ProbabilityInterval:
    """Posterior probability interval of inclusion of covariate ``j``."""
    return optimize_scalar(build_grouped_sums(e, Inclusion(j)), cs)


def _grouped_weights(e: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """Shifted per-model weights scattered by size: (L vector, per-model matrix)."""
    shift = e.log_marginals.max()
    mexp = np.exp(e.log_marginals - shift)
    onehot = e.sizes[:, None] == np.arange(e.k + 1)[None, :]
    WS = mexp[:, None] * onehot
    return WS.sum(axis=0), WS


def class_intervals(
    e: Ensemble, cs: ScalarCredalSet, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Class-1 interval endpoints for many test rows at once."""
    L, WS = _grouped_weights(e)
    Z = e.member_probs_matrix(X) @ WS
    return _optimize_grouped(L, Z, cs.theta_lo, cs.theta_hi)


def inclusion_intervals(e: Ensemble, cs: ScalarCredalSet) -> tuple[np.ndarray, np.ndarray]:
    """Inclusion interval endpoints for every covariate at once."""
    L, WS = _grouped_weights(e)
    Z = e.incl_matrix.astype(np.float64).T @ WS
    return _optimize_grouped(L, Z, cs.theta_lo, cs.theta_hi)
