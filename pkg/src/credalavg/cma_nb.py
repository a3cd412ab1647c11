"""Posterior intervals under per-covariate boxes of inclusion priors.

Each covariate gets its own prior inclusion interval.  The averaged
posterior quantity is a ratio of two functions that are multilinear in the
inclusion probabilities, hence affine in each coordinate separately; a
ratio of affine functions of one coordinate is monotone wherever the
denominator is positive, so the extrema over a box sit at its vertices.
Vertex enumeration is therefore exact; a projected-gradient multi-start
local optimizer is kept as an independent cross-check (and as the only
mode when 2^k vertices are too many).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._config import ConfigError, float_list, load_packaged_toml, load_toml, require
from .cma_ib import (
    DEFAULT_EPSILON,
    Inclusion,
    ProbabilityInterval,
    Target,
    target_coefficients,
)
from .model_space import MAX_COVARIATES, Ensemble, bit_matrix

_VERTEX_CHUNK = 4096


@dataclass(frozen=True)
class BoxCredalSet:
    """Per-covariate prior inclusion bounds, all strictly inside (0, 1)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.lo, dtype=np.float64)
        hi = np.array(self.hi, dtype=np.float64)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("lo and hi must be equal-length vectors")
        if not np.all((0.0 < lo) & (lo <= hi) & (hi < 1.0)):
            raise ValueError("need 0 < lo_j <= hi_j < 1 for every covariate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def k(self) -> int:
        return len(self.lo)

    def contains(self, other: "BoxCredalSet") -> bool:
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))


def ignorance_box(k: int, epsilon: float = DEFAULT_EPSILON) -> BoxCredalSet:
    """Near-ignorance box [epsilon, 1 - epsilon]^k."""
    return BoxCredalSet(np.full(k, epsilon), np.full(k, 1.0 - epsilon))


def load_box_config(path: str, k: int | None = None) -> BoxCredalSet:
    """Read a credal box from a key-value config file with ``lo``/``hi`` lists."""
    data = load_toml(path)
    return box_from_mapping(data, where=path, k=k)


def box_from_mapping(data: dict, where: str, k: int | None = None) -> BoxCredalSet:
    lo = float_list(require(data, "lo", where), "lo", where)
    hi = float_list(require(data, "hi", where), "hi", where)
    if len(lo) != len(hi):
        raise ConfigError(f"{where}: lo has {len(lo)} entries but hi has {len(hi)}")
    if k is not None and len(lo) != k:
        raise ConfigError(f"{where}: expected {k} covariate bounds, got {len(lo)}")
    try:
        return BoxCredalSet(np.array(lo), np.array(hi))
    except ValueError as err:
        raise ConfigError(f"{where}: {err}") from None


def experts_hull_box() -> BoxCredalSet:
    """Canned credal box: convex hulls of the shipped expert assessments."""
    data = load_packaged_toml("experts_hull.toml")
    return box_from_mapping(data, where="experts_hull.toml")


def _check_box(e: Ensemble, box: BoxCredalSet) -> None:
    if box.k != e.k:
        raise ValueError(f"box has {box.k} covariates but ensemble has {e.k}")


def _log_weights(e: Ensemble, theta_vec: np.ndarray) -> np.ndarray:
    incl = e.incl_matrix
    return (
        e.log_marginals
        + incl @ np.log(theta_vec)
        + (~incl) @ np.log1p(-theta_vec)
    )


def objective(e: Ensemble, target: Target, theta_vec: np.ndarray) -> float:
    """The averaged posterior quantity at one interior prior vector."""
    theta_vec = np.asarray(theta_vec, dtype=np.float64)
    if theta_vec.shape != (e.k,) or not np.all((theta_vec > 0) & (theta_vec < 1)):
        raise ValueError(f"theta_vec must lie strictly inside (0, 1)^{e.k}")
    a = target_coefficients(e, target)
    log_w = _log_weights(e, theta_vec)
    w = np.exp(log_w - log_w.max())
    return float((a @ w) / w.sum())


def objective_gradient(
    e: Ensemble, target: Target, theta_vec: np.ndarray
) -> tuple[float, np.ndarray]:
    """Objective value and its analytic gradient in the prior vector.

    With w_i multilinear in theta, d h / d theta_j =
    (sum_{i incl j} a_i w_i / theta_j - sum_{i excl j} a_i w_i / (1-theta_j)) / sum w
    - h * (same expression with a_i = 1) / sum w.
    """
    theta_vec = np.asarray(theta_vec, dtype=np.float64)
    a = target_coefficients(e, target)
    log_w = _log_weights(e, theta_vec)
    w = np.exp(log_w - log_w.max())
    total = w.sum()
    h = float((a @ w) / total)

    incl = e.incl_matrix.astype(np.float64)
    excl = 1.0 - incl
    d_num = (a * w) @ incl / theta_vec - (a * w) @ excl / (1.0 - theta_vec)
    d_den = w @ incl / theta_vec - w @ excl / (1.0 - theta_vec)
    grad = d_num / total - h * d_den / total
    return h, grad


def _vertex_weight_matrix(e: Ensemble, box: BoxCredalSet) -> tuple[np.ndarray, np.ndarray]:
    """Shifted prior-times-evidence weights at every box vertex.

    Returns (W, denom): W has one row per vertex and one column per model,
    each row rescaled by its own maximum; denom holds the per-vertex row
    sums.  Ratios of per-vertex aggregates are unaffected by the rescaling.
    """
    k = e.k
    incl = e.incl_matrix.astype(np.float64)
    excl = 1.0 - incl
    t_lo = incl * np.log(box.lo) + excl * np.log1p(-box.lo)
    t_hi = incl * np.log(box.hi) + excl * np.log1p(-box.hi)
    V = bit_matrix(k).astype(np.float64)
    log_W = V @ t_hi.T + (1.0 - V) @ t_lo.T + e.log_marginals[None, :]
    log_W -= log_W.max(axis=1, keepdims=True)
    W = np.exp(log_W)
    return W, W.sum(axis=1)


def optimize_box(
    e: Ensemble,
    target: Target,
    box: BoxCredalSet,
    mode: str = "vertex",
    starts: int = 20,
    seed: int = 0,
) -> ProbabilityInterval:
    """Extremize the averaged posterior quantity over the credal box.

    ``mode="vertex"`` evaluates all 2^k vertices (exact, see module
    docstring); ``mode="gradient"`` runs the projected-gradient multi-start
    local optimizer instead.
    """
    _check_box(e, box)
    if mode == "vertex":
        if e.k > MAX_COVARIATES:
            raise ValueError(
                f"vertex enumeration is capped at {MAX_COVARIATES} covariates; "
                "use mode='gradient'"
            )
        a = target_coefficients(e, target)
        lo, hi = _vertex_extremes(e, box, a[None, :])
        return ProbabilityInterval(float(lo[0]), float(hi[0]))
    if mode == "gradient":
        lo, hi = _gradient_extremes(e, target, box, starts=starts, seed=seed)
        return ProbabilityInterval(lo, hi)
    raise ValueError(f"unknown mode {mode!r} (expected 'vertex' or 'gradient')")


def _vertex_extremes(
    e: Ensemble, box: BoxCredalSet, A: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vertex-exact extrema for many coefficient rows at once.

    A has shape (m, n_models); vertices are processed in chunks to bound
    the (chunk, n_models) intermediate.
    """
    W, denom = _vertex_weight_matrix(e, box)
    m = A.shape[0]
    lo = np.full(m, np.inf)
    hi = np.full(m, -np.inf)
    for start in range(0, W.shape[0], _VERTEX_CHUNK):
        Wc = W[start : start + _VERTEX_CHUNK]
        dc = denom[start : start + _VERTEX_CHUNK]
        H = (A @ Wc.T) / dc[None, :]
        np.minimum(lo, H.min(axis=1), out=lo)
        np.maximum(hi, H.max(axis=1), out=hi)
    return np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)


def _project(x: np.ndarray, box: BoxCredalSet) -> np.ndarray:
    return np.minimum(np.maximum(x, box.lo), box.hi)


def _local_descent(
    e: Ensemble,
    target: Target,
    box: BoxCredalSet,
    x0: np.ndarray,
    sign: float,
    max_iter: int = 500,
    tol: float = 1e-10,
) -> float:
    """Projected gradient descent of sign*h from x0; returns the best h found."""
    x = _project(x0, box)
    val, grad = objective_gradient(e, target, x)
    step = 1.0
    for _ in range(max_iter):
        accepted = False
        for _ in range(30):  # backtracking
            cand = _project(x - step * sign * grad, box)
            cand_val, cand_grad = objective_gradient(e, target, cand)
            if sign * cand_val <= sign * val:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        moved = float(np.max(np.abs(cand - x)))
        gained = sign * (val - cand_val)
        x, val, grad = cand, cand_val, cand_grad
        step = min(step * 2.0, 1e6)
        if moved < tol and gained < tol:
            break
    return val


def _gradient_extremes(
    e: Ensemble, target: Target, box: BoxCredalSet, starts: int, seed: int
) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    points = [0.5 * (box.lo + box.hi)]
    points.extend(box.lo + rng.random((starts - 1, e.k)) * (box.hi - box.lo))
    lo = min(_local_descent(e, target, box, x0, sign=1.0) for x0 in points)
    hi = max(_local_descent(e, target, box, x0, sign=-1.0) for x0 in points)
    return max(lo, 0.0), min(hi, 1.0)


def class_interval_nb(
    e: Ensemble, box: BoxCredalSet, x: np.ndarray, mode: str = "vertex"
) -> tuple[ProbabilityInterval, ProbabilityInterval]:
    """Posterior probability intervals of (class 1, class 0) at ``x``."""
    from .cma_ib import ClassProbability

    c1 = optimize_box(e, ClassProbability(x), box, mode=mode)
    c0 = ProbabilityInterval(1.0 - c1.hi, 1.0 - c1.lo)
    return c1, c0


def inclusion_interval_nb(
    e: Ensemble, box: BoxCredalSet, j: int, mode: str = "vertex"
) -> ProbabilityInterval:
    """Posterior probability interval of inclusion of covariate ``j``."""
    return optimize_box(e, Inclusion(j), box, mode=mode)


def class_intervals_nb(
    e: Ensemble, box: BoxCredalSet, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vertex-exact class-1 interval endpoints for many test rows at once."""
    _check_box(e, box)
    return _vertex_extremes(e, box, e.member_probs_matrix(X))


def inclusion_intervals_nb(e: Ensemble, box: BoxCredalSet) -> tuple[np.ndarray, np.ndarray]:
    """Vertex-exact inclusion interval endpoints for every covariate at once."""
    _check_box(e, box)
    return _vertex_extremes(e, box, e.incl_matrix.astype(np.float64).T)
