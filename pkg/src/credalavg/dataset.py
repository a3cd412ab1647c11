"""Data ingestion, stratified splitting, and synthetic presence/absence data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Malformed or infeasible input data."""


@dataclass(frozen=True)
class Dataset:
    """Binary-class dataset: an n x k covariate matrix plus 0/1 labels.

    Immutable after construction; the underlying arrays are marked
    read-only so a Dataset can be shared freely across workers.
    """

    covariate_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise DataError("covariate matrix must be two-dimensional")
        if X.shape[1] != len(self.covariate_names):
            raise DataError(
                f"{len(self.covariate_names)} covariate names for "
                f"{X.shape[1]} covariate columns"
            )
        if y.shape != (X.shape[0],):
            raise DataError("one class label per row is required")
        if X.shape[0] < 1:
            raise DataError("dataset must contain at least one row")
        if not np.all(np.isfinite(X)):
            raise DataError("covariate values must all be finite")
        if not np.isin(y, (0, 1)).all():
            raise DataError("class labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def prevalence(self) -> float:
        """Fraction of class-1 (presence) rows."""
        return float(self.y.mean())

    def subset(self, indices: np.ndarray) -> "Dataset":
        """New Dataset holding the given rows, in the order given."""
        return Dataset(self.covariate_names, self.X[indices], self.y[indices])


@dataclass(frozen=True)
class SplitSpec:
    """Sizes and seed for one train/test split."""

    train_size: int
    test_size: int
    seed: int
    stratified: bool = True

    def __post_init__(self) -> None:
        if self.train_size < 1 or self.test_size < 1:
            raise DataError("train_size and test_size must be positive")


def load_csv(path: str) -> Dataset:
    """Read a dataset from CSV.

    The first row is the header; the last column must be named ``class``
    and hold 0/1 labels, every other column is a numeric covariate.
    Errors name the offending row and column (1-based, header = row 1).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise DataError(f"{path}: header must name at least one covariate and 'class'")
        if header[-1] != "class":
            raise DataError(f"{path}: last header column must be named 'class', got {header[-1]!r}")
        names = tuple(header[:-1])
        k = len(names)
        xs: list[list[float]] = []
        ys: list[int] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != k + 1:
                raise DataError(f"{path}: row {row_no}: expected {k + 1} fields, got {len(row)}")
            vals = []
            for col, cell in enumerate(row[:-1]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {row_no}, column {names[col]!r}: "
                        f"non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {row_no}, column {names[col]!r}: non-finite value"
                    )
                vals.append(v)
            cell = row[-1].strip()
            if cell not in ("0", "1"):
                raise DataError(f"{path}: row {row_no}, column 'class': value {cell!r} not in {{0, 1}}")
            xs.append(vals)
            ys.append(int(cell))
    if not xs:
        raise DataError(f"{path}: no data rows")
    return Dataset(names, np.array(xs), np.array(ys))


def save_csv(d: Dataset, path: str) -> None:
    """Write a dataset in the format accepted by :func:`load_csv`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.covariate_names) + ["class"])
        for row, label in zip(d.X, d.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Draw disjoint train/test subsets, matching the source prevalence.

    The class-1 count of each part is the source prevalence times the part
    size, rounded half up; the train part is forced to contain at least one
    row of each class (a one-class training set cannot be fitted).
    Deterministic given ``spec.seed``; rows keep their source order.
    """
    if spec.train_size + spec.test_size > d.n:
        raise DataError(
            f"train_size + test_size = {spec.train_size + spec.test_size} "
            f"exceeds the {d.n} available rows"
        )
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(d.n)
        tr = np.sort(perm[: spec.train_size])
        te = np.sort(perm[spec.train_size : spec.train_size + spec.test_size])
        return d.subset(tr), d.subset(te)

    ones = np.flatnonzero(d.y == 1)
    zeros = np.flatnonzero(d.y == 0)
    if len(ones) == 0 or len(zeros) == 0:
        raise DataError("both classes must be present to stratify")

    n1_train = _round_half_up(spec.train_size * d.prevalence)
    n1_train = min(max(n1_train, 1), spec.train_size - 1)
    n1_test = _round_half_up(spec.test_size * d.prevalence)
    n1_test = min(n1_test, spec.test_size)
    # Rounding both parts up can overshoot the available rows by one; the
    # test part absorbs the correction since only train needs both classes.
    n1_test = min(n1_test, len(ones) - n1_train)
    n0_train = spec.train_size - n1_train
    n0_test = spec.test_size - n1_test
    if n1_train > len(ones) or n1_test < 0:
        raise DataError(
            f"cannot place {n1_train} class-1 training rows: only {len(ones)} available"
        )
    if n0_train + n0_test > len(zeros):
        raise DataError(
            f"cannot place {n0_train + n0_test} class-0 rows: only {len(zeros)} available"
        )

    ones_perm = rng.permutation(ones)
    zeros_perm = rng.permutation(zeros)
    train_idx = np.sort(np.concatenate([ones_perm[:n1_train], zeros_perm[:n0_train]]))
    test_idx = np.sort(
        np.concatenate(
            [
                ones_perm[n1_train : n1_train + n1_test],
                zeros_perm[n0_train : n0_train + n0_test],
            ]
        )
    )
    return d.subset(train_idx), d.subset(test_idx)


def generate_synthetic(
    k: int,
    n: int,
    true_coeffs: np.ndarray,
    active_mask: set[int] | frozenset[int],
    seed: int,
    covariate_names: tuple[str, ...] | None = None,
) -> Dataset:
    """Generate presence/absence data from a known logistic model.

    Covariates are i.i.d. standard normal; the class is Bernoulli with
    logit ``b0 + sum_{j in active_mask} b_j x_j`` (1-based covariate
    indices; coefficients outside the mask are ignored).
    """
    if k < 1:
        raise DataError("k must be at least 1")
    if n < 1:
        raise DataError("n must be at least 1")
    coeffs = np.asarray(true_coeffs, dtype=np.float64)
    if coeffs.shape != (k + 1,):
        raise DataError(f"true_coeffs must have length k + 1 = {k + 1}")
    active = sorted(active_mask)
    if active and (active[0] < 1 or active[-1] > k):
        raise DataError("active_mask indices must lie in 1..k")
    if covariate_names is None:
        covariate_names = tuple(f"x{j}" for j in range(1, k + 1))

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, k))
    eta = np.full(n, coeffs[0])
    for j in active:
        eta += coeffs[j] * X[:, j - 1]
    # stable sigmoid (logit module is intentionally not imported here)
    p = np.where(eta >= 0, 1.0 / (1.0 + np.exp(-np.abs(eta))), np.exp(-np.abs(eta)) / (1.0 + np.exp(-np.abs(eta))))
    y = (rng.random(n) < p).astype(np.int64)
    return Dataset(covariate_names, X, y)
