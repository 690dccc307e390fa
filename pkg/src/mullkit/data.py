"""Dataset and coefficient containers shared by every solver and the CLI.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be passed freely across worker processes.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

STANDARDIZED_ATOL = 1e-8


class Task(enum.Enum):
    BINARY = "binary"
    QUANTILE = "quantile"


def _frozen_array(values, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries are not allowed")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """A design matrix with its response.

    features has n rows (samples) and p columns (predictors); response holds
    labels for Binary tasks ({0,1}, or {-1,+1} for hinge consumers) and reals
    for Quantile tasks.  column_scales is populated by standardize() so fitted
    coefficients can be mapped back to the original column scale.
    """

    features: np.ndarray
    response: np.ndarray
    task: Task
    standardized: bool = False
    column_scales: Optional[np.ndarray] = None
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        feats = _frozen_array(self.features, ndim=2)
        resp = _frozen_array(self.response, ndim=1)
        if feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError("dataset needs at least one sample and one predictor")
        if resp.shape[0] != feats.shape[0]:
            raise ValueError(
                f"response length {resp.shape[0]} != number of samples {feats.shape[0]}"
            )
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "response", resp)
        if self.column_scales is not None:
            scales = _frozen_array(self.column_scales, ndim=1)
            if scales.shape[0] != feats.shape[1]:
                raise ValueError("column_scales length must equal p")
            object.__setattr__(self, "column_scales", scales)
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != feats.shape[1]:
                raise ValueError("feature_names length must equal p")
            object.__setattr__(self, "feature_names", names)
        if self.standardized:
            ms = np.mean(feats**2, axis=0)
            if np.max(np.abs(ms - 1.0)) > STANDARDIZED_ATOL:
                raise ValueError(
                    "standardized flag set but diag(W'W/n) deviates from 1 by "
                    f"{np.max(np.abs(ms - 1.0)):.3g}"
                )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Coefficients:
    """A coefficient vector with an optional unpenalized intercept."""

    beta: np.ndarray
    intercept: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen_array(self.beta, ndim=1))
        if self.intercept is not None:
            itc = float(self.intercept)
            if not math.isfinite(itc):
                raise ValueError("intercept must be finite")
            object.__setattr__(self, "intercept", itc)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def nnz(self) -> int:
        """Exact count of nonzero entries (|beta_j| > 0)."""
        return int(np.count_nonzero(self.beta))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)


@dataclass(frozen=True)
class FitResult:
    """Solver output: coefficients plus certificates and diagnostics.

    feasibility_gap is always computed with the exact (non-linearized)
    gradient: max(0, ||S_w(beta)||_inf - lambda - gamma*||beta||_1).
    """

    coefficients: Coefficients
    objective: float
    iterations: int
    converged: bool
    feasibility_gap: float
    kkt_residual: Optional[float] = None
    diagnostics: dict = None

    def __post_init__(self):
        if self.diagnostics is None:
            object.__setattr__(self, "diagnostics", {})


class ZeroVarianceColumnError(ValueError):
    """Raised when a column has zero second moment and cannot be standardized."""

    def __init__(self, column: int, name: Optional[str] = None):
        self.column = column
        label = f"'{name}' (index {column})" if name else f"index {column}"
        super().__init__(
            f"column {label} has zero second moment and cannot be standardized"
        )


def standardize(data: Dataset) -> Dataset:
    """Scale each column to unit root mean square, i.e. diag(W'W/n) = 1.

    Scaling factors compose with any factors already on the dataset, so a
    coefficient fitted on the output maps back to the original scale via
    unstandardize_coefficients().
    """
    rms = np.sqrt(np.mean(data.features**2, axis=0))
    zero = np.flatnonzero(rms == 0.0)
    if zero.size:
        j = int(zero[0])
        name = data.feature_names[j] if data.feature_names else None
        raise ZeroVarianceColumnError(j, name)
    scaled = data.features / rms
    prior = data.column_scales if data.column_scales is not None else 1.0
    return replace(
        data,
        features=scaled,
        standardized=True,
        column_scales=prior * rms,
    )


def unstandardize_coefficients(coef: Coefficients, data: Dataset) -> Coefficients:
    """Map coefficients fitted on standardized columns back to raw units."""
    if data.column_scales is None:
        return coef
    return Coefficients(coef.beta / data.column_scales, coef.intercept)


def l1_norm(beta) -> float:
    """Sum of absolute values; the intercept never enters (pass beta only)."""
    arr = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("l1_norm requires finite entries")
    return float(np.sum(np.abs(arr)))


def load_csv(path, response_column: str = "y", task: Optional[Task] = None) -> Dataset:
    """Read a dataset from CSV: header row, response in a named column,
    remaining columns are features in file order.  Missing values are
    rejected.  task=None infers Binary when the response is a subset of
    {0, 1} or {-1, 1}, Quantile otherwise.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response_column not in header:
            raise ValueError(f"{path}: no column named '{response_column}'")
        y_idx = header.index(response_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != y_idx)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            vals = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "" or cell.upper() in ("NA", "NAN"):
                    raise ValueError(f"{path}:{lineno}: missing value in '{name}'")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: non-numeric value '{cell}' in '{name}'"
                    ) from None
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    y = table[:, y_idx]
    X = np.delete(table, y_idx, axis=1)
    if task is None:
        labels = set(np.unique(y))
        if labels <= {0.0, 1.0} or labels <= {-1.0, 1.0}:
            task = Task.BINARY
        else:
            task = Task.QUANTILE
    return Dataset(X, y, task, feature_names=feature_names)
