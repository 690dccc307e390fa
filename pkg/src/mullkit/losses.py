"""Lipschitz loss family: logistic, smooth hinge, and the smoothed quantile
(conquer) loss, with first/second derivatives and their bound constants.

Conventions: the loss is f(t; y) with t the linear predictor.  Logistic labels
are {0,1}; smooth hinge labels are {-1,+1} (consumers holding {0,1} labels are
remapped by encode_labels); the conquer loss takes real responses and is the
check function convolved with a scaled kernel (Gaussian by default, uniform as
an alternative).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, ndtr

from .data import Coefficients, Dataset

SQRT_2PI = math.sqrt(2.0 * math.pi)

CURVATURE_CAP_DEFAULT = 2000


class LossKind(enum.Enum):
    LOGISTIC = "logistic"
    SMOOTH_HINGE = "smooth-hinge"
    CONQUER = "conquer"


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    sigma2: float = 4.0          # smooth hinge smoothing
    tau: float = 0.5             # conquer quantile level
    bandwidth: float = 0.5       # conquer kernel bandwidth
    kernel: str = "gaussian"     # conquer kernel: gaussian | uniform

    def __post_init__(self):
        if self.kind == LossKind.SMOOTH_HINGE and not self.sigma2 > 0:
            raise ValueError("smooth hinge requires sigma2 > 0")
        if self.kind == LossKind.CONQUER:
            if not 0.0 < self.tau < 1.0:
                raise ValueError("conquer requires 0 < tau < 1")
            if not self.bandwidth > 0:
                raise ValueError("conquer requires bandwidth > 0")
            if self.kernel not in ("gaussian", "uniform"):
                raise ValueError(f"unknown conquer kernel '{self.kernel}'")


def logistic() -> LossSpec:
    return LossSpec(LossKind.LOGISTIC)


def smooth_hinge(sigma2: float = 4.0) -> LossSpec:
    return LossSpec(LossKind.SMOOTH_HINGE, sigma2=sigma2)


def conquer(tau: float, bandwidth: Optional[float] = None,
            n: Optional[int] = None, p: Optional[int] = None,
            kernel: str = "gaussian") -> LossSpec:
    """Smoothed quantile loss; bandwidth=None uses default_bandwidth(tau, n, p)."""
    if bandwidth is None:
        if n is None or p is None:
            raise ValueError("conquer needs an explicit bandwidth or (n, p)")
        bandwidth = default_bandwidth(tau, n, p)
    return LossSpec(LossKind.CONQUER, tau=tau, bandwidth=bandwidth, kernel=kernel)


def default_bandwidth(tau: float, n: int, p: int) -> float:
    """max(0.05, sqrt(tau(1-tau)) * (log p / n)^(1/4))."""
    return max(0.05, math.sqrt(tau * (1.0 - tau)) * (math.log(p) / n) ** 0.25)


def encode_labels(spec: LossSpec, y: np.ndarray) -> np.ndarray:
    """Validate (and for the hinge, remap {0,1} -> {-1,+1}) response values."""
    y = np.asarray(y, dtype=float)
    if spec.kind == LossKind.LOGISTIC:
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("logistic loss expects labels in {0, 1}")
        return y
    if spec.kind == LossKind.SMOOTH_HINGE:
        if np.all((y == 0.0) | (y == 1.0)):
            return 2.0 * y - 1.0
        if not np.all((y == -1.0) | (y == 1.0)):
            raise ValueError("smooth hinge expects labels in {-1, +1} (or {0, 1})")
        return y
    if not np.all(np.isfinite(y)):
        raise ValueError("conquer loss expects finite real responses")
    return y


def _check_labels(spec: LossSpec, y):
    y = np.asarray(y, dtype=float)
    if spec.kind == LossKind.LOGISTIC:
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("logistic loss expects labels in {0, 1}")
    elif spec.kind == LossKind.SMOOTH_HINGE:
        if not np.all((y == -1.0) | (y == 1.0)):
            raise ValueError("smooth hinge expects labels in {-1, +1}")
    else:
        if not np.all(np.isfinite(y)):
            raise ValueError("conquer loss expects finite real responses")
    return y


def _gauss_pdf(x):
    return np.exp(-0.5 * x * x) / SQRT_2PI


def _conquer_value(spec, u):
    tau, h = spec.tau, spec.bandwidth
    if spec.kernel == "gaussian":
        # l_h(u) = h*phi(u/h) + u*(tau - Phi(-u/h))
        s = u / h
        return h * _gauss_pdf(s) + u * (tau - ndtr(-s))
    inside = np.abs(u) <= h
    val = np.where(u >= 0, tau * u, (tau - 1.0) * u)
    return np.where(inside, (tau - 0.5) * u + (u * u + h * h) / (4.0 * h), val)


def _conquer_d1(spec, u):
    # derivative of l_h with respect to u
    tau, h = spec.tau, spec.bandwidth
    if spec.kernel == "gaussian":
        return tau - ndtr(-u / h)
    lo, hi = tau - 1.0, tau
    return np.clip((tau - 0.5) + u / (2.0 * h), lo, hi)


def _conquer_d2(spec, u):
    tau, h = spec.tau, spec.bandwidth
    if spec.kernel == "gaussian":
        return _gauss_pdf(u / h) / h
    return np.where(np.abs(u) <= h, 1.0 / (2.0 * h), 0.0)


def loss_value(spec: LossSpec, t, y):
    """f(t; y), stable over the full float range (softplus form for logistic)."""
    y = _check_labels(spec, y)
    t = np.asarray(t, dtype=float)
    if spec.kind == LossKind.LOGISTIC:
        out = -y * t + np.logaddexp(0.0, t)
    elif spec.kind == LossKind.SMOOTH_HINGE:
        z = 1.0 - y * t
        out = 0.5 * z + 0.5 * np.sqrt(z * z + spec.sigma2)
    else:
        out = _conquer_value(spec, y - t)
    return out if out.ndim else float(out)


def loss_d1(spec: LossSpec, t, y):
    """d f / d t."""
    y = _check_labels(spec, y)
    t = np.asarray(t, dtype=float)
    if spec.kind == LossKind.LOGISTIC:
        out = expit(t) - y
    elif spec.kind == LossKind.SMOOTH_HINGE:
        z = 1.0 - y * t
        out = -0.5 * y * (1.0 + z / np.sqrt(z * z + spec.sigma2))
    else:
        out = -_conquer_d1(spec, y - t)
    return out if out.ndim else float(out)


def loss_d2(spec: LossSpec, t, y):
    """d^2 f / d t^2; nonnegative and bounded by d2_max(spec)."""
    y = _check_labels(spec, y)
    t = np.asarray(t, dtype=float)
    if spec.kind == LossKind.LOGISTIC:
        s = expit(t)
        out = s * (1.0 - s) + 0.0 * y
    elif spec.kind == LossKind.SMOOTH_HINGE:
        z = 1.0 - y * t
        out = 0.5 * spec.sigma2 / np.power(z * z + spec.sigma2, 1.5)
    else:
        out = _conquer_d2(spec, y - t)
    return out if out.ndim else float(out)


def lipschitz_const(spec: LossSpec) -> float:
    if spec.kind == LossKind.CONQUER:
        return max(spec.tau, 1.0 - spec.tau)
    return 1.0


def d2_max(spec: LossSpec) -> float:
    """Upper bound on |d^2 f|: 1/4 (logistic), 1/(2*sigma) (smooth hinge),
    kernel peak / h (conquer)."""
    if spec.kind == LossKind.LOGISTIC:
        return 0.25
    if spec.kind == LossKind.SMOOTH_HINGE:
        return 0.5 / math.sqrt(spec.sigma2)
    if spec.kernel == "gaussian":
        return 1.0 / (spec.bandwidth * SQRT_2PI)
    return 0.5 / spec.bandwidth


def _margins(data: Dataset, coef: Coefficients) -> np.ndarray:
    if coef.p != data.p:
        raise ValueError(f"coefficient length {coef.p} != dataset p {data.p}")
    t = data.features @ coef.beta
    if coef.intercept is not None:
        t = t + coef.intercept
    return t


def empirical_loss(data: Dataset, spec: LossSpec, coef: Coefficients) -> float:
    """(1/n) sum_i f(<w_i, beta> + intercept; y_i)."""
    y = encode_labels(spec, data.response)
    t = _margins(data, coef)
    # fixed sequential accumulation for bit-reproducibility
    return float(np.add.reduce(loss_value(spec, t, y)) / data.n)


def gradient(data: Dataset, spec: LossSpec, coef: Coefficients,
             with_intercept: bool = False):
    """Gradient of the empirical loss w.r.t. beta: (1/n) sum_i df_i * w_i.

    with_intercept=True also returns the intercept derivative (1/n) sum_i df_i.
    """
    y = encode_labels(spec, data.response)
    d1 = loss_d1(spec, _margins(data, coef), y)
    g = data.features.T @ d1 / data.n
    if with_intercept:
        return g, float(np.add.reduce(d1) / data.n)
    return g


class CurvatureCapError(ValueError):
    pass


def curvature_matrix(data: Dataset, spec: LossSpec, coef: Coefficients,
                     cap: int = CURVATURE_CAP_DEFAULT) -> np.ndarray:
    """(1/n) sum_i d2f_i * w_i w_i', the linearization curvature at coef.

    Dense p x p; refuses p beyond `cap` (use the analog solver or the hybrid
    screen-then-solve pipeline for wider problems).
    """
    if data.p > cap:
        raise CurvatureCapError(
            f"p={data.p} exceeds the dense curvature cap {cap}; "
            "use the analog solver or the hybrid pipeline"
        )
    y = encode_labels(spec, data.response)
    d2 = loss_d2(spec, _margins(data, coef), y)
    M = (data.features.T * d2) @ data.features / data.n
    return 0.5 * (M + M.T)
