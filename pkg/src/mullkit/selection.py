"""Thresholded feature selection, cross-validation tuning, and the
evaluation metrics used by the benchmark runner.

Tuning parameters are searched as multipliers of the theory scales
sqrt(log p / n) for lambda and d2_max * sqrt(log n / n) for gamma, jointly
with the threshold fraction; the CV criterion is the held-out
misclassification rate (Binary) or mean check loss (Quantile), evaluated on
the thresholded coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analog import AnalogConfig, spg_fit
from .data import Coefficients, Dataset, Task, l1_norm, standardize
from .losses import LossKind, LossSpec, d2_max
from .muc import MucConfig, muc_fit


def threshold_estimate(coef: Coefficients, fraction: float) -> Coefficients:
    """Zero every beta_j with |beta_j| <= fraction * max_k |beta_k|.

    The intercept is untouched; fraction 0 keeps all nonzeros.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must be in [0, 1)")
    peak = float(np.max(np.abs(coef.beta))) if coef.p else 0.0
    if peak == 0.0:
        return coef
    cutoff = fraction * peak
    beta = np.where(np.abs(coef.beta) <= cutoff, 0.0, coef.beta)
    return Coefficients(beta, coef.intercept)


def classification_metrics(pred_labels, true_labels) -> tuple[float, float]:
    """(accuracy, f1) with label 1 as the positive class; f1 is 0 when
    precision + recall is 0."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise ValueError("prediction and truth lengths differ")
    accuracy = float(np.mean(pred == true))
    tp = float(np.sum((pred == 1) & (true == 1)))
    fp = float(np.sum((pred == 1) & (true != 1)))
    fn = float(np.sum((pred != 1) & (true == 1)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return accuracy, f1


def support_metrics(beta_hat, beta_star) -> tuple[int, int, float]:
    """(false negatives, false positives, L1 estimation error); exact zeros
    define the supports, intercepts never enter."""
    bh = np.asarray(beta_hat if not isinstance(beta_hat, Coefficients) else beta_hat.beta,
                    dtype=float)
    bs = np.asarray(beta_star if not isinstance(beta_star, Coefficients) else beta_star.beta,
                    dtype=float)
    if bh.shape != bs.shape:
        raise ValueError("coefficient lengths differ")
    fn = int(np.sum((bs != 0) & (bh == 0)))
    fp = int(np.sum((bs == 0) & (bh != 0)))
    return fn, fp, float(np.sum(np.abs(bh - bs)))


def check_loss(pred, true, tau: float) -> float:
    """Mean check-function error: (1/n) sum rho_tau(y_i - yhat_i)."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if pred.shape != true.shape:
        raise ValueError("prediction and truth lengths differ")
    u = true - pred
    return float(np.mean(u * (tau - (u < 0))))


def predict_labels(spec: LossSpec, features: np.ndarray,
                   coef: Coefficients) -> np.ndarray:
    """Classify by the sign of the linear predictor; labels returned as {0,1}."""
    t = features @ coef.beta
    if coef.intercept is not None:
        t = t + coef.intercept
    return (t > 0).astype(float)


def predict_quantile(features: np.ndarray, coef: Coefficients) -> np.ndarray:
    t = features @ coef.beta
    if coef.intercept is not None:
        t = t + coef.intercept
    return t


@dataclass(frozen=True)
class CvGrid:
    lambda_multipliers: tuple = (0.5, 1.0, 2.0)
    gamma_multipliers: tuple = (0.0, 1.0)
    threshold_fractions: tuple = (0.0, 0.1, 0.2, 0.3)
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambda_multipliers)
        gams = tuple(float(v) for v in self.gamma_multipliers)
        fracs = tuple(float(v) for v in self.threshold_fractions)
        if not lams or not gams or not fracs:
            raise ValueError("grids must be non-empty")
        if any(v <= 0 for v in lams):
            raise ValueError("lambda multipliers must be positive")
        if any(v < 0 for v in gams):
            raise ValueError("gamma multipliers must be nonnegative")
        if any(not 0 <= v < 1 for v in fracs):
            raise ValueError("threshold fractions must be in [0, 1)")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        object.__setattr__(self, "lambda_multipliers", lams)
        object.__setattr__(self, "gamma_multipliers", gams)
        object.__setattr__(self, "threshold_fractions", fracs)


def parse_grid_text(text: str) -> CvGrid:
    """Parse the flat key=list grid format, e.g.

        lambda_multipliers=0.5,1,2
        gamma_multipliers=0,1
        threshold_fractions=0,0.1
        folds=5
        seed=7
    """
    kwargs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"grid line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        items = [v.strip() for v in value.split(",") if v.strip()]
        if key in ("folds", "seed"):
            kwargs[key] = int(items[0])
        elif key in ("lambda_multipliers", "gamma_multipliers", "threshold_fractions"):
            kwargs[key] = tuple(float(v) for v in items)
        else:
            raise ValueError(f"grid line {lineno}: unknown key '{key}'")
    return CvGrid(**kwargs)


def lambda_base(n: int, p: int) -> float:
    return math.sqrt(math.log(p) / n)


def gamma_base(spec: LossSpec, n: int) -> float:
    return d2_max(spec) * math.sqrt(math.log(n) / n)


def make_folds(n: int, folds: int, seed: int,
               labels: Optional[np.ndarray] = None) -> list[np.ndarray]:
    """Near-equal folds from a seeded shuffle; stratified when labels given."""
    if folds > n:
        raise ValueError("more folds than samples")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if labels is None:
        perm = rng.permutation(n)
        return [np.sort(part) for part in np.array_split(perm, folds)]
    buckets = [[] for _ in range(folds)]
    pos = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        for j, i in enumerate(idx):
            buckets[(pos + j) % folds].append(i)
        pos += idx.size
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def _criterion(task: Task, spec: LossSpec, coef: Coefficients,
               features: np.ndarray, response: np.ndarray) -> float:
    if task == Task.BINARY:
        pred = predict_labels(spec, features, coef)
        return float(np.mean(pred != response))
    return check_loss(predict_quantile(features, coef), response, spec.tau)


def _fit_method(method: str, train: Dataset, spec: LossSpec, lam: float,
                gamma: float, analog_template: AnalogConfig,
                muc_template: Optional[MucConfig]):
    from dataclasses import replace
    if method == "analog":
        cfg = replace(analog_template, lambda2=lam, gamma2=gamma)
        return spg_fit(train, spec, cfg)
    if method == "muc":
        template = muc_template if muc_template is not None else MucConfig(lam=lam)
        cfg = replace(template, lam=lam, gamma=gamma)
        return muc_fit(train, spec, cfg)
    raise ValueError(f"cv_tune supports methods 'analog' and 'muc', not '{method}'")


def cv_tune(data: Dataset, spec: LossSpec, method: str, grid: CvGrid,
            analog_template: Optional[AnalogConfig] = None,
            muc_template: Optional[MucConfig] = None):
    """Joint CV over (lambda, gamma, threshold fraction).

    Folds come from a seeded shuffle (stratified by label for Binary tasks);
    each fold's training slice is re-standardized and the held-out features
    are scaled with the training factors.  Grid points whose fit fails score
    +inf.  Returns (best_row, table) where ties go to larger lambda, then
    larger gamma, then larger threshold.
    """
    if method not in ("analog", "muc"):
        raise ValueError(f"cv_tune supports methods 'analog' and 'muc', not '{method}'")
    if grid.folds > data.n:
        raise ValueError("more folds than samples")
    lam0 = lambda_base(data.n, data.p)
    gam0 = gamma_base(spec, data.n)
    if analog_template is None:
        analog_template = AnalogConfig(lambda2=lam0)
    labels = data.response if data.task == Task.BINARY else None
    folds = make_folds(data.n, grid.folds, grid.seed, labels)

    fracs = grid.threshold_fractions
    table = []
    for lm in grid.lambda_multipliers:
        for gm in grid.gamma_multipliers:
            scores = np.zeros((grid.folds, len(fracs)))
            failures = 0
            errors = []
            for k, test_idx in enumerate(folds):
                train_idx = np.setdiff1d(np.arange(data.n), test_idx)
                try:
                    train = standardize(Dataset(
                        data.features[train_idx], data.response[train_idx],
                        data.task))
                    fit = _fit_method(method, train, spec, lm * lam0, gm * gam0,
                                      analog_template, muc_template)
                    test_X = data.features[test_idx] / train.column_scales
                    test_y = data.response[test_idx]
                    for j, frac in enumerate(fracs):
                        thr = threshold_estimate(fit.coefficients, frac)
                        scores[k, j] = _criterion(data.task, spec, thr,
                                                  test_X, test_y)
                except Exception as exc:   # grid point failure, not a crash
                    scores[k, :] = np.inf
                    failures += 1
                    errors.append(str(exc))
            mean_scores = scores.mean(axis=0)
            for j, frac in enumerate(fracs):
                table.append({
                    "lambda_multiplier": lm,
                    "gamma_multiplier": gm,
                    "threshold": frac,
                    "lambda": lm * lam0,
                    "gamma": gm * gam0,
                    "criterion": float(mean_scores[j]),
                    "failed_folds": failures,
                    "error": errors[0] if errors else "",
                })
    best = min(table, key=lambda r: (r["criterion"], -r["lambda_multiplier"],
                                     -r["gamma_multiplier"], -r["threshold"]))
    return best, table
