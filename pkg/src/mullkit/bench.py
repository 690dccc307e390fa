"""Benchmark runner: per-replicate simulate/tune/fit/score over the paper's
schemes, with mean/median/standard-error aggregation and CSV / aligned-text
rendering.

Each replicate r draws its training set from stream (r, 0) and a fresh test
set of the same size from stream (r, 1), tunes (lambda, gamma, threshold) by
cross-validation on the noisy training features, refits at the selected
parameters, and scores support recovery against the true coefficients plus
prediction on the test set.  The no-correction baseline is the analog solver
with its gamma forced to zero (and, by default, no thresholding step).
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
import traceback
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .analog import AnalogConfig, spg_fit
from .data import Dataset, Task, standardize, unstandardize_coefficients
from .losses import (LossKind, LossSpec, conquer, default_bandwidth,
                     logistic, smooth_hinge)
from .muc import MucConfig, hybrid_fit, muc_fit
from .selection import (CvGrid, check_loss, classification_metrics, cv_tune,
                        gamma_base, lambda_base, predict_labels,
                        predict_quantile, support_metrics, threshold_estimate)
from .simulate import SchemeKind, SchemeSpec, gen_scheme

log = logging.getLogger(__name__)

METHODS = ("muc", "analog", "hybrid", "baseline")

# CV grids calibrated on the reduced-scale schemes; multipliers scale
# sqrt(log p / n) for lambda and d2_max * sqrt(log n / n) for gamma.  The
# smoothed-quantile loss runs at a lower lambda scale (its d2_max is large and
# its gradient coordinates small), hence the separate conquer grids.
DEFAULT_GRIDS = {
    "analog": CvGrid(lambda_multipliers=(0.25, 0.5, 1.0),
                     gamma_multipliers=(1.0, 2.0),
                     threshold_fractions=(0.0, 0.1, 0.2, 0.3)),
    "muc": CvGrid(lambda_multipliers=(0.5, 0.75),
                  gamma_multipliers=(1.0,),
                  threshold_fractions=(0.0, 0.1, 0.2, 0.3)),
    "analog-conquer": CvGrid(
        lambda_multipliers=(0.1, 0.2, 0.35),
        gamma_multipliers=(0.0, 0.02, 0.05),
        threshold_fractions=tuple(round(0.05 * i, 2) for i in range(1, 11))),
    "muc-conquer": CvGrid(lambda_multipliers=(0.1, 0.2, 0.35),
                          gamma_multipliers=(0.0, 0.02),
                          threshold_fractions=(0.0, 0.1, 0.2, 0.3)),
}

METRIC_COLUMNS = ("fn", "fp", "l1_error", "accuracy", "f1", "check")


@dataclass(frozen=True)
class BenchPlan:
    scheme: SchemeSpec
    methods: tuple = ("analog",)
    loss: str = "logistic"              # logistic | smooth-hinge | conquer
    replicates: int = 10
    taus: Optional[tuple] = None        # extra quantile settings (QUANTILE_HET)
    grid: Optional[CvGrid] = None
    keep: int = 1000
    jobs: int = 1
    sigma2: float = 4.0
    baseline_threshold: bool = False
    max_failure_fraction: float = 0.2

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be non-empty")
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"unknown method '{m}' (choose from {METHODS})")
        object.__setattr__(self, "methods", methods)
        if self.taus is not None:
            object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))


class BenchError(RuntimeError):
    pass


def resolve_loss(name: str, task: Task, n: int, p: int, sigma2: float = 4.0,
                 tau: float = 0.5, bandwidth: Optional[float] = None) -> LossSpec:
    if name == "logistic":
        return logistic()
    if name in ("smooth-hinge", "smhinge"):
        return smooth_hinge(sigma2)
    if name == "conquer":
        return conquer(tau, bandwidth if bandwidth is not None
                       else default_bandwidth(tau, n, p))
    raise ValueError(f"unknown loss '{name}'")


def grid_for(method: str, plan_grid: Optional[CvGrid],
             baseline_threshold: bool = False, conquer_loss: bool = False) -> CvGrid:
    solver = "analog" if method == "baseline" else method
    key = f"{solver}-conquer" if conquer_loss else solver
    base = plan_grid if plan_grid is not None else DEFAULT_GRIDS[key]
    if method == "baseline":
        # the no-correction baseline: gamma forced to zero and (by default)
        # no thresholding step, mirroring an off-the-shelf L1 fit
        return replace(base, gamma_multipliers=(0.0,),
                       threshold_fractions=(base.threshold_fractions
                                            if baseline_threshold else (0.0,)))
    return base


def fit_tuned(data: Dataset, spec: LossSpec, method: str, grid: CvGrid,
              keep: int = 1000):
    """CV-tune then refit on the full training data; returns
    (thresholded standardized coefficients, fit result, best row)."""
    solver = "analog" if method == "baseline" else method
    if solver == "hybrid":
        is_conquer = spec.kind == LossKind.CONQUER
        a_best, _ = cv_tune(data, spec, "analog",
                            grid_for("analog", None, conquer_loss=is_conquer))
        acfg = AnalogConfig(lambda2=a_best["lambda"], gamma2=a_best["gamma"],
                            use_intercept=data.task == Task.QUANTILE)
        screen = spg_fit(data, spec, acfg)
        order = np.argsort(-np.abs(screen.coefficients.beta), kind="stable")
        keep_idx = np.sort(order[:min(keep, data.p)])
        sub = replace(data, features=data.features[:, keep_idx],
                      column_scales=None, feature_names=None,
                      standardized=data.standardized)
        best, _ = cv_tune(sub, spec, "muc",
                          grid_for("muc", grid, conquer_loss=is_conquer))
        fit = hybrid_fit(data, spec, acfg,
                         MucConfig(lam=best["lambda"], gamma=best["gamma"]),
                         keep=min(keep, data.p))
        coef = threshold_estimate(fit.coefficients, best["threshold"])
        return coef, fit, best
    best, _ = cv_tune(data, spec, solver, grid)
    if solver == "analog":
        cfg = AnalogConfig(lambda2=best["lambda"], gamma2=best["gamma"])
        fit = spg_fit(data, spec, cfg)
    else:
        fit = muc_fit(data, spec, MucConfig(lam=best["lambda"],
                                            gamma=best["gamma"]))
    coef = threshold_estimate(fit.coefficients, best["threshold"])
    return coef, fit, best


def run_replicate(scheme: SchemeSpec, method: str, loss_name: str,
                  replicate: int, grid: CvGrid, keep: int = 1000,
                  sigma2: float = 4.0) -> dict:
    """One train/tune/fit/score pass; returns the metric row."""
    train = gen_scheme(scheme, (replicate, 0))
    test = gen_scheme(scheme, (replicate, 1))
    data = standardize(train.dataset())
    spec = resolve_loss(loss_name, scheme.task, data.n, data.p, sigma2=sigma2,
                        tau=scheme.tau if scheme.tau is not None else 0.5)
    coef_std, fit, best = fit_tuned(data, spec, method, grid, keep=keep)
    coef = unstandardize_coefficients(coef_std, data)
    fn, fp, l1_err = support_metrics(coef.beta, train.truth.beta)
    row = {
        "replicate": replicate,
        "fn": float(fn),
        "fp": float(fp),
        "l1_error": l1_err,
        "converged": bool(fit.converged),
        "lambda": best["lambda"],
        "gamma": best["gamma"],
        "threshold": best["threshold"],
    }
    if scheme.task == Task.BINARY:
        pred = predict_labels(spec, test.w, coef)
        acc, f1 = classification_metrics(pred, test.y)
        row["accuracy"] = acc
        row["f1"] = f1
    else:
        pred = predict_quantile(test.w, coef)
        row["check"] = check_loss(pred, test.y, scheme.tau)
    return row


def _replicate_task(args):
    replicate = args[3]
    try:
        return replicate, run_replicate(*args), None
    except Exception:
        return replicate, None, traceback.format_exc()


def _aggregate(rows: list[dict]) -> dict:
    out = {}
    for key in METRIC_COLUMNS:
        vals = np.array([r[key] for r in rows if key in r], dtype=float)
        if vals.size == 0:
            continue
        out[f"{key}_mean"] = float(np.mean(vals))
        out[f"{key}_median"] = float(np.median(vals))
        out[f"{key}_se"] = (float(np.std(vals, ddof=1) / math.sqrt(vals.size))
                            if vals.size > 1 else float("nan"))
    out["n_converged"] = sum(1 for r in rows if r["converged"])
    return out


def run_bench(plan: BenchPlan) -> list[dict]:
    """Returns one aggregated row per (setting, method); raises BenchError when
    more than max_failure_fraction of a cell's replicates fail."""
    settings = [plan.scheme]
    if plan.taus and plan.scheme.scheme == SchemeKind.QUANTILE_HET:
        settings = [replace(plan.scheme, tau=t) for t in plan.taus]
    rows = []
    for scheme in settings:
        for method in plan.methods:
            grid = grid_for(method, plan.grid, plan.baseline_threshold,
                            conquer_loss=plan.loss == "conquer")
            tasks = [(scheme, method, plan.loss, r, grid, plan.keep, plan.sigma2)
                     for r in range(plan.replicates)]
            results, failures = [], []
            if plan.jobs > 1 and plan.replicates > 1:
                with concurrent.futures.ProcessPoolExecutor(plan.jobs) as pool:
                    for idx, row, err in pool.map(_replicate_task, tasks):
                        (failures if err else results).append((idx, row or err))
            else:
                for t in tasks:
                    idx, row, err = _replicate_task(t)
                    (failures if err else results).append((idx, row or err))
            for idx, err in failures:
                log.warning("replicate %d of %s/%s failed:\n%s",
                            idx, scheme.scheme.value, method, err)
            if len(failures) > plan.max_failure_fraction * plan.replicates:
                raise BenchError(
                    f"{len(failures)}/{plan.replicates} replicates failed for "
                    f"{scheme.scheme.value}/{method}")
            results.sort(key=lambda pair: pair[0])
            per_rep = [row for _, row in results]
            agg = _aggregate(per_rep)
            rows.append({
                "scheme": scheme.scheme.value,
                "method": method,
                "loss": plan.loss,
                "n": scheme.n,
                "p": scheme.p,
                "sigma_u": scheme.sigma_u,
                "tau": scheme.tau if scheme.tau is not None else "",
                "noise": (scheme.noise_dist
                          if scheme.scheme == SchemeKind.QUANTILE_HET else ""),
                "replicates": len(per_rep),
                "failed": len(failures),
                **agg,
                "per_replicate": per_rep,
            })
    return rows


def render_csv(rows: list[dict]) -> str:
    """Long format: one line per (setting, method, aggregation statistic)."""
    header = ["scheme", "method", "loss", "n", "p", "sigma_u", "tau", "noise",
              "replicates", "failed", "statistic"] + list(METRIC_COLUMNS)
    lines = [",".join(header)]
    for row in rows:
        for stat in ("mean", "median", "se"):
            cells = [str(row[k]) for k in header[:10]] + [stat]
            for metric in METRIC_COLUMNS:
                val = row.get(f"{metric}_{stat}", "")
                cells.append(f"{val:.6g}" if val != "" else "")
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_text(rows: list[dict]) -> str:
    """Aligned table, mean (se) with median in brackets."""
    header = ["scheme", "method", "setting", "FN", "FP", "L1error",
              "Accuracy", "F1", "Check"]
    out = [header]
    for row in rows:
        setting = f"n={row['n']} p={row['p']} su={row['sigma_u']}"
        if row["tau"] != "":
            setting += f" tau={row['tau']} {row['noise']}"
        cells = [row["scheme"], row["method"], setting]
        for metric in METRIC_COLUMNS:
            mean = row.get(f"{metric}_mean")
            med = row.get(f"{metric}_median")
            cells.append("" if mean is None else f"{mean:.3g} [{med:.3g}]")
        out.append(cells)
    widths = [max(len(r[i]) for r in out) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
        for r in out) + "\n"
