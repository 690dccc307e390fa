"""Feasible-set (matrix-uncertainty) estimators: minimize ||beta||_1 over

    { beta : ||S_w(beta)||_inf <= lambda + gamma*||beta||_1 }

(gamma = 0 recovers the noiseless feasible set).  Solved by iterative
linearization: at each outer step the gradient is replaced by its first-order
expansion Sigma_m*beta + nu_m and the resulting problem is a linear program in
the positive/negative parts of beta.  Includes the screen-then-solve hybrid
pipeline for p beyond the dense-curvature cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .analog import AnalogConfig, spg_fit
from .data import Coefficients, Dataset, FitResult, Task, l1_norm
from .losses import (CURVATURE_CAP_DEFAULT, CurvatureCapError, LossSpec,
                     encode_labels, loss_d1, loss_d2)
from .lp import LinearProgram, LpStatus, solve_lp


class FeasibleSetEmptyError(RuntimeError):
    """First linearized LP infeasible: lambda too small, feasible set empty."""


@dataclass(frozen=True)
class MucConfig:
    lam: float
    gamma: float = 0.0
    max_outer_iter: int = 50
    step_tol: float = 1e-4
    init: Optional[Coefficients] = None
    warm_start: str = "analog"   # used when init is None: "analog" | "zero"
    use_intercept: Optional[bool] = None
    curvature_cap: int = CURVATURE_CAP_DEFAULT
    cert_tol: float = 1e-6
    lp_feas_tol: float = 1e-8
    lp_max_iter: Optional[int] = None

    def __post_init__(self):
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lambda and gamma must be nonnegative")
        if not self.step_tol > 0:
            raise ValueError("step_tol must be positive")
        if self.warm_start not in ("analog", "zero"):
            raise ValueError("warm_start must be 'analog' or 'zero'")


def _wants_intercept(data: Dataset, cfg: MucConfig) -> bool:
    if cfg.use_intercept is not None:
        return cfg.use_intercept
    return data.task == Task.QUANTILE


def _augmented(data: Dataset, use_itc: bool) -> np.ndarray:
    if use_itc:
        return np.hstack([data.features, np.ones((data.n, 1))])
    return data.features


def _theta(coef: Coefficients, use_itc: bool) -> np.ndarray:
    if use_itc:
        itc = coef.intercept if coef.intercept is not None else 0.0
        return np.concatenate([coef.beta, [itc]])
    return coef.beta


def _linearization(data: Dataset, spec: LossSpec, coef: Coefficients,
                   use_itc: bool, cap: int):
    """Sigma_m = (1/n) sum d2f_i x_i x_i' and nu_m = S(theta_m) - Sigma_m theta_m
    over the (possibly intercept-augmented) design."""
    if data.p > cap:
        raise CurvatureCapError(
            f"p={data.p} exceeds the dense curvature cap {cap}; "
            "use the analog solver or the hybrid pipeline"
        )
    X = _augmented(data, use_itc)
    theta = _theta(coef, use_itc)
    y = encode_labels(spec, data.response)
    t = X @ theta
    d1 = loss_d1(spec, t, y)
    d2 = loss_d2(spec, t, y)
    S = X.T @ d1 / data.n
    Sigma = (X.T * d2) @ X / data.n
    Sigma = 0.5 * (Sigma + Sigma.T)
    return Sigma, S - Sigma @ theta


def exact_gradient_gap(data: Dataset, spec: LossSpec, coef: Coefficients,
                       lam: float, gamma: float) -> float:
    """max(0, ||S_w(beta)||_inf - lambda - gamma*||beta||_1) with the exact
    (non-linearized) gradient over the augmented design."""
    use_itc = coef.intercept is not None
    X = _augmented(data, use_itc)
    y = encode_labels(spec, data.response)
    d1 = loss_d1(spec, X @ _theta(coef, use_itc), y)
    S = X.T @ d1 / data.n
    return max(0.0, float(np.max(np.abs(S))) - lam - gamma * l1_norm(coef.beta))


def build_muc_lp(data: Dataset, spec: LossSpec, beta_m: Coefficients,
                 cfg: MucConfig) -> LinearProgram:
    """Linearized subproblem at beta_m as an LP in z = (b+, b-):

        min 1'(b+ + b-)  s.t.  (Sigma - gamma*J) b+ - (Sigma + gamma*J) b- <= lam*1 - nu
                              -(Sigma + gamma*J) b+ + (Sigma - gamma*J) b- <= lam*1 + nu

    J is the all-ones matrix over penalized coordinates; with an intercept the
    extra coordinate is unpenalized (zero objective entry, zeroed J column)
    but its gradient row is still constrained.
    """
    use_itc = beta_m.intercept is not None
    Sigma, nu = _linearization(data, spec, beta_m, use_itc, cfg.curvature_cap)
    d = Sigma.shape[0]
    if cfg.gamma != 0.0:
        J = np.ones((d, d))
        if use_itc:
            J[:, d - 1] = 0.0
        plus = Sigma - cfg.gamma * J
        minus = Sigma + cfg.gamma * J
    else:
        plus = minus = Sigma
    A = np.block([[plus, -minus], [-minus, plus]])
    lam1 = np.full(d, cfg.lam)
    b = np.concatenate([lam1 - nu, lam1 + nu])
    c = np.ones(2 * d)
    if use_itc:
        c[d - 1] = 0.0
        c[2 * d - 1] = 0.0
    return LinearProgram(c, A, b)


def _default_init(data: Dataset, spec: LossSpec, cfg: MucConfig,
                  use_itc: bool) -> tuple[Coefficients, str]:
    if cfg.init is not None:
        itc = cfg.init.intercept
        if use_itc and itc is None:
            itc = 0.0
        if not use_itc:
            itc = None
        return Coefficients(cfg.init.beta, itc), "given"
    if cfg.warm_start == "analog":
        try:
            acfg = AnalogConfig(lambda2=cfg.lam, gamma2=cfg.gamma,
                                use_intercept=use_itc,
                                max_iter=2000, grad_tol=1e-5)
            fit = spg_fit(data, spec, acfg)
            return fit.coefficients, "analog"
        except Exception:
            pass
    return Coefficients(np.zeros(data.p), 0.0 if use_itc else None), "zero"


def muc_fit(data: Dataset, spec: LossSpec, cfg: MucConfig) -> FitResult:
    """Iterate linearized LPs until the step ||beta_{m+1} - beta_m||_inf drops
    below step_tol.  Feasibility is always reported against the exact
    gradient; if the L1 objective grows three outer iterations in a row the
    best exactly-feasible iterate seen so far is returned instead.
    """
    if not data.standardized:
        warnings.warn("muc_fit called on non-standardized data", stacklevel=2)
    use_itc = _wants_intercept(data, cfg)
    cur, start_kind = _default_init(data, spec, cfg, use_itc)

    def gap_of(coef):
        return exact_gradient_gap(data, spec, coef, cfg.lam, cfg.gamma)

    best = None   # (is_feasible, sort key, Coefficients, gap)

    def consider(coef, gap):
        nonlocal best
        feasible = gap <= cfg.cert_tol
        key = l1_norm(coef.beta) if feasible else gap
        if best is None or (feasible, -key) > (best[0], -best[1]):
            best = (feasible, key, coef, gap)

    consider(cur, gap_of(cur))
    l1_traj = [l1_norm(cur.beta)]
    statuses = []
    converged = False
    increase_run = 0
    iterations = 0
    message = ""

    for m in range(cfg.max_outer_iter):
        lp = build_muc_lp(data, spec, cur, cfg)
        sol = solve_lp(lp, feas_tol=cfg.lp_feas_tol,
                       max_iter=cfg.lp_max_iter)
        statuses.append(sol.status.value)
        iterations = m + 1
        if sol.status != LpStatus.OPTIMAL:
            if m == 0 and sol.status == LpStatus.INFEASIBLE:
                raise FeasibleSetEmptyError(
                    f"linearized feasible set empty at the starting point "
                    f"(lambda={cfg.lam:g} too small)"
                )
            message = f"LP {sol.status.value} at outer iteration {m}"
            break
        d = data.p + (1 if use_itc else 0)
        theta_new = sol.z[:d] - sol.z[d:]
        new = Coefficients(theta_new[:data.p],
                           float(theta_new[-1]) if use_itc else None)
        gap_new = gap_of(new)
        consider(new, gap_new)
        l1_new = l1_norm(new.beta)
        step = float(np.max(np.abs(_theta(new, use_itc) - _theta(cur, use_itc))))
        if l1_new > l1_traj[-1] + 1e-12:
            increase_run += 1
        else:
            increase_run = 0
        l1_traj.append(l1_new)
        cur = new
        if step <= cfg.step_tol:
            converged = True
            break
        if increase_run >= 3:
            message = "L1 objective increased on 3 consecutive iterations"
            cur = best[2]
            break

    final_gap = gap_of(cur)
    return FitResult(
        coefficients=cur,
        objective=l1_norm(cur.beta),
        iterations=iterations,
        converged=converged,
        feasibility_gap=final_gap,
        diagnostics={
            "l1_trajectory": l1_traj,
            "lp_statuses": statuses,
            "warm_start": start_kind,
            "message": message,
        },
    )


def hybrid_fit(data: Dataset, spec: LossSpec, analog_cfg: AnalogConfig,
               muc_cfg: MucConfig, keep: int) -> FitResult:
    """Screen with the analog fit (top `keep` coordinates by |beta_j|, ties
    toward lower column index), then run the feasible-set estimator on the
    retained columns and re-embed into length p."""
    if keep < 1:
        raise ValueError("keep must be >= 1")
    if keep > muc_cfg.curvature_cap:
        raise CurvatureCapError(
            f"keep={keep} exceeds the dense curvature cap {muc_cfg.curvature_cap}"
        )
    keep = min(keep, data.p)
    screen = spg_fit(data, spec, analog_cfg)
    order = np.argsort(-np.abs(screen.coefficients.beta), kind="stable")
    keep_idx = np.sort(order[:keep])

    sub = replace(
        data,
        features=data.features[:, keep_idx],
        column_scales=(data.column_scales[keep_idx]
                       if data.column_scales is not None else None),
        feature_names=(tuple(data.feature_names[i] for i in keep_idx)
                       if data.feature_names is not None else None),
    )
    init = muc_cfg.init
    if init is not None:
        init = Coefficients(init.beta[keep_idx], init.intercept)
    else:
        init = Coefficients(screen.coefficients.beta[keep_idx],
                            screen.coefficients.intercept)
    fit = muc_fit(sub, spec, replace(muc_cfg, init=init))

    beta_full = np.zeros(data.p)
    beta_full[keep_idx] = fit.coefficients.beta
    return FitResult(
        coefficients=Coefficients(beta_full, fit.coefficients.intercept),
        objective=fit.objective,
        iterations=fit.iterations,
        converged=fit.converged,
        feasibility_gap=fit.feasibility_gap,
        kkt_residual=fit.kkt_residual,
        diagnostics={
            **fit.diagnostics,
            "screened_indices": keep_idx.tolist(),
            "screen_converged": screen.converged,
        },
    )
