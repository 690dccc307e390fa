"""Penalized surrogate of the feasible-set estimator: minimize

    L_w(beta) + lambda2*||beta||_1 + (gamma2/2)*||beta||_1^2   over ||beta||_1 <= R

by spectral projected gradient (Barzilai-Borwein steps, non-monotone line
search) with exact sort-based projection onto the L1 ball.  gamma2 = 0 gives
the plain L1-penalized fit used as the no-correction baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Coefficients, Dataset, FitResult, Task, l1_norm
from .losses import LossSpec, empirical_loss, gradient


@dataclass(frozen=True)
class AnalogConfig:
    """Tuning knobs for the projected-gradient fit.

    lambda2/gamma2 are the penalty weights, radius the L1-ball bound (rarely
    active at the default), memory/armijo_delta the non-monotone line search
    parameters, (alpha_min, alpha_max) the spectral step clamp.
    """

    lambda2: float
    gamma2: float = 0.0
    radius: float = 50.0
    alpha_min: float = 1e-10
    alpha_max: float = 1e10
    memory: int = 10
    armijo_delta: float = 1e-4
    max_iter: int = 5000
    grad_tol: float = 1e-6
    use_intercept: Optional[bool] = None

    def __post_init__(self):
        if self.lambda2 < 0 or self.gamma2 < 0:
            raise ValueError("lambda2 and gamma2 must be nonnegative")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not 0 < self.armijo_delta < 1:
            raise ValueError("armijo delta must be in (0, 1)")


def project_l1(v, radius: float) -> np.ndarray:
    """Euclidean projection onto {z : ||z||_1 <= radius} (sort-based, O(p log p)).

    Returns v unchanged (as a copy) when it is already inside the ball.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    mags = np.abs(v)
    if mags.sum() <= radius:
        return v.copy()
    srt = np.sort(mags)[::-1]
    csum = np.cumsum(srt)
    counts = np.arange(1, v.size + 1)
    rho = int(np.max(np.flatnonzero(srt * counts > csum - radius)))
    theta = (csum[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(mags - theta, 0.0)


def analog_objective(data: Dataset, spec: LossSpec, coef: Coefficients,
                     cfg: AnalogConfig) -> float:
    norm = l1_norm(coef.beta)
    return empirical_loss(data, spec, coef) + cfg.lambda2 * norm \
        + 0.5 * cfg.gamma2 * norm * norm


def analog_subgradient(data: Dataset, spec: LossSpec, coef: Coefficients,
                       cfg: AnalogConfig) -> np.ndarray:
    """S_w(beta) + (lambda2 + gamma2*||beta||_1) * sign(beta), sign(0) = 0."""
    S = gradient(data, spec, coef)
    thr = cfg.lambda2 + cfg.gamma2 * l1_norm(coef.beta)
    return S + thr * np.sign(coef.beta)


def _kkt_residual(S: np.ndarray, beta: np.ndarray, thr: float,
                  s0: Optional[float] = None) -> float:
    nz = beta != 0.0
    res_nz = np.abs(S[nz] + thr * np.sign(beta[nz]))
    res_z = np.maximum(np.abs(S[~nz]) - thr, 0.0)
    worst = 0.0
    if res_nz.size:
        worst = float(np.max(res_nz))
    if res_z.size:
        worst = max(worst, float(np.max(res_z)))
    if s0 is not None:
        worst = max(worst, abs(s0))
    return worst


def kkt_check(data: Dataset, spec: LossSpec, coef: Coefficients,
              cfg: AnalogConfig) -> float:
    """Max stationarity residual (interior-of-ball case): the nonzero-coordinate
    |S_j + thr*sign(beta_j)| terms and the zero-coordinate hinge
    max(0, |S_j| - thr), plus |dL/d intercept| when an intercept is present.
    """
    if coef.intercept is not None:
        S, s0 = gradient(data, spec, coef, with_intercept=True)
    else:
        S, s0 = gradient(data, spec, coef), None
    thr = cfg.lambda2 + cfg.gamma2 * l1_norm(coef.beta)
    return _kkt_residual(S, coef.beta, thr, s0)


def _wants_intercept(data: Dataset, declared: Optional[bool]) -> bool:
    if declared is not None:
        return declared
    return data.task == Task.QUANTILE


def spg_fit(data: Dataset, spec: LossSpec, cfg: AnalogConfig,
            init: Optional[Coefficients] = None) -> FitResult:
    """Spectral projected gradient on the penalized objective.

    The update is beta <- proj_R(beta - eta*g) with g the generalized gradient
    (sign(0)=0); eta starts at 1/||g||_inf, then uses the BB ratio clamped to
    [alpha_min, alpha_max], halved until the non-monotone Armijo test over the
    last `memory` objective values accepts.  Convergence is declared when the
    minimum-norm stationarity residual (== kkt_check) or the literal
    projected-gradient residual drops below grad_tol; the former handles
    sparse interior optima, the latter ball-active ones.
    """
    if not data.standardized:
        warnings.warn("spg_fit called on non-standardized data", stacklevel=2)
    use_itc = _wants_intercept(data, cfg.use_intercept)
    p = data.p
    if init is not None:
        if init.p != p:
            raise ValueError("init has wrong length")
        beta = init.beta.copy()
        b0 = init.intercept if init.intercept is not None else 0.0
        beta = project_l1(beta, cfg.radius)
    else:
        beta, b0 = np.zeros(p), 0.0
    if not use_itc:
        b0 = None

    def pack(bb, ii):
        return Coefficients(bb, ii)

    def objective(bb, ii):
        return analog_objective(data, spec, pack(bb, ii), cfg)

    f_hist = [objective(beta, b0)]
    if not np.isfinite(f_hist[0]):
        raise RuntimeError("non-finite objective at the starting point")
    n_evals = 1
    prev_theta = None
    prev_g = None
    converged = False
    kkt = np.inf
    it = 0

    def stationarity(bb, ii):
        """(kkt residual, convergence measure, step direction, intercept slope).

        The step direction is the minimum-norm generalized gradient: the
        paper's S + thr*sign on nonzero coordinates, and the soft-thresholded
        sign(S_j)*max(0, |S_j| - thr) at zeros, so it vanishes exactly at KKT
        points (a plain sign(0)=0 subgradient would keep kicking sparse
        iterates off zero forever).
        """
        coef = pack(bb, ii)
        if use_itc:
            S, s0 = gradient(data, spec, coef, with_intercept=True)
        else:
            S, s0 = gradient(data, spec, coef), None
        thr = cfg.lambda2 + cfg.gamma2 * l1_norm(bb)
        g = np.where(bb != 0.0, S + thr * np.sign(bb),
                     np.sign(S) * np.maximum(np.abs(S) - thr, 0.0))
        res = _kkt_residual(S, bb, thr, s0)
        # ball-active optima: the literal projected-gradient residual vanishes
        # where the min-norm one cannot (missing ball multiplier)
        pg = float(np.max(np.abs(bb - project_l1(bb - g, cfg.radius))))
        if s0 is not None:
            pg = max(pg, abs(s0))
        return res, min(res, pg), g, s0

    for it in range(cfg.max_iter):
        kkt, measure, g, s0 = stationarity(beta, b0)
        if measure <= cfg.grad_tol:
            converged = True
            break
        theta = np.concatenate([beta, [b0]]) if use_itc else beta
        gfull = np.concatenate([g, [s0]]) if use_itc else g

        if prev_theta is None:
            eta = 1.0 / max(float(np.max(np.abs(gfull))), 1e-12)
        else:
            dtheta = theta - prev_theta
            dg = gfull - prev_g
            denom = float(dtheta @ dg)
            eta = float(dtheta @ dtheta) / denom if denom > 0 else cfg.alpha_max
            eta = min(max(eta, cfg.alpha_min), cfg.alpha_max)

        f_max = max(f_hist[-cfg.memory:])
        stalled = False
        while True:
            beta_new = project_l1(beta - eta * g, cfg.radius)
            # orthant clamp: a coordinate may reach zero but not cross it in
            # one step (keeps iterates exactly sparse)
            beta_new[beta_new * beta < 0.0] = 0.0
            b0_new = b0 - eta * s0 if use_itc else None
            d = beta_new - beta
            slope = float(g @ d)
            if use_itc:
                slope += s0 * (b0_new - b0)
            f_new = objective(beta_new, b0_new)
            n_evals += 1
            if not np.isfinite(f_new):
                raise RuntimeError(
                    f"non-finite objective during line search at iteration {it}"
                )
            if f_new <= f_max + cfg.armijo_delta * slope:
                break
            eta *= 0.5
            if eta < cfg.alpha_min:
                stalled = True
                break
        if stalled:
            break
        prev_theta, prev_g = theta, gfull
        beta, b0 = beta_new, b0_new if use_itc else None
        f_hist.append(f_new)

    kkt, measure, _, _ = stationarity(beta, b0)
    if measure <= cfg.grad_tol:
        converged = True
    coef = pack(beta, b0)
    S_final = gradient(data, spec, coef)
    gap = max(0.0, float(np.max(np.abs(S_final)))
              - cfg.lambda2 - cfg.gamma2 * l1_norm(beta))
    return FitResult(
        coefficients=coef,
        objective=objective(beta, b0),
        iterations=it + (0 if cfg.max_iter == 0 else 1),
        converged=converged,
        feasibility_gap=gap,
        kkt_residual=kkt if np.isfinite(kkt) else None,
        diagnostics={
            "objective_evals": n_evals,
            "ball_active": bool(l1_norm(beta) >= cfg.radius - 1e-9),
        },
    )
