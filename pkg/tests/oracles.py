"""Independent oracles used across the test suite.

Each oracle solves the same mathematical problem as the code under test by a
different route: brute-force vertex enumeration for LPs, scalar dual bisection
for the L1 projection, adaptive quadrature of the convolution definition for
the smoothed quantile loss, and finite differences for derivatives.
"""

import itertools
import math

import numpy as np
from scipy.integrate import quad


def central_d1(f, t, h=1e-6):
    return (f(t + h) - f(t - h)) / (2.0 * h)


def central_d2(f, t, h=1e-4):
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)


def enumerate_lp(c, A, b, tol=1e-9):
    """Solve min c'z s.t. A z <= b, z >= 0 by enumerating basic points.

    Returns (status, z, objective) with status in
    {"optimal", "infeasible", "unbounded"}.  The feasible region lies in the
    nonnegative orthant, so it is pointed and every nonempty region has a
    vertex; unboundedness is decided on the normalized recession cone.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = c.size
    G = np.vstack([A, -np.eye(m)])
    h = np.concatenate([b, np.zeros(m)])
    rows = G.shape[0]

    best_val, best_z = None, None
    for subset in itertools.combinations(range(rows), m):
        M = G[list(subset)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        z = np.linalg.solve(M, h[list(subset)])
        if np.all(G @ z <= h + tol):
            val = float(c @ z)
            if best_val is None or val < best_val:
                best_val, best_z = val, z
    if best_val is None:
        return "infeasible", None, None

    # recession directions: {d : A d <= 0, d >= 0, 1'd = 1}
    for subset in itertools.combinations(range(rows), m - 1):
        M = np.vstack([G[list(subset)], np.ones(m)])
        if M.shape[0] != m or abs(np.linalg.det(M)) < 1e-10:
            continue
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        d = np.linalg.solve(M, rhs)
        if np.all(G @ d <= tol) and float(c @ d) < -1e-9:
            return "unbounded", None, None
    return "optimal", best_z, best_val


def project_l1_dual(v, radius, iters=200):
    """L1-ball projection by bisection on the dual threshold of the QP
    min ||z - v||^2 / 2 s.t. ||z||_1 <= radius (soft-threshold form)."""
    v = np.asarray(v, dtype=float)
    mags = np.abs(v)
    if mags.sum() <= radius:
        return v.copy()
    lo, hi = 0.0, float(mags.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(mags - mid, 0.0)) > radius:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    return np.sign(v) * np.maximum(mags - theta, 0.0)


def _check_fn(v, tau):
    return v * (tau - (v < 0))


def _gauss_kernel(t, h):
    return math.exp(-0.5 * (t / h) ** 2) / (h * math.sqrt(2.0 * math.pi))


def _gauss_kernel_d(t, h):
    return -(t / (h * h)) * _gauss_kernel(t, h)


def conquer_value_quad(u, tau, h):
    """l_h(u) = integral of rho_tau(v) K_h(v - u) dv by adaptive quadrature."""
    f = lambda v: _check_fn(v, tau) * _gauss_kernel(v - u, h)
    lo, _ = quad(f, -np.inf, 0.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    hi, _ = quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return lo + hi


def conquer_d1_quad(u, tau, h):
    """l_h'(u) with the derivative moved onto the check function:
    tau - integral_{-inf}^0 K_h(v - u) dv."""
    f = lambda v: _gauss_kernel(v - u, h)
    val, _ = quad(f, -np.inf, 0.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return tau - val


def conquer_d2_quad(u, tau, h):
    """l_h''(u) = -integral (tau - 1{v<0}) K_h'(v - u) dv."""
    f = lambda v: (tau - (1.0 if v < 0 else 0.0)) * _gauss_kernel_d(v - u, h)
    lo, _ = quad(f, -np.inf, 0.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    hi, _ = quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return -(lo + hi)
