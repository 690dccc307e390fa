"""Dense linear programming: minimize c'z subject to A z <= b, z >= 0.

Revised simplex with an explicit basis inverse, Phase I via artificial
variables on rows with negative right-hand sides, Dantzig pricing with a
Bland's-rule fallback once degenerate pivots accumulate, and periodic
refactorization.  Small and deterministic; built for the 2p x 2p subproblems
of the feasible-set estimators, not for sparse or huge instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PIVOT_TOL = 1e-9
PIVOT_FLOOR = 1e-12
DEFAULT_FEAS_TOL = 1e-8
DEFAULT_OPT_TOL = 1e-9
REFACTOR_EVERY = 64


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if c.ndim != 1 or A.ndim != 2 or b.ndim != 1:
            raise ValueError("c and b must be vectors, A a matrix")
        if A.shape != (b.shape[0], c.shape[0]):
            raise ValueError(
                f"inconsistent LP dimensions: A {A.shape}, c {c.shape}, b {b.shape}"
            )
        for name, arr in (("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.b.shape[0]


@dataclass
class LpSolution:
    z: Optional[np.ndarray]
    objective_value: Optional[float]
    status: LpStatus
    iterations: int = 0
    message: str = ""


class _Breakdown(Exception):
    pass


class _Tableau:
    """Revised-simplex state over a fixed column pool."""

    def __init__(self, cols: np.ndarray, rhs: np.ndarray, basis: list[int]):
        self.cols = cols                      # q x ncols
        self.rhs = rhs                        # q
        self.basis = list(basis)
        self.q = rhs.shape[0]
        self.binv = np.eye(self.q)
        self.xb = rhs.copy()
        self.degenerate_pivots = 0
        self.pivots = 0

    def refactor(self):
        B = self.cols[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise _Breakdown("singular basis during refactorization") from None
        self.xb = self.binv @ self.rhs
        np.clip(self.xb, 0.0, None, out=self.xb)

    def pivot(self, row: int, col: int, u: np.ndarray, theta: float):
        piv = u[row]
        brow = self.binv[row] / piv
        self.binv -= np.outer(u, brow)
        self.binv[row] = brow
        self.xb -= theta * u
        self.xb[row] = theta
        np.clip(self.xb, 0.0, None, out=self.xb)
        self.basis[row] = col
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactor()


def _run_simplex(tab: _Tableau, cost: np.ndarray, active: np.ndarray,
                 opt_tol: float, max_iter: int, bland_after: int,
                 iters_used: int):
    """Iterate to optimality over the columns flagged in `active`.

    Returns (status_str, iterations) where status_str is one of
    'optimal', 'unbounded', 'limit'.
    """
    q = tab.q
    it = iters_used
    while True:
        if it >= max_iter:
            return "limit", it
        it += 1
        y = cost[tab.basis] @ tab.binv
        reduced = cost - y @ tab.cols
        reduced[~active] = np.inf
        reduced[tab.basis] = np.inf
        use_bland = tab.degenerate_pivots > bland_after
        if use_bland:
            neg = np.flatnonzero(reduced < -opt_tol)
            if neg.size == 0:
                return "optimal", it
            enter = int(neg[0])
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -opt_tol:
                return "optimal", it
        u = tab.binv @ tab.cols[:, enter]
        pos = u > PIVOT_TOL
        if not np.any(pos):
            if np.any(u > PIVOT_FLOOR):
                raise _Breakdown(
                    f"pivot candidates all below {PIVOT_TOL:g} in column {enter}"
                )
            return "unbounded", it
        ratios = np.full(q, np.inf)
        ratios[pos] = tab.xb[pos] / u[pos]
        theta = float(np.min(ratios))
        ties = np.flatnonzero(ratios <= theta * (1.0 + 1e-12) + 1e-300)
        # deterministic (and Bland-compatible) tie-break: smallest basis index
        leave = int(min(ties, key=lambda r: tab.basis[r]))
        if theta <= 1e-12:
            tab.degenerate_pivots += 1
        tab.pivot(leave, enter, u, theta)


def solve_lp(lp: LinearProgram, feas_tol: float = DEFAULT_FEAS_TOL,
             max_iter: Optional[int] = None,
             opt_tol: float = DEFAULT_OPT_TOL) -> LpSolution:
    """Two-phase revised simplex.  Never returns a silent wrong answer: on
    numerical breakdown the status is ITERATION_LIMIT with a message, and
    an OPTIMAL status always carries a checked feasibility certificate
    (A z <= b + feas_tol*(1+||b||_inf), z >= -feas_tol).
    """
    m, q = lp.num_vars, lp.num_constraints
    if max_iter is None:
        max_iter = 50 * (m + q)
    if q == 0:
        if np.any(lp.c < -opt_tol):
            return LpSolution(None, None, LpStatus.UNBOUNDED, 0,
                              "no constraints and a negative cost entry")
        z = np.zeros(m)
        return LpSolution(z, 0.0, LpStatus.OPTIMAL, 0)

    flip = lp.b < 0.0
    sign = np.where(flip, -1.0, 1.0)
    body = np.hstack([lp.A, np.eye(q)]) * sign[:, None]
    rhs = lp.b * sign
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size
    art_cols = np.zeros((q, n_art))
    art_cols[art_rows, np.arange(n_art)] = 1.0
    cols = np.hstack([body, art_cols])
    ncols = m + q + n_art

    basis = [0] * q
    k = 0
    for i in range(q):
        if flip[i]:
            basis[i] = m + q + k
            k += 1
        else:
            basis[i] = m + i
    tab = _Tableau(cols, rhs, basis)
    bland_after = 10 * (m + q)
    scale = 1.0 + float(np.max(np.abs(lp.b))) if q else 1.0

    try:
        iters = 0
        if n_art:
            cost1 = np.zeros(ncols)
            cost1[m + q:] = 1.0
            active1 = np.ones(ncols, dtype=bool)
            status, iters = _run_simplex(tab, cost1, active1, opt_tol,
                                         max_iter, bland_after, 0)
            if status == "limit":
                return LpSolution(None, None, LpStatus.ITERATION_LIMIT, iters,
                                  "iteration limit reached in phase I")
            if status == "unbounded":
                raise _Breakdown("phase I reported unbounded")
            phase1 = float(cost1[tab.basis] @ tab.xb)
            if phase1 > feas_tol * scale:
                return LpSolution(None, None, LpStatus.INFEASIBLE, iters,
                                  f"phase I objective {phase1:.3e}")
            _evict_artificials(tab, m + q)

        cost2 = np.zeros(tab.cols.shape[1])
        cost2[:m] = lp.c
        active2 = np.zeros(tab.cols.shape[1], dtype=bool)
        active2[: m + q] = True
        status, iters = _run_simplex(tab, cost2, active2, opt_tol,
                                     max_iter, bland_after, iters)
    except _Breakdown as exc:
        return LpSolution(None, None, LpStatus.ITERATION_LIMIT,
                          getattr(tab, "pivots", 0), f"numerical breakdown: {exc}")

    if status == "limit":
        return LpSolution(None, None, LpStatus.ITERATION_LIMIT, iters,
                          "iteration limit reached in phase II")
    if status == "unbounded":
        return LpSolution(None, None, LpStatus.UNBOUNDED, iters)

    x = np.zeros(tab.cols.shape[1])
    x[tab.basis] = tab.xb
    z = x[:m]
    viol = float(np.max(lp.A @ z - lp.b)) if q else 0.0
    if viol > feas_tol * scale or float(np.min(z, initial=0.0)) < -feas_tol:
        return LpSolution(None, None, LpStatus.ITERATION_LIMIT, iters,
                          f"optimality reached but certificate failed "
                          f"(violation {viol:.3e})")
    return LpSolution(z, float(lp.c @ z), LpStatus.OPTIMAL, iters)


def _evict_artificials(tab: _Tableau, n_real: int):
    """Pivot basic artificials out after phase I; drop rows that turn out to
    be redundant (no real column available to pivot on)."""
    redundant = []
    for r in range(tab.q):
        if tab.basis[r] < n_real:
            continue
        row = tab.binv[r] @ tab.cols[:, :n_real]
        row[np.asarray(tab.basis)[np.asarray(tab.basis) < n_real]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > PIVOT_TOL:
            u = tab.binv @ tab.cols[:, j]
            tab.pivot(r, j, u, float(tab.xb[r]) / u[r])
        else:
            redundant.append(r)
    if redundant:
        keep = np.setdiff1d(np.arange(tab.q), redundant)
        tab.cols = tab.cols[keep]
        tab.rhs = tab.rhs[keep]
        tab.basis = [tab.basis[i] for i in keep]
        tab.q = keep.size
        tab.refactor()
