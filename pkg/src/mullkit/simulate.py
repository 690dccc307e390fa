"""Seeded generation of the benchmark data: multivariate-normal features with
block or AR correlation, three binary-classification schemes, a heterogeneous
quantile scheme, and additive feature noise w = x + u.

Reproducibility: every replicate stream is PCG64 seeded with
SeedSequence(seed, spawn_key=stream_key), so (spec, stream_key) fully
determines the draw regardless of scheduling; the benchmark runner uses
stream_key=(replicate, 0) for training data and (replicate, 1) for test data.
Within a replicate the draw order is fixed: labels/latents, features, response
noise, then measurement noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .data import Coefficients, Dataset, Task

SUPPORT_SIZE = 5

SCHEME1_MU = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
SCHEME1_BETA = np.array([1.39, 1.47, 1.56, 1.65, 1.74])
SCHEME1_BLOCK_OFFDIAG = -0.2
SCHEME2_BETA_VALUE = 1.1
SCHEME2_AR_RHO = 0.4
QUANTILE_BETA_VALUE = 1.5
QUANTILE_AR_RHO = 0.7
QUANTILE_INTERCEPT = 1.5
QUANTILE_NORMAL_SD = 2.0


class SchemeKind(enum.Enum):
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"
    QUANTILE_HET = "qhet"


@dataclass(frozen=True)
class SchemeSpec:
    scheme: SchemeKind
    n: int
    p: int
    sigma_u: float = 0.0
    tau: Optional[float] = None          # quantile level (QUANTILE_HET)
    noise_dist: str = "normal"           # response noise: normal | t2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.p < SUPPORT_SIZE:
            raise ValueError(f"p must be >= {SUPPORT_SIZE}")
        if self.sigma_u < 0:
            raise ValueError("sigma_u must be nonnegative")
        if self.noise_dist not in ("normal", "t2"):
            raise ValueError("noise_dist must be 'normal' or 't2'")
        if self.scheme == SchemeKind.QUANTILE_HET:
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError("the quantile scheme needs tau in (0, 1)")

    @property
    def task(self) -> Task:
        return Task.QUANTILE if self.scheme == SchemeKind.QUANTILE_HET else Task.BINARY


@dataclass(frozen=True)
class SimReplicate:
    x: np.ndarray          # clean features, n x p
    w: np.ndarray          # noisy features, n x p
    y: np.ndarray
    truth: Coefficients    # true beta (support {0..4}) and intercept

    def dataset(self, noisy: bool = True) -> Dataset:
        task = Task.QUANTILE if self.truth.intercept is not None else Task.BINARY
        return Dataset(self.w if noisy else self.x, self.y, task)


def replicate_rng(seed: int, stream_key: tuple[int, ...] = ()) -> np.random.Generator:
    """The package-wide stream rule: PCG64(SeedSequence(seed, spawn_key=key))."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=stream_key)))


def cholesky(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L' = sigma; rejects non-SPD input."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not positive definite "
                         "(nonpositive pivot)") from None


def ar_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def scheme1_covariance(p: int) -> np.ndarray:
    sigma = np.eye(p)
    block = np.full((SUPPORT_SIZE, SUPPORT_SIZE), SCHEME1_BLOCK_OFFDIAG)
    np.fill_diagonal(block, 1.0)
    sigma[:SUPPORT_SIZE, :SUPPORT_SIZE] = block
    return sigma


def true_coefficients(spec: SchemeSpec) -> Coefficients:
    beta = np.zeros(spec.p)
    if spec.scheme == SchemeKind.S1:
        beta[:SUPPORT_SIZE] = SCHEME1_BETA
        return Coefficients(beta)
    if spec.scheme in (SchemeKind.S2, SchemeKind.S3):
        beta[:SUPPORT_SIZE] = SCHEME2_BETA_VALUE
        return Coefficients(beta)
    beta[:SUPPORT_SIZE] = QUANTILE_BETA_VALUE
    return Coefficients(beta, QUANTILE_INTERCEPT)


def t2_cdf(x):
    """CDF of the t distribution with 2 degrees of freedom: (1 + x/sqrt(2+x^2))/2."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + x / np.sqrt(2.0 + x * x))


def t2_quantile(tau: float) -> float:
    return (2.0 * tau - 1.0) / math.sqrt(2.0 * tau * (1.0 - tau))


def _sample_ar(rng: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    """N(0, Sigma) with Sigma_ij = rho^|i-j| via the AR(1) recursion; never
    materializes the p x p covariance."""
    z = rng.standard_normal((n, p))
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    scale = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + scale * z[:, j]
    return x


def _noise_draw(rng: np.random.Generator, n: int, dist: str) -> np.ndarray:
    if dist == "normal":
        return QUANTILE_NORMAL_SD * rng.standard_normal(n)
    # t(2) via the normal / chi-square ratio construction
    z = rng.standard_normal(n)
    v = rng.chisquare(2, n)
    return z / np.sqrt(v / 2.0)


def _noise_quantile(dist: str, tau: float) -> float:
    if dist == "normal":
        return QUANTILE_NORMAL_SD * float(ndtri(tau))
    return t2_quantile(tau)


def add_noise(x: np.ndarray, sigma_u: float, seed) -> np.ndarray:
    """w = x + u with u_ij ~ N(0, sigma_u^2) iid; sigma_u = 0 returns x as is.

    `seed` is an int (fed through the stream rule) or an existing Generator.
    """
    if sigma_u < 0:
        raise ValueError("sigma_u must be nonnegative")
    x = np.asarray(x, dtype=float)
    if sigma_u == 0.0:
        return x.copy()
    rng = seed if isinstance(seed, np.random.Generator) else replicate_rng(seed)
    return x + sigma_u * rng.standard_normal(x.shape)


def gen_scheme(spec: SchemeSpec, stream_key: tuple[int, ...] = ()) -> SimReplicate:
    """Draw one replicate of the requested scheme.

    S1: balanced labels first, then class-conditional features +/- mu with the
    5 x 5 negatively-correlated block.  S2/S3: AR(0.4) features with a t(2)-CDF
    or logistic link.  QUANTILE_HET: AR(0.7) features and
    y = 1.5 + x'beta + (x_1 + 1)(eps - F_eps^{-1}(tau)), so the conditional
    tau-quantile of y is the linear predictor.
    """
    rng = replicate_rng(spec.seed, stream_key)
    n, p = spec.n, spec.p
    truth = true_coefficients(spec)

    if spec.scheme == SchemeKind.S1:
        y = (rng.random(n) < 0.5).astype(float)
        z = rng.standard_normal((n, p))
        L5 = cholesky(scheme1_covariance(SUPPORT_SIZE))
        x = z.copy()
        x[:, :SUPPORT_SIZE] = z[:, :SUPPORT_SIZE] @ L5.T
        x[:, :SUPPORT_SIZE] += np.where(y[:, None] == 1.0, 1.0, -1.0) * SCHEME1_MU
    elif spec.scheme in (SchemeKind.S2, SchemeKind.S3):
        x = _sample_ar(rng, n, p, SCHEME2_AR_RHO)
        t = x @ truth.beta
        probs = t2_cdf(t) if spec.scheme == SchemeKind.S2 else 1.0 / (1.0 + np.exp(-t))
        y = (rng.random(n) < probs).astype(float)
    else:
        x = _sample_ar(rng, n, p, QUANTILE_AR_RHO)
        eps = _noise_draw(rng, n, spec.noise_dist)
        shift = _noise_quantile(spec.noise_dist, spec.tau)
        y = QUANTILE_INTERCEPT + x @ truth.beta + (x[:, 0] + 1.0) * (eps - shift)

    w = add_noise(x, spec.sigma_u, rng)
    return SimReplicate(x=x, w=w, y=y, truth=truth)
