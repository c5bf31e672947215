"""Gaussian-process regression of unknown dynamics residuals.

Each affected state dimension gets an independent zero-mean GP with a
squared-exponential kernel

    k(x, x') = sigma_f^2 * exp(-sum_j (x_j - x'_j)^2 / (2 l_j^2)).

From the posterior we extract (a) a least-squares polynomial fit of the
posterior mean over a uniform grid and (b) polynomial lower/upper
envelopes of mean -/+ k_delta * std, shifted outward by the worst grid
residual so the band is honoured at every grid point.  The envelope
guarantee is grid-only; reports flag this.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.stats import norm

from .poly import Monomial, Polynomial, monomial_basis

Box = Sequence[tuple[float, float]]

MAX_GRID_POINTS = 10 ** 6
CONDITION_LIMIT = 1e12


class GPFitError(ValueError):
    """Raised when the kernel matrix cannot be factorized reliably."""


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel hyperparameters.

    ``lengthscales`` holds one positive value per input dimension; pass a
    single-element tuple for isotropic kernels in 1-D, or repeat the value.
    """

    sigma_f: float
    lengthscales: tuple[float, ...]
    sigma_n: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma_f <= 0:
            raise ValueError("sigma_f must be positive")
        if not self.lengthscales or any(l <= 0 for l in self.lengthscales):
            raise ValueError("lengthscales must be positive")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be nonnegative")

    @staticmethod
    def isotropic(sigma_f: float, lengthscale: float, nvars: int, sigma_n: float = 0.0):
        return KernelConfig(sigma_f, (float(lengthscale),) * nvars, sigma_n)


def kernel_matrix(cfg: KernelConfig, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Cross-covariance matrix k(X_i, Y_j); Y defaults to X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    ls = np.asarray(cfg.lengthscales, dtype=float)
    if X.shape[1] != ls.size or Y.shape[1] != ls.size:
        raise ValueError(
            f"input dimension {X.shape[1]} does not match {ls.size} lengthscales"
        )
    d2 = np.sum((X[:, None, :] - Y[None, :, :]) ** 2 / (2.0 * ls ** 2), axis=2)
    return cfg.sigma_f ** 2 * np.exp(-d2)


@dataclass
class GPModel:
    """Posterior of a zero-prior-mean GP conditioned on (train_X, train_y)."""

    kernel: KernelConfig
    train_X: np.ndarray
    train_y: np.ndarray
    chol: np.ndarray = field(repr=False, default=None)
    alpha: np.ndarray = field(repr=False, default=None)
    log_marginal_likelihood: float = float("nan")

    @property
    def nvars(self) -> int:
        return len(self.kernel.lengthscales)

    @property
    def n_points(self) -> int:
        return 0 if self.train_X is None else self.train_X.shape[0]

    @staticmethod
    def prior(kernel: KernelConfig) -> "GPModel":
        """Unconditioned model: mean 0, std sigma_f everywhere."""
        d = len(kernel.lengthscales)
        return GPModel(kernel, np.zeros((0, d)), np.zeros(0))


def gp_fit(
    X: np.ndarray, y: np.ndarray, kernel: KernelConfig, jitter: float = 1e-12
) -> GPModel:
    """Condition a GP on data, caching the Cholesky factor of K + sigma_n^2 I.

    Rejects kernel matrices with condition estimate above 1e12; the fix is
    more observation noise (sigma_n) or a larger jitter.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size or y.size < 1:
        raise ValueError("need matching X rows and y entries, at least one point")
    K = kernel_matrix(kernel, X) + (kernel.sigma_n ** 2 + jitter) * np.eye(X.shape[0])
    eigs = np.linalg.eigvalsh(K)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > CONDITION_LIMIT:
        cond = float("inf") if eigs[0] <= 0 else eigs[-1] / eigs[0]
        raise GPFitError(
            f"kernel matrix condition ~{cond:.2e} exceeds {CONDITION_LIMIT:.0e}; "
            "increase sigma_n or the jitter"
        )
    L = np.linalg.cholesky(K)
    alpha = cho_solve((L, True), y)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * y.size * math.log(2.0 * math.pi)
    )
    return GPModel(kernel, X, y, chol=L, alpha=alpha, log_marginal_likelihood=lml)


def gp_posterior_many(model: GPModel, X_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and std at each row of X_star."""
    X_star = np.atleast_2d(np.asarray(X_star, dtype=float))
    if model.n_points == 0:
        n = X_star.shape[0]
        return np.zeros(n), np.full(n, model.kernel.sigma_f)
    K_star = kernel_matrix(model.kernel, model.train_X, X_star)  # (n_train, N)
    mean = K_star.T @ model.alpha
    v = solve_triangular(model.chol, K_star, lower=True)
    var = model.kernel.sigma_f ** 2 - np.sum(v ** 2, axis=0)
    return mean, np.sqrt(np.clip(var, 0.0, None))


def gp_posterior(model: GPModel, x_star: Sequence[float]) -> tuple[float, float]:
    """Posterior (mean, std) at a single query point."""
    mean, std = gp_posterior_many(model, np.asarray(x_star, dtype=float).reshape(1, -1))
    return float(mean[0]), float(std[0])


def uniform_grid(region: Box, grid_n: int) -> np.ndarray:
    """Uniform grid_n^d lattice over the box, as an (grid_n^d, d) array."""
    region = [(float(lo), float(hi)) for lo, hi in region]
    if any(lo >= hi for lo, hi in region):
        raise ValueError("box bounds must satisfy lo < hi")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if grid_n ** len(region) > MAX_GRID_POINTS:
        raise ValueError(
            f"grid of {grid_n}^{len(region)} points exceeds the {MAX_GRID_POINTS} guard"
        )
    axes = [np.linspace(lo, hi, grid_n) for lo, hi in region]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _lstsq_poly(X: np.ndarray, targets: np.ndarray, degree: int) -> tuple[Polynomial, float]:
    nvars = X.shape[1]
    basis = monomial_basis(nvars, degree)
    E = np.array([m.exponents for m in basis], dtype=float)
    Phi = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
    coef, _, rank, _ = np.linalg.lstsq(Phi, targets, rcond=None)
    if rank < len(basis):
        raise ValueError(
            f"normal equations rank {rank} < {len(basis)} basis monomials; "
            "lower the degree or refine the grid"
        )
    rmse = float(np.sqrt(np.mean((Phi @ coef - targets) ** 2)))
    p = Polynomial(nvars, {m: c for m, c in zip(basis, coef)})
    return p, rmse


def fit_polynomial_mean(
    model: GPModel, degree: int, region: Box, grid_n: int = 25
) -> tuple[Polynomial, float]:
    """Least-squares polynomial fit of the posterior mean on a uniform grid.

    Returns (polynomial, grid RMSE of the fit against the posterior mean).
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    X = uniform_grid(region, grid_n)
    mean, _ = gp_posterior_many(model, X)
    return _lstsq_poly(X, mean, degree)


@dataclass
class ConfidenceEnvelope:
    """Polynomial band [lo_poly, hi_poly] containing mean -/+ k_delta*std.

    Soundness holds at the fit-grid points only (outward shift by the max
    grid residual); there is no continuous guarantee between grid points.
    """

    mean_poly: Polynomial
    lo_poly: Polynomial
    hi_poly: Polynomial
    k_delta: float
    delta: float
    n_measurements: int
    fit_region: tuple[tuple[float, float], ...]
    mean_rmse: float = 0.0
    lo_shift: float = 0.0
    hi_shift: float = 0.0
    grid_n: int = 0
    grid_only_guarantee: bool = True

    def probability_bound(self) -> float:
        return probability_bound(self.delta, self.n_measurements)


def build_envelope(
    model: GPModel,
    k_delta: float,
    degree: int,
    region: Box,
    grid_n: int = 25,
    delta: float | None = None,
) -> ConfidenceEnvelope:
    """Fit mean/lo/hi polynomials to the posterior band over a uniform grid.

    lo fits mean - k_delta*std and is lowered by its worst overshoot; hi
    fits mean + k_delta*std and is raised by its worst undershoot, so at
    every grid point lo_poly <= mean - k_delta*std <= mean + k_delta*std
    <= hi_poly and lo_poly <= mean_poly <= hi_poly.
    """
    if k_delta < 0:
        raise ValueError("k_delta must be nonnegative")
    if delta is None:
        # two-sided Gaussian tail mass outside [-k_delta, k_delta] sigmas
        delta = float(2.0 * (1.0 - norm.cdf(k_delta))) if k_delta > 0 else 1.0
    X = uniform_grid(region, grid_n)
    mean, std = gp_posterior_many(model, X)
    mean_poly, mean_rmse = _lstsq_poly(X, mean, degree)
    lo_fit, _ = _lstsq_poly(X, mean - k_delta * std, degree)
    hi_fit, _ = _lstsq_poly(X, mean + k_delta * std, degree)
    mean_vals = mean_poly.evaluate_many(X)
    lo_vals = lo_fit.evaluate_many(X)
    hi_vals = hi_fit.evaluate_many(X)
    lo_target = np.minimum(mean - k_delta * std, mean_vals)
    hi_target = np.maximum(mean + k_delta * std, mean_vals)
    lo_shift = float(max(0.0, np.max(lo_vals - lo_target)))
    hi_shift = float(max(0.0, np.max(hi_target - hi_vals)))
    return ConfidenceEnvelope(
        mean_poly=mean_poly,
        lo_poly=lo_fit - lo_shift,
        hi_poly=hi_fit + hi_shift,
        k_delta=float(k_delta),
        delta=float(delta),
        n_measurements=model.n_points,
        fit_region=tuple((float(a), float(b)) for a, b in region),
        mean_rmse=mean_rmse,
        lo_shift=lo_shift,
        hi_shift=hi_shift,
        grid_n=grid_n,
    )


def probability_bound(delta: float, m: int) -> float:
    """Joint confidence (1 - delta)^m over m measurements."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if m < 1:
        raise ValueError("m must be at least 1")
    return (1.0 - delta) ** m


def tune_kernel(
    X: np.ndarray,
    y: np.ndarray,
    sigma_f_grid: Sequence[float],
    lengthscale_grid: Sequence[float],
    sigma_n: float,
    jitter: float = 1e-12,
) -> tuple[KernelConfig, float]:
    """Coarse grid search maximizing log marginal likelihood.

    Returns the best isotropic KernelConfig and its likelihood.  Grid
    combinations whose kernel matrix is unusable are skipped.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    best: tuple[KernelConfig, float] | None = None
    for sf, ls in itertools.product(sigma_f_grid, lengthscale_grid):
        cfg = KernelConfig.isotropic(sf, ls, X.shape[1], sigma_n)
        try:
            model = gp_fit(X, y, cfg, jitter=jitter)
        except GPFitError:
            continue
        if best is None or model.log_marginal_likelihood > best[1]:
            best = (cfg, model.log_marginal_likelihood)
    if best is None:
        raise GPFitError("no kernel in the grid produced a usable fit")
    return best
