"""Chebyshev interpolation of scalar functions with remainder bounds.

A degree-k interpolant matches f at the k+1 Chebyshev extrema nodes
x_i = cos(i*pi/k) mapped onto the target interval.  Coefficients come
from the discrete cosine relation on the node values (a DCT-I), so the
interpolant agrees with f exactly at the nodes; no quadrature is
involved.  For f analytic on the Bernstein ellipse E_rho with
|f| <= c_m there, the sup error obeys 4*c_m*rho^(-k)/(rho - 1).

Interpolation targets are scalar functions of a single variable; the
expanded monomial form plugs into multivariate dynamics by embedding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .poly import Polynomial


@dataclass(frozen=True)
class ChebyshevInterpolant:
    """P_k(x) = sum_i c_i T_i(xhat), xhat the interval map of x onto [-1,1]."""

    degree: int
    interval: tuple[float, float]
    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        a, b = self.interval
        if not a < b:
            raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
        if len(self.coeffs) != self.degree + 1:
            raise ValueError("need degree+1 coefficients")

    def map_to_unit(self, x):
        a, b = self.interval
        return (np.asarray(x, dtype=float) - 0.5 * (b + a)) / (0.5 * (b - a))

    def __call__(self, x):
        """Evaluate by the Clenshaw recurrence; accepts scalars or arrays."""
        t = self.map_to_unit(x)
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        for c in self.coeffs[:0:-1]:
            b1, b2 = c + 2.0 * t * b1 - b2, b1
        out = self.coeffs[0] + t * b1 - b2
        return float(out) if np.isscalar(x) else out


@dataclass
class RemainderBound:
    """Certified sup-norm bound 4*c_m*rho^(-k)/(rho-1) for analytic targets."""

    c_m: float
    rho: float
    k: int
    value: float = 0.0

    def __post_init__(self) -> None:
        self.value = remainder_bound(self.c_m, self.rho, self.k)


def chebyshev_nodes(k: int) -> np.ndarray:
    """The k+1 extrema nodes cos(i*pi/k), i = 0..k, on [-1, 1].

    k = 0 degenerates to the single node {1}.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k == 0:
        return np.array([1.0])
    return np.cos(np.arange(k + 1) * math.pi / k)


def fit_interpolant(
    f: Callable[[float], float], k: int, interval: tuple[float, float]
) -> ChebyshevInterpolant:
    """Interpolate f at the mapped Chebyshev nodes of degree k on [a, b].

    Coefficients use the discrete cosine relation
        c_j = (2 - [j=0] - [j=k]) / k * sum'' f(x_i) cos(j*pi*i/k)
    where sum'' halves the i = 0 and i = k terms.

    Raises ValueError if f is not finite at some node, reporting its
    location.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"interval must satisfy a < b, got [{a}, {b}]")
    nodes = chebyshev_nodes(k)
    xs = 0.5 * (b + a) + 0.5 * (b - a) * nodes
    vals = np.empty(k + 1)
    for i, x in enumerate(xs):
        try:
            vals[i] = float(f(x))
        except (ArithmeticError, ValueError) as exc:
            raise ValueError(
                f"function evaluation failed at node x = {x!r} (node index {i}): {exc}"
            ) from exc
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"function not finite at node x = {xs[i]!r} (node index {i})")
    if k == 0:
        return ChebyshevInterpolant(0, (a, b), (vals[0],))
    i = np.arange(k + 1)
    weights = np.ones(k + 1)
    weights[0] = weights[-1] = 0.5
    coeffs = []
    for j in range(k + 1):
        s = float(np.sum(weights * vals * np.cos(j * math.pi * i / k)))
        factor = (2.0 - (1.0 if j == 0 else 0.0) - (1.0 if j == k else 0.0)) / k
        coeffs.append(factor * s)
    return ChebyshevInterpolant(k, (a, b), tuple(coeffs))


def to_polynomial(c: ChebyshevInterpolant) -> Polynomial:
    """Expand the interpolant into monomials of the original variable.

    Uses the recurrence T_i = 2*xhat*T_{i-1} - T_{i-2} with
    xhat = (x - (b+a)/2) / ((b-a)/2) left in terms of x.
    """
    a, b = c.interval
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = Polynomial.variable(1, 0)
    xhat = (x - mid) * (1.0 / half)
    t_prev = Polynomial.constant(1, 1.0)
    t_curr = xhat
    out = t_prev * c.coeffs[0]
    if c.degree >= 1:
        out = out + t_curr * c.coeffs[1]
    for i in range(2, c.degree + 1):
        t_prev, t_curr = t_curr, xhat * t_curr * 2.0 - t_prev
        out = out + t_curr * c.coeffs[i]
    return out


def remainder_bound(c_m: float, rho: float, k: int) -> float:
    """Sup-norm error bound 4*c_m*rho^(-k)/(rho-1) for f analytic on E_rho."""
    if c_m < 0:
        raise ValueError("c_m must be nonnegative")
    if rho <= 1:
        raise ValueError(f"rho must exceed 1 (got {rho}); the bound diverges otherwise")
    if k < 0:
        raise ValueError("k must be nonnegative")
    return 4.0 * c_m * rho ** (-k) / (rho - 1.0)


def sup_error(
    f: Callable[[float], float], c: ChebyshevInterpolant, n_samples: int = 2001
) -> float:
    """Max |f - P_k| over n_samples uniform points spanning the interval."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    xs = np.linspace(c.interval[0], c.interval[1], n_samples)
    fx = np.array([float(f(x)) for x in xs])
    return float(np.max(np.abs(fx - c(xs))))
