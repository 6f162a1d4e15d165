"""Scalar numerical kernel: normal CDF, moment factor, hemi-mean, cutoff solver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF.  Scalars go through erfc, arrays through ndtr."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT2)
    return ndtr(np.asarray(x, dtype=float))


def mu_factor(kappa, sigma_sq):
    """exp(kappa (kappa - 1) sigma_sq / 2), i.e. E[L**kappa] for a unit-mean
    log-normal L with log-variance sigma_sq."""
    return np.exp(0.5 * kappa * (kappa - 1.0) * sigma_sq)


def log_mu(kappa, sigma_sq):
    return 0.5 * kappa * (kappa - 1.0) * sigma_sq


def hemi_mean(strike, anchor, sigma):
    """E[(strike - F)^+] for log-normal F with mean ``anchor`` and total
    log-volatility ``sigma`` (a Black-Scholes put with zero rate)."""
    if strike <= 0:
        return 0.0
    if sigma <= 0:
        return max(strike - anchor, 0.0)
    lr = math.log(strike / anchor)
    d1 = (lr + 0.5 * sigma * sigma) / sigma
    d2 = d1 - sigma
    val = strike * normal_cdf(d1) - anchor * normal_cdf(d2)
    return min(max(val, 0.0), strike)


def at_the_money(sigma):
    """hemi_mean(1, 1, sigma) in its collapsed form 2*Phi(sigma/2) - 1."""
    return 2.0 * normal_cdf(0.5 * sigma) - 1.0 if np.ndim(sigma) == 0 else \
        2.0 * ndtr(0.5 * np.asarray(sigma)) - 1.0


def lpm_quadrature(strike, anchor, sigma, n=100_000):
    """Hemi-mean by trapezoid integration of the CDF over (0, strike].

    Uses E[(g - F)^+] = int_0^g Q(F <= x) dx.  The grid is uniform in x on
    (0, strike] so the integrand near 0 (where the CDF vanishes) is cheap.
    """
    if n < 1000:
        raise ValueError("n must be at least 1000")
    if strike <= 0:
        return 0.0
    if sigma <= 0:
        return max(strike - anchor, 0.0)
    x = np.linspace(0.0, strike, n + 1)
    cdf = np.zeros_like(x)
    pos = x > 0
    cdf[pos] = ndtr((np.log(x[pos] / anchor) + 0.5 * sigma * sigma) / sigma)
    h = strike / n
    return float(h * (cdf.sum() - 0.5 * (cdf[0] + cdf[-1])))


@dataclass(frozen=True)
class CutoffSolution:
    y: float
    residual: float
    iterations: int


def solve_cutoff(lam: float, sigma: float, tol: float = 1e-14, max_iter: int = 200) -> CutoffSolution:
    """Unique root y in (0, 1] of 1 - y = lam * hemi_mean(y, 1, sigma).

    Bisection on the bracket with Newton refinement; the derivative of the
    hemi-mean in the strike is Phi(d1).
    """
    if not (math.isfinite(lam) and math.isfinite(sigma)) or lam < 0 or sigma < 0:
        raise ValueError("lam and sigma must be finite and non-negative")
    if lam == 0 or sigma == 0:
        return CutoffSolution(1.0, 0.0, 0)

    def g(y):
        return 1.0 - y - lam * hemi_mean(y, 1.0, sigma)

    def dg(y):
        d1 = (math.log(y) + 0.5 * sigma * sigma) / sigma
        return -1.0 - lam * normal_cdf(d1)

    lo, hi = 0.0, 1.0  # g(0+) = 1 > 0, g(1) < 0
    y = 1.0 / (1.0 + lam * at_the_money(sigma))
    it = 0
    for it in range(1, max_iter + 1):
        gy = g(y)
        if gy > 0:
            lo = y
        else:
            hi = y
        if abs(gy) < 1e-15 or hi - lo < tol:
            break
        step = y - gy / dg(y)
        new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(new - y) < tol:
            y = new
            break
        y = new
    return CutoffSolution(y, abs(g(y)), it)
