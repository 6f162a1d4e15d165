"""Closed-form valuation maps: terminal regression and time-t conditional law.

Two bookkeeping conventions are available for the beta factors:

``"exact"`` (default)
    the moment factors of the log-normal increments of the observations;
    the noise factor carries power one, so its moment factor is 1.
``"loaded"``
    the noise factor raised to the loading, and for m > 1 the
    indiv/agg split built from common-effect and pairwise weights.

Both agree for a single agent with unit loading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mathkit import log_mu
from .params import DerivedParams, SpecError, tilde_at

BETA_CONVENTIONS = ("exact", "loaded")


@dataclass(frozen=True)
class RegressionLaw:
    k: float
    kappa_vec: np.ndarray
    beta_indiv: float
    beta_agg: float
    zhat_logvar: float

    @property
    def beta(self) -> float:
        return self.beta_indiv * self.beta_agg


def _single(derived: DerivedParams) -> bool:
    return derived.m == 1


def exponents(derived: DerivedParams, i: int, beta_convention: str = "exact") -> np.ndarray:
    if beta_convention == "loaded" and not _single(derived):
        return derived.kappa[1:].copy()
    if _single(derived):
        return np.array([derived.kappa1[0]])
    return derived.expo[i].copy()


def size_constant(derived: DerivedParams, i: int, beta_convention: str = "exact") -> float:
    if _single(derived):
        return float(derived.k_single[0])
    if beta_convention == "loaded":
        f = np.asarray(derived.spec.f)
        return float(f[i] * np.exp(-(derived.kappa[1:] * np.log(f)).sum()))
    return float(derived.k_multi[i])


def terminal_valuation(derived: DerivedParams, i: int, y, beta_convention: str = "exact"):
    """Valuation of agent i's output given the terminal observation vector y.

    ``y`` has length m (or is a scalar for m = 1); trailing axes broadcast.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("observations must be strictly positive")
    e = exponents(derived, i, beta_convention)
    k = size_constant(derived, i, beta_convention)
    if y.ndim == 0:
        y = y[None]
    ly = np.log(y)
    e = e.reshape((len(e),) + (1,) * (ly.ndim - 1))
    out = k * np.exp((e * ly).sum(axis=0))
    return float(out) if out.ndim == 0 else out


def law_at(derived: DerivedParams, i: int, t: float, beta_convention: str = "exact") -> RegressionLaw:
    """Parameters of the time-t law of agent i's terminal valuation given Y_t = y.

    The conditional mean is k * beta * prod_j y_j**kappa_vec[j] and the
    multiplier around it is a unit-mean log-normal with log-variance
    ``zhat_logvar``.
    """
    if beta_convention not in BETA_CONVENTIONS:
        raise ValueError(f"unknown beta convention {beta_convention!r}")
    tp = tilde_at(derived, t)
    alpha = derived.alpha
    e = exponents(derived, i, beta_convention)
    k = size_constant(derived, i, beta_convention)
    s0 = tp.sigma0_sq
    si = tp.sigma_i_sq
    if _single(derived):
        a = alpha[0]
        kap = e[0]
        log_agg = log_mu(kap, a * a * tp.sigma0i_sq[0])
        if beta_convention == "exact":
            log_ind = kap * log_mu(a, s0)
        else:
            log_ind = kap * (log_mu(a, s0) + log_mu(a, a * a * si[0]))
        var = kap * kap * a * a * tp.sigma0i_sq[0]
    elif beta_convention == "exact":
        big_a = float((e * alpha).sum())
        log_tot = log_mu(big_a, s0) + log_mu(e, alpha ** 2 * si).sum()
        log_agg = log_mu(e, alpha ** 2 * tp.sigma0i_sq).sum()
        log_ind = log_tot - log_agg
        var = big_a ** 2 * s0 + (e ** 2 * alpha ** 2 * si).sum()
    else:
        kbar = 1.0 - derived.kappa[0]
        kap = derived.kappa[1:]
        log_ind = log_mu(alpha[i], kbar * s0) + log_mu(derived.kappa1[i], kbar * si[i])
        log_agg = log_mu(kap, tp.sigma0i_sq).sum()
        var = (kap ** 2 * tp.sigma0i_sq).sum()
    return RegressionLaw(k, e, float(np.exp(log_ind)), float(np.exp(log_agg)), float(var))


def conditional_mean(derived: DerivedParams, i: int, t: float, y, beta_convention: str = "exact"):
    """E[terminal valuation | Y_t = y] = k * beta_t * <y^kappa>."""
    law = law_at(derived, i, t, beta_convention)
    return law.beta * terminal_valuation(derived, i, y, beta_convention)


def beta_at(derived: DerivedParams, i: int, t: float, beta_convention: str = "exact") -> float:
    if t >= 1.0:
        return 1.0
    return law_at(derived, i, t, beta_convention).beta


def check_m(derived: DerivedParams, i: int):
    if not 0 <= i < derived.m:
        raise SpecError(f"agent index {i} out of range")
