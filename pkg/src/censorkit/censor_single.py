"""Single-agent censor: decay intensity, closed-form valuation decay, cutoff
inversion and re-initialization at disclosures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathkit import at_the_money
from .params import DerivedParams, IntensityTable
from .regression import beta_at

CONVENTIONS = ("unscaled", "kappa", "kappa_sq")
DEFAULT_CONVENTION = "kappa_sq"


def sigma_hat_sq(derived: DerivedParams, i: int, t: float, convention: str = DEFAULT_CONVENTION) -> float:
    """Log-variance of the valuation multiplier that drives the decay.

    unscaled: alpha^2 (s0^2 + s_i^2)(1-t)
    kappa:    kappa alpha^2 (s0^2 + s_i^2)(1-t)
    kappa_sq: kappa^2 alpha^2 (s0^2 + s_i^2)(1-t)
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    tau = max(1.0 - t, 0.0)
    a = derived.alpha[i]
    kap = derived.kappa1[i]
    base = a * a * (derived.spec.sigma0 ** 2 + derived.sigma_i[i] ** 2) * tau
    power = {"unscaled": 0, "kappa": 1, "kappa_sq": 2}[convention]
    return kap ** power * base


def decay_intensity(derived: DerivedParams, i: int, t: float, lambda_t: float,
                    convention: str = DEFAULT_CONVENTION) -> float:
    """nu_t = lambda_t * (2 Phi(sigma_hat_t / 2) - 1)."""
    if lambda_t == 0:
        return 0.0
    return lambda_t * at_the_money(math.sqrt(sigma_hat_sq(derived, i, t, convention)))


def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-12, max_depth: int = 50) -> float:
    """Adaptive composite Simpson with Richardson correction."""
    if b <= a:
        return 0.0
    fa, fb = fn(a), fn(b)
    c = 0.5 * (a + b)
    fc = fn(c)
    whole = (b - a) * (fa + 4 * fc + fb) / 6.0

    def rec(a, b, fa, fb, fc, whole, tol, depth):
        c = 0.5 * (a + b)
        d, e = 0.5 * (a + c), 0.5 * (c + b)
        fd, fe = fn(d), fn(e)
        left = (c - a) * (fa + 4 * fd + fc) / 6.0
        right = (b - c) * (fc + 4 * fe + fb) / 6.0
        diff = left + right - whole
        if depth >= max_depth or abs(diff) <= 15 * tol:
            return left + right + diff / 15.0
        return (rec(a, c, fa, fc, fd, left, tol / 2, depth + 1)
                + rec(c, b, fc, fb, fe, right, tol / 2, depth + 1))

    return rec(a, b, fa, fb, fc, whole, tol, 0)


def nu_integral(derived: DerivedParams, i: int, a: float, b: float,
                convention: str = DEFAULT_CONVENTION, table: IntensityTable | None = None,
                tol: float = 1e-12) -> float:
    """int_a^b nu_s ds, integrated piece by piece over the intensity table."""
    lam = derived.spec.lam[i] if table is None else table
    total = 0.0
    for lo, hi, rate in lam.pieces(a, b):
        if rate == 0:
            continue
        fn = lambda s: rate * at_the_money(math.sqrt(sigma_hat_sq(derived, i, s, convention)))
        total += adaptive_simpson(fn, lo, hi, tol)
    return total


def cumulative_nu(derived: DerivedParams, i: int, times, convention: str = DEFAULT_CONVENTION,
                  tol: float = 1e-12) -> np.ndarray:
    """Running integral C(t_k) = int_{t_0}^{t_k} nu, on increasing times."""
    times = np.asarray(times, dtype=float)
    out = np.zeros(len(times))
    acc = 0.0
    for k in range(1, len(times)):
        acc += nu_integral(derived, i, times[k - 1], times[k], convention, tol=tol)
        out[k] = acc
    return out


@dataclass(frozen=True)
class DecaySegment:
    start: float
    anchor: float
    end: float
    times: np.ndarray
    nu_integral: np.ndarray

    @property
    def gamma_hat(self) -> np.ndarray:
        return np.exp(-self.nu_integral)

    @property
    def gamma_tilde(self) -> np.ndarray:
        return self.anchor * self.gamma_hat

    def bond(self, t: float, s: float) -> float:
        """B(t, s) = gamma_hat_s / gamma_hat_t."""
        ct = np.interp(t, self.times, self.nu_integral)
        cs = np.interp(s, self.times, self.nu_integral)
        return math.exp(-(cs - ct))


def decay_segment(derived: DerivedParams, i: int, anchor_time: float, anchor_value: float,
                  end_time: float = 1.0, table: IntensityTable | None = None,
                  convention: str = DEFAULT_CONVENTION, n: int = 1000) -> DecaySegment:
    if not anchor_time < end_time <= 1.0:
        raise ValueError("inverted interval: need anchor_time < end_time <= 1")
    if anchor_value <= 0:
        raise ValueError("anchor value must be positive")
    lam = derived.spec.lam[i] if table is None else table
    times = np.linspace(anchor_time, end_time, n + 1)
    knots = np.union1d(times, [b for b in lam.breaks if anchor_time < b < end_time])
    acc = np.zeros(len(knots))
    for k in range(1, len(knots)):
        acc[k] = acc[k - 1] + nu_integral(derived, i, knots[k - 1], knots[k], convention, lam)
    return DecaySegment(anchor_time, anchor_value, end_time, knots, acc)


def rk4_decay(derived: DerivedParams, i: int, anchor_time: float, anchor_value: float,
              end_time: float, step: float = 1e-4, table: IntensityTable | None = None,
              convention: str = DEFAULT_CONVENTION):
    """Independent route: integrate g' = -nu(t) g with classical RK4."""
    lam = derived.spec.lam[i] if table is None else table

    # Step boundaries include the table's breaks so rates never jump mid-step.
    cuts = [anchor_time] + [b for b in lam.breaks if anchor_time < b < end_time] + [end_time]
    ts, gs = [anchor_time], [anchor_value]
    g = anchor_value
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
        h = (hi - lo) / n
        rate = lam.value(0.5 * (lo + hi))
        f = lambda t, g: -rate * at_the_money(math.sqrt(sigma_hat_sq(derived, i, t, convention))) * g
        t = lo
        for k in range(n):
            k1 = f(t, g)
            k2 = f(t + h / 2, g + h / 2 * k1)
            k3 = f(t + h / 2, g + h / 2 * k2)
            k4 = f(t + h, g + h * k3)
            g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = lo + (k + 1) * h
            ts.append(t)
            gs.append(g)
    return np.array(ts), np.array(gs)


def reinitialize(derived: DerivedParams, i: int, t: float, y_disclosed: float,
                 beta_convention: str = "exact") -> float:
    """Valuation right after agent i discloses y at t: k * beta_t * y**kappa."""
    if y_disclosed <= 0:
        raise ValueError("disclosed observation must be positive")
    k = float(derived.k_single[i])
    return k * beta_single(derived, i, t, beta_convention) * y_disclosed ** derived.kappa1[i]


def beta_single(derived: DerivedParams, i: int, t: float, beta_convention: str = "exact") -> float:
    """Pairwise (agent plus common factor) beta, used by the single-agent censor."""
    if derived.m == 1:
        return beta_at(derived, 0, t, beta_convention)
    from .params import derive
    spec = derived.spec
    sub = derive(spec.replace(m=1, sigmaM=(spec.sigmaM[i],), alpha=(spec.alpha[i],),
                              f=(spec.f[i],), lam=(spec.lam[i],), m0=(spec.m0[i],)))
    return beta_at(sub, 0, t, beta_convention)


def invert_cutoff(derived: DerivedParams, i: int, t: float, gamma_tilde: float,
                  beta_convention: str = "exact") -> float:
    """Observation cutoff (gamma_tilde / (k beta_t))**(1/kappa)."""
    if gamma_tilde <= 0:
        raise ValueError("valuation cutoff must be positive")
    k = float(derived.k_single[i])
    return (gamma_tilde / (k * beta_single(derived, i, t, beta_convention))) ** (1.0 / derived.kappa1[i])


@dataclass(frozen=True)
class CensorPoint:
    t: float
    gamma_tilde: float
    gamma_obs: float
    nu: float


def censor_schedule(derived: DerivedParams, i: int, anchor_time: float, anchor_value: float,
                    times, convention: str = DEFAULT_CONVENTION,
                    beta_convention: str = "exact") -> list:
    """Cutoffs and decay intensities at the requested times of a silent interval."""
    times = np.asarray(times, dtype=float)
    lam = derived.spec.lam[i]
    out = []
    acc = 0.0
    prev = anchor_time
    for t in times:
        acc += nu_integral(derived, i, prev, t, convention, lam)
        prev = t
        gt = anchor_value * math.exp(-acc)
        go = invert_cutoff(derived, i, t, gt, beta_convention)
        out.append(CensorPoint(float(t), gt, go, decay_intensity(derived, i, t, lam.value(t), convention)))
    return out


class SingleSchedule:
    """Tabulated single-agent censor on a time grid (same interface as
    ``censor_multi.MultiSchedule`` so the market can use either)."""

    def __init__(self, derived: DerivedParams, times, convention: str = DEFAULT_CONVENTION,
                 beta_convention: str = "exact"):
        if derived.m != 1:
            raise ValueError("SingleSchedule needs a one-agent spec")
        self.derived = derived
        self.times = np.asarray(times, float)
        self.convention = convention
        self.beta_convention = beta_convention
        self.cum_nu = cumulative_nu(derived, 0, self.times, convention)
        self.cum_agg = self.cum_nu
        self.log_beta = np.array([[math.log(beta_at(derived, 0, t, beta_convention)) for t in self.times]])
        self.kappa = float(derived.kappa1[0])
        self.expo = np.array([[self.kappa]])
        self.k = np.array([float(derived.k_single[0])])

    def log_cutoff_shift(self, a, b):
        """log gamma_b - log gamma_a within a silent interval started at a."""
        a, b = np.broadcast_arrays(a, b)
        d = -(self.cum_nu[b] - self.cum_nu[a]) - (self.log_beta[0, b] - self.log_beta[0, a])
        return (d / self.kappa)[None, ...]

    def valuation_decay(self, a, b):
        return np.exp(-(self.cum_nu[b] - self.cum_nu[a]))

    def reinit(self, k_idx, y):
        ly = self.expo @ np.log(np.asarray(y, float))
        lk = np.log(self.k)
        if ly.ndim == 2:
            lk = lk[:, None]
        return np.exp(lk + self.log_beta[:, k_idx] + ly)
