"""Multi-agent censor: partial covariances, amended means, hypothetical
agents, linear aggregation of log cutoffs and the aggregated decay."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .censor_single import adaptive_simpson
from .mathkit import at_the_money, normal_cdf, solve_cutoff
from .params import DerivedParams, ModelSpec, SpecError, tilde_at
from .regression import exponents, law_at, size_constant, terminal_valuation

T_CLAMP = 1.0 - 1e-6
NU_FORMS = ("atm", "literal")


@dataclass(frozen=True)
class CovStructure:
    cov: np.ndarray
    rho: np.ndarray

    @property
    def rho_sq(self) -> np.ndarray:
        return self.rho ** 2


def partial_covariances(spec: ModelSpec, t: float) -> CovStructure:
    """Covariance of w_i = s0 W0 + s_i W_i over the remaining horizon, and the
    multiple correlation of each w_i on the others (via the Schur complement)."""
    if not t < 1:
        raise SpecError("degenerate horizon: t must be < 1")
    tau = 1.0 - t
    s_i = np.asarray(spec.sigmaM) / np.asarray(spec.alpha)
    m = spec.m
    cov = np.full((m, m), spec.sigma0 ** 2 * tau)
    cov[np.diag_indices(m)] += s_i ** 2 * tau
    rho = np.zeros(m)
    if m > 1:
        for i in range(m):
            others = [j for j in range(m) if j != i]
            sub = cov[np.ix_(others, others)]
            c = cov[i, others]
            try:
                resid = cov[i, i] - c @ np.linalg.solve(sub, c)
            except np.linalg.LinAlgError:
                raise SpecError("degenerate correlation: singular covariance") from None
            r2 = 1.0 - resid / cov[i, i]
            rho[i] = math.sqrt(min(max(r2, 0.0), 1.0))
    return CovStructure(cov, rho)


def amended_mean(derived: DerivedParams, i: int, t: float) -> tuple:
    """Amended mean L_{-i}(t); returns (value, clamped).

    The exponents scale like 1/(1-t) and blow up at the horizon, so t is
    clamped to 1 - 1e-6 and the clamp reported.
    """
    clamped = t > T_CLAMP
    if clamped:
        warnings.warn(f"amended mean evaluated at t={t}; clamped to {T_CLAMP}")
        t = T_CLAMP
    tp = tilde_at(derived, t)
    m = derived.m
    a = derived.alpha[i]
    pt = tp.p_tilde
    pti = tp.p_tilde_i[i]
    expo = (a * (m - 1) + a * (a - 1)) / (2 * (pt - pti)) - (m * a + a * (a - 1)) / (2 * pt)
    return math.exp(expo), clamped


def sigma_hyp(derived: DerivedParams, i: int, t: float, cov: CovStructure | None = None) -> float:
    tau = max(1.0 - t, 0.0)
    if cov is None:
        cov = partial_covariances(derived.spec, min(t, T_CLAMP))
    s0i = math.sqrt(tau * (derived.spec.sigma0 ** 2 + derived.sigma_i[i] ** 2))
    return derived.alpha[i] * derived.kappa[i + 1] * s0i * math.sqrt(1.0 - cov.rho[i] ** 2)


def nu_hyp_rate(lam: float, sig: float, form: str = "atm") -> float:
    """Thinned intensity of a hypothetical agent.

    "atm" is lam * (2 Phi(sig/2) - 1); "literal" is lam * Phi(sig/2), which
    does not vanish as sig -> 0.
    """
    if form == "atm":
        return lam * at_the_money(sig) if lam else 0.0
    if form == "literal":
        return lam * normal_cdf(0.5 * sig)
    raise ValueError(f"unknown form {form!r}")


@dataclass(frozen=True)
class HypotheticalAgent:
    sigma_hyp: float
    L: float
    g: float
    nu_hyp: float
    clamped: bool = False


def hypothetical_cutoff(derived: DerivedParams, i: int, t: float, lambda_i: float | None = None,
                        form: str = "atm") -> HypotheticalAgent:
    lam = derived.spec.lam[i].value(t) if lambda_i is None else lambda_i
    sig = sigma_hyp(derived, i, t)
    L, clamped = amended_mean(derived, i, t)
    g = solve_cutoff(lam, sig).y * L
    return HypotheticalAgent(sig, L, g, nu_hyp_rate(lam, sig, form), clamped)


def _check_k0(derived):
    if derived.kappa[0] == 0:
        raise SpecError("kappa_0 = 0: aggregation undefined")


def aggregate_cutoffs(gs, derived: DerivedParams) -> np.ndarray:
    """Static aggregation: per-agent log observation cutoffs log y^i from the
    hypothetical cutoffs g_j.  log y^i = alpha_i log ytilde^i."""
    _check_k0(derived)
    lg = np.log(np.asarray([h.g if isinstance(h, HypotheticalAgent) else h for h in gs], float))
    a = derived.alpha
    k = derived.kappa[1:]
    km = derived.kappa_minus
    common = (k / (a * km) * lg).sum() / derived.kappa[0]
    log_ytilde = lg / (a * km) + common
    return a * log_ytilde


def dynamic_log_shift(int_nu_hyp, derived: DerivedParams) -> np.ndarray:
    """Change in log observation cutoffs from accumulated hypothetical decay.

    log y^i_t - log y^i_theta = -(1/k_{-i}) I_i
                                - (1/k_0) sum_j k_j (alpha_i/alpha_j)(1/k_{-j}) I_j
    Broadcasts over trailing axes of ``int_nu_hyp`` (shape (m, ...)).
    """
    _check_k0(derived)
    I = np.asarray(int_nu_hyp, float)
    a = derived.alpha
    k = derived.kappa[1:]
    km = derived.kappa_minus
    sh = (len(a),) + (1,) * (I.ndim - 1)
    common = ((k / (a * km)).reshape(sh) * I).sum(axis=0) / derived.kappa[0]
    return -(I / km.reshape(sh)) - a.reshape(sh) * common


def aggregation_weights(derived: DerivedParams) -> np.ndarray:
    a = derived.alpha
    k = derived.kappa[1:]
    km = derived.kappa_minus
    inner = 1.0 + (a[None, :] / a[:, None] * k[None, :]).sum(axis=1) / derived.kappa[0]
    return k / km * inner


def aggregated_intensity(hyps, derived: DerivedParams) -> float:
    nus = np.asarray([h.nu_hyp if isinstance(h, HypotheticalAgent) else h for h in hyps], float)
    return float((aggregation_weights(derived) * nus).sum())


def multi_valuation(anchor: float, int_nu_agg: float) -> float:
    """Valuation during silence: re-initialized anchor times exp(-int nu_agg).

    The anchor already carries k * beta at the anchor date.
    """
    if anchor <= 0:
        raise ValueError("anchor must be positive")
    return anchor * math.exp(-int_nu_agg)


def multi_reinitialize(derived: DerivedParams, i: int, t: float, disclosed: dict, carried: dict,
                       beta_convention: str = "exact") -> float:
    """k beta_t <y^kappa> with disclosed coordinates replacing carried ones."""
    if not disclosed:
        raise ValueError("empty disclosure set")
    y = np.array([disclosed[j] if j in disclosed else carried[j] for j in range(derived.m)], float)
    beta = 1.0 if t >= 1 else law_at(derived, i, t, beta_convention).beta
    return beta * terminal_valuation(derived, i, y, beta_convention)


# ---------------------------------------------------------------- schedules

def nu_hyp_integral(derived: DerivedParams, i: int, a: float, b: float, form: str = "atm",
                    tol: float = 1e-12) -> float:
    lam = derived.spec.lam[i]
    rho = partial_covariances(derived.spec, 0.0).rho[i]
    a_i = derived.alpha[i]
    kap = derived.kappa[i + 1]
    base = derived.spec.sigma0 ** 2 + derived.sigma_i[i] ** 2
    total = 0.0
    for lo, hi, rate in lam.pieces(a, b):
        if rate == 0:
            continue
        fn = lambda s: nu_hyp_rate(rate, a_i * kap * math.sqrt(max(1 - s, 0.0) * base)
                                   * math.sqrt(1 - rho ** 2), form)
        total += adaptive_simpson(fn, lo, hi, tol)
    return total


class MultiSchedule:
    """Cutoff and valuation tables on a time grid.

    Everything that depends only on time (accumulated hypothetical decay, the
    aggregated decay and the beta clocks) is tabulated once; anchors are
    applied per path.
    """

    def __init__(self, derived: DerivedParams, times, form: str = "atm",
                 beta_convention: str = "exact"):
        self.derived = derived
        self.times = np.asarray(times, float)
        self.form = form
        self.beta_convention = beta_convention
        m = derived.m
        cum = np.zeros((m, len(self.times)))
        for i in range(m):
            for k in range(1, len(self.times)):
                cum[i, k] = cum[i, k - 1] + nu_hyp_integral(
                    derived, i, self.times[k - 1], self.times[k], form)
        self.cum_hyp = cum
        self.cum_agg = aggregation_weights(derived) @ cum
        self.log_beta = np.array([[0.0 if t >= 1 else math.log(law_at(derived, i, t, beta_convention).beta)
                                   for t in self.times] for i in range(m)])
        self.expo = np.array([exponents(derived, i, beta_convention) for i in range(m)])
        self.k = np.array([size_constant(derived, i, beta_convention) for i in range(m)])

    def log_cutoff_shift(self, a: int, b: int) -> np.ndarray:
        """log y_b - log y_a for all agents, grid indices a <= b (broadcasts)."""
        a, b = np.broadcast_arrays(a, b)
        I = self.cum_hyp[:, b] - self.cum_hyp[:, a]
        shift = dynamic_log_shift(I, self.derived)
        dbeta = self.log_beta[:, b] - self.log_beta[:, a]
        return shift - dbeta / self.expo.sum(axis=1).reshape((-1,) + (1,) * (np.ndim(dbeta) - 1))

    def valuation_decay(self, a: int, b: int):
        return np.exp(-(self.cum_agg[b] - self.cum_agg[a]))

    def reinit(self, k_idx: int, y) -> np.ndarray:
        """Per-agent valuations for the observation vector y at grid index k."""
        ly = self.expo @ np.log(np.asarray(y, float))
        lk = np.log(self.k)
        if ly.ndim == 2:
            lk = lk[:, None]
        return np.exp(lk + self.log_beta[:, k_idx] + ly)


@dataclass(frozen=True)
class MultiCensorPoint:
    t: float
    y_cut: np.ndarray
    gamma_tilde: np.ndarray
    nu_agg: float


def multi_schedule_points(derived: DerivedParams, y_anchor, times, form: str = "atm",
                          beta_convention: str = "exact") -> list:
    """Silent-interval schedule starting from observation anchors at times[0]."""
    sch = MultiSchedule(derived, times, form, beta_convention)
    anchors = sch.reinit(0, y_anchor)
    out = []
    for k, t in enumerate(sch.times):
        ycut = np.asarray(y_anchor, float) * np.exp(sch.log_cutoff_shift(0, k))
        gt = anchors * sch.valuation_decay(0, k)
        lam = [derived.spec.lam[j].value(t) for j in range(derived.m)]
        hyps = [nu_hyp_rate(lam[j], sigma_hyp(derived, j, t), form) for j in range(derived.m)]
        out.append(MultiCensorPoint(float(t), ycut, gt, aggregated_intensity(hyps, derived)))
    return out
