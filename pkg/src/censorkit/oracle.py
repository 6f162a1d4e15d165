"""Monte Carlo and brute-force checks of the equilibrium claims.

The estimation side only uses simulated paths, bin membership and raw
sample statistics.  Engine closed forms appear on the claim side (the value
being checked) and as the censoring policy that generates the silent
history, never inside an estimator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .censor_multi import (MultiSchedule, aggregated_intensity, amended_mean, nu_hyp_rate,
                           partial_covariances, sigma_hyp)
from .censor_single import CONVENTIONS, DEFAULT_CONVENTION, SingleSchedule, decay_intensity
from .market import build_schedule, simulate_game
from .mathkit import hemi_mean, solve_cutoff
from .params import ModelSpec, derive, tilde_at
from .paths import TimeGrid
from .regression import law_at, terminal_valuation

SCHEMA = "censorkit.report/1"
BIN_HALF_WIDTH = 0.005      # half-width of conditioning bins in log-observation space
MIN_BIN_COUNT = 1000
CHUNK = 1_000_000


@dataclass
class Report:
    claim: str
    estimates: dict
    se: dict
    verdict: bool
    details: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.verdict)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "claim": self.claim, "estimates": _plain(self.estimates),
                "se": _plain(self.se), "verdict": "pass" if self.verdict else "fail",
                "details": _plain(self.details), "warnings": list(self.warnings)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


class StarvationError(RuntimeError):
    """Too few samples in a conditioning set."""


# ------------------------------------------------------------ estimators

def sample_mean(v) -> tuple:
    v = np.asarray(v, float)
    if len(v) < 2:
        raise StarvationError(f"empty conditioning set ({len(v)} samples)")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v))), len(v)


def local_mean(x, v, center, half_width: float = BIN_HALF_WIDTH, min_count: int = MIN_BIN_COUNT,
               max_doublings: int = 8) -> dict:
    """Estimate E[v | x = center] from samples in a box around center.

    x has shape (d, n) (or (n,)).  A local linear fit inside the box removes
    the first-order bias of plain bin averaging; the intercept's standard
    error comes from the usual least-squares covariance.  The box is doubled
    until it holds ``min_count`` samples, and the widening is reported.
    """
    x = np.atleast_2d(np.asarray(x, float))
    v = np.asarray(v, float)
    c = np.atleast_1d(np.asarray(center, float))[:, None]
    dev = x - c
    width = half_width
    for _ in range(max_doublings + 1):
        inside = np.all(np.abs(dev) <= width, axis=0)
        cnt = int(inside.sum())
        if cnt >= min_count:
            break
        width *= 2
    d = x.shape[0]
    if cnt < d + 3:
        raise StarvationError(f"only {cnt} samples near the conditioning point")
    design = np.vstack([np.ones(cnt), dev[:, inside]]).T
    coef, *_ = np.linalg.lstsq(design, v[inside], rcond=None)
    resid = v[inside] - design @ coef
    s2 = resid @ resid / (cnt - d - 1)
    cov = s2 * np.linalg.inv(design.T @ design)
    return {"value": float(coef[0]), "se": float(math.sqrt(cov[0, 0])), "n": cnt,
            "half_width": width, "widened": width > half_width}


def _z(est, se, target):
    return (est - target) / se if se > 0 else (0.0 if est == target else math.inf)


# ------------------------------------------------------------ simulation pieces

def _grid_with(*times, k: int = 1000) -> TimeGrid:
    pts = np.unique(np.round(np.concatenate([np.linspace(0.0, 1.0, k + 1), times]), 12))
    return TimeGrid(pts)


def _index(grid: TimeGrid, t: float) -> int:
    k = int(np.argmin(np.abs(grid.points - t)))
    if abs(grid.points[k] - t) > 1e-12:
        raise ValueError(f"time {t} not on grid")
    return k


def _state_at(spec: ModelSpec, sched, grid: TimeGrid, t: float, n: int, rng):
    """log X_t and log M_t on paths with no voluntary disclosure in (0, t].

    For t = 0 this is the known starting point.  Otherwise the game is run up
    to t under the engine's censor (the policy whose equilibrium is checked)
    and disclosing paths are dropped.
    """
    lx0 = math.log(spec.x0)
    lm0 = np.log(np.asarray(spec.m0, float))
    if t == 0:
        return np.full(n, lx0), np.repeat(lm0[:, None], n, axis=1)
    kt = _index(grid, t)
    g = simulate_game(spec, grid, [kt], n, int(rng.integers(2 ** 63)), sched=sched)
    keep = ~g.disclosed_by[0]
    lx = g.log_x[0][keep]
    a = np.asarray(spec.alpha)[:, None]
    lf = np.log(np.asarray(spec.f))[:, None]
    lm = g.log_y[0][:, keep] - lf - a * lx[None, :]
    return lx, lm


def _advance(spec: ModelSpec, lx, lm, h: float, rng):
    s0 = spec.sigma0
    sm = np.asarray(spec.sigmaM)[:, None]
    n = len(lx)
    lx = lx + s0 * math.sqrt(h) * rng.standard_normal(n) - 0.5 * s0 * s0 * h
    lm = lm + sm * math.sqrt(h) * rng.standard_normal(lm.shape) - 0.5 * sm * sm * h
    return lx, lm


def _log_y(spec: ModelSpec, lx, lm):
    a = np.asarray(spec.alpha)[:, None]
    lf = np.log(np.asarray(spec.f))[:, None]
    return lf + a * lx[None, :] + lm


def _arrived(spec: ModelSpec, t: float, s: float, n: int, rng):
    """Per-agent indicator of at least one private arrival in (t, s]."""
    prob = np.array([1.0 - math.exp(-tab.integral(t, s)) for tab in spec.lam])
    return rng.uniform(size=(spec.m, n)) < prob[:, None]


def _interval_sample(spec, sched, grid, t, s, n, rng):
    """Paths silent up to t, pushed to s and then to 1.

    Returns log Y_s (m, n'), arrival flags in (t, s] (m, n') and Z_1 (m, n').
    """
    lx, lm = _state_at(spec, sched, grid, t, n, rng)
    lx, lm = _advance(spec, lx, lm, s - t, rng)
    ly_s = _log_y(spec, lx, lm)
    arr = _arrived(spec, t, s, len(lx), rng)
    h = 1.0 - s
    lx1 = lx + spec.sigma0 * math.sqrt(h) * rng.standard_normal(len(lx)) - 0.5 * spec.sigma0 ** 2 * h
    z1 = np.asarray(spec.f)[:, None] * np.exp(np.asarray(spec.alpha)[:, None] * lx1[None, :])
    return ly_s, arr, z1


def engine_state(spec: ModelSpec, t: float, s: float, convention: str = DEFAULT_CONVENTION,
                 form: str = "atm", grid: TimeGrid | None = None):
    """Engine valuations and observation cutoffs along the silent path from 0."""
    derived = derive(spec)
    grid = grid or _grid_with(t, s)
    sched = build_schedule(derived, grid.points, convention, form)
    y0 = np.exp(_log_y(spec, np.array([math.log(spec.x0)]),
                       np.log(np.asarray(spec.m0, float))[:, None])[:, 0])
    anchors = sched.reinit(0, y0)
    kt, ks = _index(grid, t), _index(grid, s)
    out = {}
    for name, k in (("t", kt), ("s", ks)):
        out["gamma_tilde_" + name] = anchors * sched.valuation_decay(0, k)
        out["gamma_obs_" + name] = y0 * np.exp(sched.log_cutoff_shift(0, k))
    return derived, sched, grid, out


# ------------------------------------------------------------ oracles

def indifference_check(spec: ModelSpec, t: float, s: float, cutoff=None, n_paths: int = 1_000_000,
                       seed: int = 0, convention: str = DEFAULT_CONVENTION, threshold: float = 3.0,
                       agent: int = 0) -> Report:
    """Non-disclosure mean versus at-cutoff mean versus the engine's valuation.

    ND_s(gamma): no private arrival in (t, s], or one with Y_s below gamma.
    ``cutoff`` is in observation space; by default the engine's cutoff at s.
    """
    if not 0 <= t < s < 1:
        raise ValueError("need 0 <= t < s < 1")
    if n_paths < 100_000:
        raise ValueError("n_paths must be at least 1e5")
    derived, sched, grid, eng = engine_state(spec, t, s, convention)
    g_obs = float(eng["gamma_obs_s"][agent]) if cutoff is None else float(cutoff)
    g_val = float(eng["gamma_tilde_s"][agent])
    rng = np.random.default_rng(seed)
    ly, arr, z1 = _interval_sample(spec, sched, grid, t, s, n_paths, rng)
    lg = math.log(g_obs)
    nd = ~(arr[agent] & (ly[agent] >= lg))
    nd_mean, nd_se, nd_n = sample_mean(z1[agent][nd])
    warn = []
    try:
        at = local_mean(ly[agent], z1[agent], lg)
    except StarvationError as exc:
        at = {"value": None, "se": None, "n": 0, "widened": True}
        warn.append(f"at-cutoff mean unavailable: {exc}")
    if at["widened"] and at["n"]:
        warn.append(f"conditioning bin widened to +-{at['half_width']:.4g} (bias risk)")
    z_nd = _z(nd_mean, nd_se, g_val)
    z_at = _z(at["value"], at["se"], g_val) if at["n"] else None
    ok = abs(z_nd) < threshold and z_at is not None and abs(z_at) < threshold
    return Report("indifference",
                  {"nd_mean": nd_mean, "at_cutoff_mean": at["value"], "engine_gamma_tilde": g_val,
                   "cutoff_obs": g_obs},
                  {"nd_mean": nd_se, "at_cutoff_mean": at["se"]}, ok,
                  {"t": t, "s": s, "n_paths": n_paths, "n_silent": int(ly.shape[1]), "n_nd": nd_n,
                   "n_bin": at["n"], "z_nd": z_nd, "z_at_cutoff": z_at, "threshold": threshold,
                   "convention": convention, "seed": seed}, warn)


def lpm_residual_check(spec: ModelSpec, t: float, s: float, cutoff=None, n_paths: int = 1_000_000,
                       seed: int = 0, convention: str = DEFAULT_CONVENTION,
                       threshold: float = 3.0) -> Report:
    """Both sides of the lower-partial-moment relation

        (1 - q)(gamma~_t - gamma~_s) = q E[(gamma~_s - Z^est_s)^+],  q = (s - t) lambda_t,

    where Z^est_s = E[Z_1 | Y_s] is read off the regression map.  The
    residual is reported per unit of (s - t).  At t = 0 the right side also
    has the put-formula value, compared with the MC estimate.
    """
    if not 0 <= t < s < 1:
        raise ValueError("need 0 <= t < s < 1")
    derived, sched, grid, eng = engine_state(spec, t, s, convention)
    gt = float(eng["gamma_tilde_t"][0])
    gs = float(eng["gamma_tilde_s"][0])
    q = (s - t) * spec.lam[0].value(t)
    lhs = (1 - q) * (gt - gs)
    rng = np.random.default_rng(seed)
    lx, lm = _state_at(spec, sched, grid, t, n_paths, rng)
    lx, lm = _advance(spec, lx, lm, s - t, rng)
    y_s = np.exp(_log_y(spec, lx, lm))
    law = law_at(derived, 0, s)
    z_est = law.beta * terminal_valuation(derived, 0, y_s)
    put = np.maximum(gs - z_est, 0.0)
    pm, pse, _ = sample_mean(put)
    rhs = q * pm
    h = s - t
    est = {"lhs": lhs, "rhs_mc": rhs, "residual_per_unit": (lhs - rhs) / h,
           "gamma_tilde_t": gt, "gamma_tilde_s": gs, "q": q}
    se = {"rhs_mc": q * pse, "residual_per_unit": q * pse / h}
    details = {"t": t, "s": s, "n_paths": n_paths, "seed": seed, "convention": convention}
    ok = True
    if t == 0:
        a = derived.alpha[0]
        kap = derived.kappa1[0]
        vol = kap * a * math.sqrt((spec.sigma0 ** 2 + derived.sigma_i[0] ** 2) * h)
        cf = q * hemi_mean(gs, gt, vol)
        est["rhs_closed_form"] = cf
        details["z_mc_vs_closed_form"] = _z(rhs, q * pse, cf)
        ok = abs(details["z_mc_vs_closed_form"]) < threshold
    return Report("lpm_residual", est, se, ok, details)


def lpm_order_check(spec: ModelSpec, t: float = 0.0, widths=(1e-2, 1e-3), n_paths: int = 1_000_000,
                    seed: int = 0, convention: str = DEFAULT_CONVENTION,
                    min_ratio: float = 5.0) -> Report:
    """Normalized residual at the wide interval over that at the narrow one."""
    reps = [lpm_residual_check(spec, t, t + w, n_paths=n_paths, seed=seed + j, convention=convention)
            for j, w in enumerate(widths)]
    r = [rep.estimates["residual_per_unit"] for rep in reps]
    ratio = abs(r[0]) / abs(r[1]) if r[1] != 0 else math.inf
    return Report("lpm_order", {"residual_per_unit": r, "ratio": ratio},
                  {"residual_per_unit": [rep.se["residual_per_unit"] for rep in reps]},
                  ratio >= min_ratio,
                  {"widths": list(widths), "min_ratio": min_ratio,
                   "sub_reports": [rep.to_dict() for rep in reps]})


def martingale_check(spec: ModelSpec, pairs, n_paths: int = 1_000_000, seed: int = 0,
                     convention: str = DEFAULT_CONVENTION, k: int = 1000, threshold: float = 3.0,
                     agent: int = 0) -> Report:
    """E[S_s | silent public history up to t] against S_t, for each (t, s)."""
    times = sorted({x for p in pairs for x in p})
    grid = _grid_with(*times, k=k)
    derived = derive(spec)
    sched = build_schedule(derived, grid.points, convention)
    rows = []
    ok = True
    for j, (t, s) in enumerate(pairs):
        if not t < s:
            raise ValueError("need t < s")
        kt, ks = _index(grid, t), _index(grid, s)
        g = simulate_game(spec, grid, [kt, ks], n_paths, seed + j, sched=sched)
        keep = ~g.disclosed_by[0]
        if keep.sum() < 100:
            raise StarvationError(f"only {int(keep.sum())} qualifying paths")
        st = g.price[0, agent, keep]
        diff = g.price[1, agent, keep] - st[0]
        mean, se, cnt = sample_mean(diff)
        zz = _z(mean, se, 0.0)
        ok &= abs(zz) < threshold
        rows.append({"t": t, "s": s, "n": cnt, "s_t": float(st[0]), "mean_s_s": float(st[0] + mean),
                     "diff": mean, "se": se, "z": zz})
    return Report("martingale", {"pairs": rows}, {"diff": [r["se"] for r in rows]}, ok,
                  {"n_paths": n_paths, "seed": seed, "threshold": threshold,
                   "convention": convention})


def nash_check(spec: ModelSpec, t: float, s: float, cutoffs=None, n_paths: int = 10_000_000,
               seed: int = 0, threshold: float = 3.0, chunk: int = CHUNK) -> Report:
    """Per agent: E[Z^i | all silent] against E[Z^i | others silent, Y^i_s = gamma^i].

    ``cutoffs`` are per-agent observation cutoffs at s (engine's by default).
    Paths are processed in chunks; only the samples near each agent's cutoff
    are kept for the local fit.
    """
    if spec.m < 2:
        raise ValueError("nash_check needs m >= 2")
    if not 0 <= t < s < 1:
        raise ValueError("need 0 <= t < s < 1")
    m = spec.m
    derived, sched, grid, eng = engine_state(spec, t, s)
    g = np.asarray(eng["gamma_obs_s"] if cutoffs is None else cutoffs, float)
    lg = np.log(g)
    rng = np.random.default_rng(seed)
    sums = np.zeros(m)
    sq = np.zeros(m)
    cnt = 0
    near_x = [[] for _ in range(m)]
    near_v = [[] for _ in range(m)]
    n_silent = 0
    done = 0
    while done < n_paths:
        n = min(chunk, n_paths - done)
        done += n
        ly, arr, z1 = _interval_sample(spec, sched, grid, t, s, n, rng)
        n_silent += ly.shape[1]
        disc = arr & (ly >= lg[:, None])
        nd_all = ~disc.any(axis=0)
        sums += z1[:, nd_all].sum(axis=1)
        sq += (z1[:, nd_all] ** 2).sum(axis=1)
        cnt += int(nd_all.sum())
        for i in range(m):
            others = np.ones(ly.shape[1], bool)
            for j in range(m):
                if j != i:
                    others &= ~disc[j]
            close = others & (np.abs(ly[i] - lg[i]) <= 64 * BIN_HALF_WIDTH)
            near_x[i].append(ly[i][close])
            near_v[i].append(z1[i][close])
    if cnt < 2:
        raise StarvationError("no jointly silent paths")
    nd_mean = sums / cnt
    nd_se = np.sqrt(np.maximum(sq / cnt - nd_mean ** 2, 0.0) * cnt / (cnt - 1) / cnt)
    at_val, at_se, n_bin, rows = [], [], [], []
    warn = []
    for i in range(m):
        est = local_mean(np.concatenate(near_x[i]), np.concatenate(near_v[i]), lg[i])
        if est["widened"]:
            warn.append(f"agent {i + 1}: bin widened to +-{est['half_width']:.4g}")
        at_val.append(est["value"])
        at_se.append(est["se"])
        n_bin.append(est["n"])
    diff = np.array(at_val) - nd_mean
    dse = np.sqrt(np.array(at_se) ** 2 + nd_se ** 2)
    z = diff / dse
    ok = bool(np.all(np.abs(z) < threshold))
    return Report("nash",
                  {"nd_mean": nd_mean, "at_cutoff_mean": at_val, "cutoffs": g,
                   "engine_gamma_tilde": eng["gamma_tilde_s"]},
                  {"nd_mean": nd_se, "at_cutoff_mean": at_se, "difference": dse}, ok,
                  {"t": t, "s": s, "n_paths": n_paths, "n_silent": n_silent, "n_nd": cnt,
                   "effective_bin_size": n_bin, "z": z, "threshold": threshold, "seed": seed}, warn)


def regression_check(spec: ModelSpec, t: float, n_paths: int = 1_000_000, seed: int = 0,
                     agent: int = 0, threshold: float = 3.0, point=None) -> Report:
    """Terminal valuation k <y^kappa> against E[Z_1 | Y_1 near y], and the
    time-t mean k beta_t <y^kappa> against the mean of k <Y_1^kappa> given Y_t
    near y.

    The terminal check presumes the starting point is consistent with the
    regression (see ``params.common_sized``); the time-t check holds for any
    start because the observation increments after t are independent of Y_t.
    """
    derived = derive(spec)
    rng = np.random.default_rng(seed)
    lx, lm = _advance(spec, np.full(n_paths, math.log(spec.x0)),
                      np.repeat(np.log(np.asarray(spec.m0, float))[:, None], n_paths, axis=1), t, rng)
    ly_t = _log_y(spec, lx, lm)
    lx1, lm1 = _advance(spec, lx, lm, 1.0 - t, rng)
    ly_1 = _log_y(spec, lx1, lm1)
    z1 = spec.f[agent] * np.exp(spec.alpha[agent] * lx1)
    c1 = np.median(ly_1, axis=1) if point is None else np.log(np.asarray(point, float))
    ct = np.median(ly_t, axis=1) if point is None else np.log(np.asarray(point, float))
    term = local_mean(ly_1, z1, c1)
    claim_term = float(terminal_valuation(derived, agent, np.exp(c1)))
    v1 = terminal_valuation(derived, agent, np.exp(ly_1))
    cond = local_mean(ly_t, v1, ct)
    law = law_at(derived, agent, t)
    claim_cond = float(law.beta * terminal_valuation(derived, agent, np.exp(ct)))
    z_term = _z(term["value"], term["se"], claim_term)
    z_cond = _z(cond["value"], cond["se"], claim_cond)
    warn = [f"{nm} bin widened to +-{e['half_width']:.4g}" for nm, e in
            (("terminal", term), ("time-t", cond)) if e["widened"]]
    return Report("regression",
                  {"terminal_mc": term["value"], "terminal_claim": claim_term,
                   "conditional_mc": cond["value"], "conditional_claim": claim_cond},
                  {"terminal_mc": term["se"], "conditional_mc": cond["se"]},
                  abs(z_term) < threshold and abs(z_cond) < threshold,
                  {"t": t, "n_paths": n_paths, "seed": seed, "z_terminal": z_term,
                   "z_conditional": z_cond, "n_bin_terminal": term["n"],
                   "n_bin_conditional": cond["n"], "agent": agent}, warn)


# ------------------------------------------------------------ statics

def default_statics_grid():
    """Three-agent specs: 5 noise levels for agent 1 x 5 loadings x 3 times."""
    noise = (0.15, 0.3, 0.5, 0.8, 1.2)
    loads = (0.5, 0.8, 1.0, 1.5, 2.0)
    times = (0.0, 0.4, 0.8)
    return noise, loads, times


def statics_sweep(noise=None, loads=None, times=None, lam: float = 2.0, others=(0.4, 0.6),
                  sigma0: float = 0.5) -> Report:
    """Bandwagon chain and the amended-mean assertions over a parameter grid.

    Agent 1's noise varies over ``noise``; the other agents keep the noise
    levels in ``others``.  All agents share the loading.
    """
    dn, dl, dt = default_statics_grid()
    noise = dn if noise is None else noise
    loads = dl if loads is None else loads
    times = dt if times is None else times
    viol = {"bandwagon": 0, "monotone": 0, "lower_bound": 0, "upper_bound": 0,
            "deflator": 0, "ordering": 0}
    cells = 0
    samples = []
    for a in loads:
        for t in times:
            Ls = []
            for sm in noise:
                sigm = (sm,) + tuple(others)
                m = len(sigm)
                spec = ModelSpec(m, sigma0, tuple(x * a for x in sigm), (a,) * m, (1.0,) * m,
                                 (lam,) * m)
                d = derive(spec)
                cells += 1
                tp = tilde_at(d, t)
                cov = partial_covariances(spec, t)
                Li = [amended_mean(d, i, t)[0] for i in range(m)]
                for i in range(m):
                    s0i = math.sqrt(tp.sigma0i_sq[i])
                    kap = d.kappa[i + 1]
                    c1 = solve_cutoff(lam, s0i).y
                    c2 = solve_cutoff(lam, kap * s0i).y
                    c3 = solve_cutoff(lam, kap * s0i * math.sqrt(1 - cov.rho[i] ** 2)).y
                    if not c1 < c2 < c3:
                        viol["bandwagon"] += 1
                    pi = d.p[i + 1]
                    p = d.p_total
                    lo = math.exp(-a * (1 - t) / (2 * (p - pi)))
                    p_av = (p - pi) / (m - 1 + a)
                    hi = math.exp(a * (1 + (a - 1) / (m - 1)) * (1 - t) / (2 * p_av))
                    if not lo < Li[i]:
                        viol["lower_bound"] += 1
                    if not Li[i] < hi:
                        viol["upper_bound"] += 1
                    if (Li[i] < 1) != (pi < p / (m - 1 + a)):
                        viol["deflator"] += 1
                for i in range(m):
                    for j in range(m):
                        pi, pj = d.p[i + 1], d.p[j + 1]
                        if i != j and pi != pj and (Li[i] < Li[j]) != (pi < pj):
                            viol["ordering"] += 1
                Ls.append((d.p[1], Li[0]))
                samples.append({"alpha": a, "t": t, "sigmaM1": sm, "L": Li,
                                "deflator_threshold": d.p_total / (m - 1 + a), "p1": d.p[1]})
            Ls.sort()
            if any(b[1] <= a_[1] for a_, b in zip(Ls[:-1], Ls[1:])):
                viol["monotone"] += 1
    total = sum(viol.values())
    return Report("statics", {"violations": viol, "cells": cells}, {}, total == 0,
                  {"noise": list(noise), "loads": list(loads), "times": list(times), "lam": lam,
                   "others": list(others), "sigma0": sigma0, "samples": samples[:10]})


# ------------------------------------------------------------ reductions

def reduction_check(spec: ModelSpec, k: int = 1000, convention: str = DEFAULT_CONVENTION,
                    tol: float = 1e-10) -> Report:
    """One-agent multi schedule against the single-agent schedule.

    Also evaluates the literal hypothetical intensity so its failure to reduce
    is on record.
    """
    if spec.m != 1:
        raise ValueError("reduction needs a one-agent spec")
    d = derive(spec)
    grid = TimeGrid.uniform(k)
    single = SingleSchedule(d, grid.points, convention)
    idx = np.arange(len(grid.points))
    out = {}
    for form in ("atm", "literal"):
        multi = MultiSchedule(d, grid.points, form)
        cut = np.max(np.abs(multi.log_cutoff_shift(0, idx) - single.log_cutoff_shift(0, idx)))
        val = np.max(np.abs(multi.valuation_decay(0, idx) - single.valuation_decay(0, idx)))
        rates = []
        for t in grid.points[:-1]:
            lam = spec.lam[0].value(t)
            nu_s = decay_intensity(d, 0, t, lam, convention)
            nu_m = aggregated_intensity([nu_hyp_rate(lam, sigma_hyp(d, 0, t), form)], d)
            rates.append(abs(nu_s - nu_m))
        out[form] = {"cutoff_sup": float(cut), "valuation_sup": float(val),
                     "intensity_sup": float(max(rates))}
    rho = float(partial_covariances(spec, 0.0).rho[0])
    atm = out["atm"]
    ok = max(atm.values()) < tol and rho == 0.0
    lit = out["literal"]
    return Report("reduction", {"atm": atm, "literal": lit, "rho": rho}, {}, ok,
                  {"tol": tol, "convention": convention, "grid": k,
                   "literal_reduces": max(lit.values()) < tol})


def convention_arbitration(specs, t: float = 0.0, s: float = 1e-3, n_paths: int = 1_000_000,
                           seed: int = 0) -> Report:
    """Indifference check per variance convention on each spec; reports the
    largest |z| per convention and which convention wins each cell."""
    table = []
    for j, sp in enumerate(specs):
        row = {}
        for conv in CONVENTIONS:
            rep = indifference_check(sp, t, s, n_paths=n_paths, seed=seed + j, convention=conv)
            row[conv] = max(abs(rep.details["z_nd"]), abs(rep.details["z_at_cutoff"] or math.inf))
        row["winner"] = min(CONVENTIONS, key=lambda c: row[c])
        table.append(row)
    wins = {c: sum(r["winner"] == c for r in table) for c in CONVENTIONS}
    return Report("convention_arbitration", {"cells": table, "wins": wins}, {},
                  all(r["winner"] == DEFAULT_CONVENTION for r in table),
                  {"t": t, "s": s, "n_paths": n_paths, "default": DEFAULT_CONVENTION})


__all__ = ["SCHEMA", "Report", "StarvationError", "local_mean", "sample_mean", "indifference_check",
           "lpm_residual_check", "lpm_order_check", "martingale_check", "nash_check",
           "regression_check", "statics_sweep", "reduction_check", "convention_arbitration",
           "engine_state", "default_spec"]


def default_spec(m: int = 1) -> ModelSpec:
    """Reference spec of the checks: sigma0 = sigmaM = 0.3, unit loadings and
    sizes, constant intensity 2, starting noise set by ``common_sized``."""
    from .params import common_sized, single_agent, symmetric
    base = single_agent(0.3, 0.3, 1.0, 1.0, 2.0) if m == 1 else symmetric(m, 0.3, 0.3, 1.0, 1.0, 2.0)
    return common_sized(base)
