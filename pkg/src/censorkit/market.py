"""The disclosure game along simulated paths: event logs, valuation tracks
and price tracks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .censor_multi import MultiSchedule
from .censor_single import DEFAULT_CONVENTION, SingleSchedule
from .params import DerivedParams, ModelSpec, derive
from .paths import PathBundle, TimeGrid


@dataclass(frozen=True)
class DisclosureEvent:
    t: float
    index: int
    agents: tuple
    values: tuple
    mandatory: bool = False


@dataclass
class ValuationTrack:
    times: np.ndarray
    gamma_tilde: np.ndarray   # (m, K+1) left limits
    s_price: np.ndarray       # (m, K+1) right-continuous
    cutoffs: np.ndarray       # (m, K+1) observation cutoffs in force
    nu: np.ndarray            # (K+1,) aggregated decay intensity on the grid
    events: list = field(default_factory=list)
    index: int = 0


def build_schedule(derived: DerivedParams, times, convention: str = DEFAULT_CONVENTION,
                   form: str = "atm", beta_convention: str = "exact"):
    if derived.m == 1 and form == "atm":
        return SingleSchedule(derived, times, convention, beta_convention)
    return MultiSchedule(derived, times, form, beta_convention)


def _rate_table(sched) -> np.ndarray:
    c = sched.cum_agg
    t = sched.times
    return np.concatenate([np.diff(c) / np.diff(t), [0.0]])


def run_path(sched, bundle: PathBundle) -> ValuationTrack:
    derived = sched.derived
    m = derived.m
    times = sched.times
    K = len(times) - 1
    if len(bundle.grid.points) != len(times) or not np.allclose(bundle.grid.points, times):
        raise ValueError("grid/path mismatch")
    # arrivals per grid index; those snapping onto t = 1 merge with the mandatory event
    arrivals = {}
    for i, arr in enumerate(bundle.arrivals):
        for k in bundle.grid.snap(arr):
            if 0 < k < K:
                arrivals.setdefault(int(k), set()).add(i)
    gt = np.empty((m, K + 1))
    sp = np.empty((m, K + 1))
    cut = np.empty((m, K + 1))
    y0 = bundle.y[:, 0]
    theta, y_anchor = 0, y0.copy()
    anchors = sched.reinit(0, y_anchor)
    events = [DisclosureEvent(0.0, 0, tuple(range(m)), tuple(y0), True)]
    gt[:, 0] = anchors
    sp[:, 0] = anchors
    cut[:, 0] = y_anchor

    def fill(a, b):
        idx = np.arange(a, b + 1)
        dec = sched.valuation_decay(theta, idx)
        gt[:, a:b + 1] = anchors[:, None] * dec[None, :]
        sp[:, a:b + 1] = gt[:, a:b + 1]
        cut[:, a:b + 1] = y_anchor[:, None] * np.exp(sched.log_cutoff_shift(theta, idx))

    last = 0
    for k in sorted(arrivals):
        if k > last + 1:
            fill(last + 1, k - 1)
        fill(k, k)
        obs = bundle.y[:, k]
        who = sorted(j for j in arrivals[k] if obs[j] >= cut[j, k])
        if who:
            y_new = cut[:, k].copy()
            y_new[who] = obs[who]
            events.append(DisclosureEvent(float(times[k]), k, tuple(who), tuple(obs[who])))
            theta, y_anchor = k, y_new
            anchors = sched.reinit(k, y_anchor)
            sp[:, k] = anchors
        last = k
    if K > last + 1:
        fill(last + 1, K - 1)
    fill(K, K)
    y1 = bundle.y[:, K]
    sp[:, K] = sched.reinit(K, y1)
    events.append(DisclosureEvent(1.0, K, tuple(range(m)), tuple(y1), True))
    return ValuationTrack(times, gt, sp, cut, _rate_table(sched), events, bundle.index)


def run_disclosure_game(spec: ModelSpec, paths, convention: str = DEFAULT_CONVENTION,
                        form: str = "atm", beta_convention: str = "exact") -> list:
    if not paths:
        return []
    derived = derive(spec)
    sched = build_schedule(derived, paths[0].grid.points, convention, form, beta_convention)
    return [run_path(sched, b) for b in paths]


def martingale_report(tracks, t: float, s: float, agent: int = 0) -> dict:
    """Compare S_t with the mean of S_s over tracks whose public history up to
    t is identical: no voluntary disclosure in (0, t]."""
    if not t < s:
        raise ValueError("need t < s")
    times = tracks[0].times
    kt = int(np.searchsorted(times, t - 1e-12))
    ks = int(np.searchsorted(times, s - 1e-12))
    keep = [tr for tr in tracks
            if not any((not e.mandatory) and e.index <= kt for e in tr.events)]
    if len(keep) < 100:
        raise ValueError(f"only {len(keep)} qualifying paths")
    st = keep[0].s_price[agent, kt]
    ss = np.array([tr.s_price[agent, ks] for tr in keep])
    diff = ss - st
    se = diff.std(ddof=1) / math.sqrt(len(diff))
    return {"t": t, "s": s, "n": len(diff), "s_t": float(st), "mean_s_s": float(ss.mean()),
            "diff": float(diff.mean()), "se": float(se)}


# ------------------------------------------------------------ vectorized game

@dataclass
class GameSample:
    """Outcome of the vectorized game at a few query grid indices."""

    query: np.ndarray                # grid indices
    price: np.ndarray                # (Q, m, n) S at each query index
    cutoff: np.ndarray               # (Q, m, n) observation cutoffs in force
    disclosed_by: np.ndarray         # (Q, n) True if a voluntary event happened at or before query
    log_y: np.ndarray                # (Q, m, n) log observations at query indices
    log_x: np.ndarray                # (Q, n) log state at query indices
    log_x1: np.ndarray               # (n,) terminal log state
    n_events: np.ndarray             # (n,) voluntary events per path


def _arrival_triples(spec: ModelSpec, grid: TimeGrid, n: int, rng, k_max: int):
    paths, idx, agents = [], [], []
    for i, tab in enumerate(spec.lam):
        for lo, hi, rate in tab.pieces(0.0, 1.0):
            if rate <= 0:
                continue
            cnt = rng.poisson(rate * (hi - lo), n)
            tot = int(cnt.sum())
            if tot == 0:
                continue
            p = np.repeat(np.arange(n), cnt)
            tt = rng.uniform(lo, hi, tot)
            k = grid.snap(tt)
            ok = (k > 0) & (k <= k_max)
            paths.append(p[ok])
            idx.append(k[ok])
            agents.append(np.full(int(ok.sum()), i))
    if not paths:
        return np.empty(0, int), np.empty(0, int), np.empty(0, int)
    return np.concatenate(paths), np.concatenate(idx), np.concatenate(agents)


def simulate_game(spec: ModelSpec, grid: TimeGrid, query, n: int, seed: int, sched=None,
                  convention: str = DEFAULT_CONVENTION, form: str = "atm",
                  beta_convention: str = "exact", cutoff_scale=None) -> GameSample:
    """Run the disclosure game for n paths, vectorized across paths.

    Only the observations at arrival indices and query indices are drawn
    (exact log-normal increments between them), so large n is cheap.
    ``cutoff_scale`` optionally multiplies each agent's observation cutoff
    (used to probe deviations from the engine's censor).
    """
    derived = derive(spec)
    if sched is None:
        sched = build_schedule(derived, grid.points, convention, form, beta_convention)
    m = spec.m
    query = np.asarray(query, int)
    K = len(grid.points) - 1
    k_max = min(int(query.max()), K - 1)
    rng = np.random.default_rng(seed)
    ap, ak, aa = _arrival_triples(spec, grid, n, rng, k_max)
    # points where observations are needed: arrivals, queries, and the horizon
    qp = np.repeat(np.arange(n), len(query) + 1)
    qk = np.tile(np.concatenate([query, [K]]), n)
    allp = np.concatenate([ap, qp])
    allk = np.concatenate([ak, qk])
    key = allp.astype(np.int64) * (K + 1) + allk
    ukey, inv = np.unique(key, return_inverse=True)
    up = ukey // (K + 1)
    uk = ukey % (K + 1)
    first = np.ones(len(ukey), bool)
    first[1:] = up[1:] != up[:-1]
    prev_t = np.where(first, 0.0, np.concatenate([[0.0], grid.points[uk[:-1]]]))
    dt = grid.points[uk] - prev_t
    s0 = spec.sigma0
    sm = np.asarray(spec.sigmaM)[:, None]
    inc_x = s0 * np.sqrt(dt) * rng.standard_normal(len(ukey)) - 0.5 * s0 * s0 * dt
    inc_m = sm * np.sqrt(dt)[None, :] * rng.standard_normal((m, len(ukey))) - 0.5 * sm * sm * dt[None, :]

    starts = np.flatnonzero(first)
    seg_of = np.cumsum(first) - 1

    def group_cumsum(v):
        c = np.cumsum(v, axis=-1)
        base = c[..., np.maximum(starts - 1, 0)]
        base[..., starts == 0] = 0.0
        return c - base[..., seg_of]

    lx = math.log(spec.x0) + group_cumsum(inc_x)
    lm = np.log(np.asarray(spec.m0))[:, None] + group_cumsum(inc_m)
    a = np.asarray(spec.alpha)[:, None]
    lf = np.log(np.asarray(spec.f))[:, None]
    ly = lf + a * lx[None, :] + lm                     # (m, U)
    pos = {int(kk): j for j, kk in enumerate(query)}

    # arrival events grouped by (path, index)
    n_arr = len(ap)
    akey_u = inv[:n_arr]
    order = np.lexsort((ak, ap))
    akey_u = akey_u[order]
    aa_s = aa[order]
    ev_u, ev_start = np.unique(akey_u, return_index=True)
    ev_path = up[ev_u]
    ev_k = uk[ev_u]
    arriving = np.zeros((m, len(ev_u)), bool)
    ev_of = np.repeat(np.arange(len(ev_u)), np.diff(np.concatenate([ev_start, [len(akey_u)]])))
    arriving[aa_s, ev_of] = True
    # rank of each event within its path
    ev_first = np.ones(len(ev_u), bool)
    ev_first[1:] = ev_path[1:] != ev_path[:-1]
    seg = np.cumsum(ev_first) - 1
    rank = np.arange(len(ev_u)) - np.flatnonzero(ev_first)[seg]

    y0 = np.exp(lf[:, 0] + a[:, 0] * math.log(spec.x0) + np.log(np.asarray(spec.m0)))
    theta = np.zeros(n, int)
    ylog_anchor = np.repeat(np.log(y0)[:, None], n, axis=1)
    anchors = np.repeat(sched.reinit(0, y0)[:, None], n, axis=1)
    n_events = np.zeros(n, int)
    Q = len(query)
    price = np.empty((Q, m, n))
    cutoff = np.empty((Q, m, n))
    disclosed_by = np.zeros((Q, n), bool)
    frozen = np.zeros((Q, n), bool)
    scale = np.zeros(m) if cutoff_scale is None else np.log(np.asarray(cutoff_scale, float))

    def freeze(qi, sel):
        kq = query[qi]
        price[qi][:, sel] = anchors[:, sel] * sched.valuation_decay(theta[sel], kq)[None, :]
        cutoff[qi][:, sel] = np.exp(ylog_anchor[:, sel] + sched.log_cutoff_shift(theta[sel], kq))
        disclosed_by[qi, sel] = n_events[sel] > 0
        frozen[qi, sel] = True

    max_rank = int(rank.max()) + 1 if len(rank) else 0
    for r in range(max_rank):
        sel_e = np.flatnonzero(rank == r)
        p = ev_path[sel_e]
        k = ev_k[sel_e]
        for qi in range(Q):
            need = (~frozen[qi, p]) & (query[qi] < k)
            if need.any():
                freeze(qi, p[need])
        lcut = ylog_anchor[:, p] + sched.log_cutoff_shift(theta[p], k) + scale[:, None]
        obs = ly[:, ev_u[sel_e]]
        disc = arriving[:, sel_e] & (obs >= lcut)
        hit = disc.any(axis=0)
        if hit.any():
            ph = p[hit]
            new = np.where(disc[:, hit], obs[:, hit], lcut[:, hit])
            theta[ph] = k[hit]
            ylog_anchor[:, ph] = new
            anchors[:, ph] = sched.reinit(k[hit], np.exp(new))
            n_events[ph] += 1
            # an event exactly at a query index is visible in the price there
            for qi in range(Q):
                at = (k[hit] == query[qi]) & ~frozen[qi, ph]
                if at.any():
                    freeze(qi, ph[at])
    for qi in range(Q):
        rest = np.flatnonzero(~frozen[qi])
        if len(rest):
            freeze(qi, rest)
    qidx = inv[n_arr:].reshape(n, Q + 1)
    log_y_q = np.stack([ly[:, qidx[:, qi]] for qi in range(Q)])
    log_x_q = np.stack([lx[qidx[:, qi]] for qi in range(Q)])
    log_x1 = lx[qidx[:, Q]]
    return GameSample(query, price, cutoff, disclosed_by, log_y_q, log_x_q, log_x1, n_events)


# ------------------------------------------------------------------ output

def _fmt(v):
    return f"{v:.17g}"


def write_tracks_csv(tracks, path, stride: int = 1):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "t", "agent", "gamma_tilde", "s_price"])
        for tr in tracks:
            for k in range(0, len(tr.times), stride):
                for i in range(tr.gamma_tilde.shape[0]):
                    w.writerow([tr.index, _fmt(tr.times[k]), i + 1,
                                _fmt(tr.gamma_tilde[i, k]), _fmt(tr.s_price[i, k])])


def write_events_csv(tracks, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "t", "agents", "values"])
        for tr in tracks:
            for e in tr.events:
                w.writerow([tr.index, _fmt(e.t), ";".join(str(a + 1) for a in e.agents),
                            ";".join(_fmt(v) for v in e.values)])
