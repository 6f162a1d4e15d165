"""Exact-in-law simulation of the state, noise and observation processes,
plus Poisson arrival sampling by thinning."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import IntensityTable, ModelSpec


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2 or pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValueError("grid must start at 0 and end at 1")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid must be strictly increasing")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, k: int = 1000) -> "TimeGrid":
        pts = np.linspace(0.0, 1.0, k + 1)
        pts[-1] = 1.0
        return cls(pts)

    def __len__(self):
        return len(self.points)

    def snap(self, times):
        """Index of the first grid point at or after each time."""
        idx = np.searchsorted(self.points, np.asarray(times) - 1e-15, side="left")
        return np.minimum(idx, len(self.points) - 1)


@dataclass(frozen=True)
class PathBundle:
    grid: TimeGrid
    x: np.ndarray            # (K+1,)
    m_noise: np.ndarray      # (m, K+1)
    z: np.ndarray            # (m, K+1)
    y: np.ndarray            # (m, K+1)
    arrivals: tuple          # per agent, sorted arrival times in (0, 1)
    seed: int
    index: int


# One substream per (path, component) and per (path, agent arrival process).
# Component 0 is the common factor, 1..m the noises, m+1..2m the arrivals.
def _streams(seed: int, path: int, m: int):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path,))
    return [np.random.default_rng(s) for s in ss.spawn(2 * m + 1)]


def _gbm(start, vol, dt, rng):
    xi = rng.standard_normal(len(dt))
    inc = vol * np.sqrt(dt) * xi - 0.5 * vol * vol * dt
    return start * np.exp(np.concatenate([[0.0], np.cumsum(inc)]))


def sample_arrivals(lam: IntensityTable, rng_or_seed) -> np.ndarray:
    """Arrival times in (0, 1) by thinning against the table's peak rate."""
    rng = rng_or_seed if isinstance(rng_or_seed, np.random.Generator) \
        else np.random.default_rng(rng_or_seed)
    peak = lam.peak
    if peak <= 0:
        return np.empty(0)
    n = rng.poisson(peak)
    cand = np.sort(rng.uniform(0.0, 1.0, n))
    keep = rng.uniform(0.0, 1.0, n) * peak < lam(cand)
    out = cand[keep]
    return out[(out > 0) & (out < 1)]


def simulate_path(spec: ModelSpec, grid: TimeGrid, seed: int, index: int) -> PathBundle:
    rngs = _streams(seed, index, spec.m)
    dt = np.diff(grid.points)
    x = _gbm(spec.x0, spec.sigma0, dt, rngs[0])
    mn = np.vstack([_gbm(spec.m0[i], spec.sigmaM[i], dt, rngs[1 + i]) for i in range(spec.m)])
    alpha = np.asarray(spec.alpha)[:, None]
    f = np.asarray(spec.f)[:, None]
    z = f * np.exp(alpha * np.log(x)[None, :])
    y = z * mn
    arr = tuple(sample_arrivals(spec.lam[i], rngs[1 + spec.m + i]) for i in range(spec.m))
    return PathBundle(grid, x, mn, z, y, arr, seed, index)


def simulate_paths(spec: ModelSpec, grid: TimeGrid, seed: int, count: int) -> list:
    if count < 1:
        raise ValueError("count must be >= 1")
    return [simulate_path(spec, grid, seed, j) for j in range(count)]


def terminal_draws(spec: ModelSpec, times, n: int, rng: np.random.Generator):
    """Vectorized exact draws of (log X, log M) at the given increasing times.

    Returns arrays of shape (len(times), n) and (len(times), m, n).  Used by
    the Monte Carlo oracles, which need many paths but only a few dates.
    """
    times = np.asarray(times, dtype=float)
    dt = np.diff(np.concatenate([[0.0], times]))
    s0 = spec.sigma0
    sm = np.asarray(spec.sigmaM)[:, None]
    lx = np.empty((len(times), n))
    lm = np.empty((len(times), spec.m, n))
    cur_x = np.full(n, np.log(spec.x0))
    cur_m = np.repeat(np.log(np.asarray(spec.m0))[:, None], n, axis=1)
    for k, h in enumerate(dt):
        if h > 0:
            cur_x = cur_x + s0 * np.sqrt(h) * rng.standard_normal(n) - 0.5 * s0 * s0 * h
            cur_m = cur_m + sm * np.sqrt(h) * rng.standard_normal((spec.m, n)) - 0.5 * sm * sm * h
        lx[k] = cur_x
        lm[k] = cur_m
    return lx, lm


def log_observation(spec: ModelSpec, lx, lm):
    """log Y = log f + alpha log X + log M, broadcasting over leading axes."""
    a = np.asarray(spec.alpha)[:, None]
    lf = np.log(np.asarray(spec.f))[:, None]
    return lf + a * lx[..., None, :] + lm


def _fmt(v):
    return f"{v:.17g}"


def write_paths_csv(bundles, spec: ModelSpec, path):
    m = spec.m
    header = ["path", "t", "x"] + [f"m_{i+1}" for i in range(m)] \
        + [f"z_{i+1}" for i in range(m)] + [f"y_{i+1}" for i in range(m)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for b in bundles:
            for k, t in enumerate(b.grid.points):
                row = [b.index, _fmt(t), _fmt(b.x[k])]
                row += [_fmt(v) for v in b.m_noise[:, k]]
                row += [_fmt(v) for v in b.z[:, k]]
                row += [_fmt(v) for v in b.y[:, k]]
                w.writerow(row)


def write_arrivals_csv(bundles, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "agent", "time"])
        for b in bundles:
            for i, arr in enumerate(b.arrivals):
                for t in arr:
                    w.writerow([b.index, i + 1, _fmt(t)])
