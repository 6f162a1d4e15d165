"""Command line: censor schedules, simulation, verification suites, sweeps."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import oracle
from .censor_multi import aggregated_intensity, amended_mean, nu_hyp_rate, sigma_hyp
from .censor_single import CONVENTIONS, DEFAULT_CONVENTION, decay_intensity
from .market import build_schedule, run_disclosure_game, write_events_csv, write_tracks_csv
from .params import SpecError, derive, load_spec, spec_from_dict
from .paths import TimeGrid, simulate_paths, write_arrivals_csv, write_paths_csv

SUITES = ("indifference", "lpm", "nash", "statics", "reduction")


def _fmt(v):
    return f"{v:.17g}"


def _spec(path):
    try:
        return load_spec(path)
    except SpecError as exc:
        raise click.ClickException(str(exc)) from None
    except OSError as exc:
        raise click.ClickException(f"cannot read config: {exc}") from None


def _outdir(out) -> Path:
    p = Path(out)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise click.ClickException(f"cannot create output directory: {exc}") from None
    return p


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _intensities(derived, sched, t):
    """Per-agent decay intensity at t (aggregated intensity for the multi censor)."""
    spec = derived.spec
    lam = [tab.value(t) for tab in spec.lam]
    if sched.__class__.__name__ == "SingleSchedule":
        return [decay_intensity(derived, 0, t, lam[0], sched.convention)]
    hyps = [nu_hyp_rate(lam[j], sigma_hyp(derived, j, min(t, 1.0)), sched.form)
            for j in range(derived.m)]
    return [aggregated_intensity(hyps, derived)] * derived.m


def censor_rows(spec, grid: TimeGrid, convention=DEFAULT_CONVENTION, fixtures=()):
    """Schedule rows (segment, t, agent, gamma_obs, gamma_tilde, nu).

    Segment 0 starts from the time-0 observations; each fixture
    ``{"t": ..., "y": [...]}`` re-anchors every agent at its date.
    """
    derived = derive(spec)
    sched = build_schedule(derived, grid.points, convention)
    pts = grid.points
    y0 = np.asarray(spec.f) * spec.x0 ** np.asarray(spec.alpha) * np.asarray(spec.m0)
    anchors_t = [(0, y0)]
    for fx in sorted(fixtures, key=lambda e: e["t"]):
        y = np.asarray(fx["y"], float)
        if y.shape != (spec.m,) or np.any(y <= 0):
            raise SpecError(f"fixture at t={fx['t']}: need {spec.m} positive observations")
        k = int(np.argmin(np.abs(pts - fx["t"])))
        if not 0 < k < len(pts) - 1:
            raise SpecError(f"fixture time {fx['t']} must lie strictly inside (0, 1)")
        anchors_t.append((k, y))
    rows = []
    for seg, (k0, y) in enumerate(anchors_t):
        k1 = anchors_t[seg + 1][0] if seg + 1 < len(anchors_t) else len(pts) - 1
        anchor = sched.reinit(k0, y)
        for k in range(k0, k1 + 1):
            lshift = np.atleast_1d(sched.log_cutoff_shift(k0, k))
            gobs = y * np.exp(lshift)
            gtil = anchor * sched.valuation_decay(k0, k)
            nu = _intensities(derived, sched, pts[k])
            for i in range(spec.m):
                rows.append((seg, pts[k], i + 1, gobs[i], gtil[i], nu[i]))
    return rows


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Optimal disclosure censors and their Monte Carlo checks."""


@main.command()
@click.option("--config", "config", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--grid", default=1000, show_default=True, type=click.IntRange(2))
@click.option("--convention", default=DEFAULT_CONVENTION, show_default=True,
              type=click.Choice(CONVENTIONS))
@click.option("--fixtures", type=click.Path(dir_okay=False),
              help='JSON list of {"t": time, "y": [observations]} disclosures.')
def censor(config, out, grid, convention, fixtures):
    """Cutoff and valuation schedules for a silent interval."""
    spec = _spec(config)
    fx = []
    if fixtures:
        try:
            fx = json.loads(Path(fixtures).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"bad fixtures file: {exc}") from None
    try:
        rows = censor_rows(spec, TimeGrid.uniform(grid), convention, fx)
    except SpecError as exc:
        raise click.ClickException(str(exc)) from None
    outdir = _outdir(out)
    with open(outdir / "censor.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["segment", "t", "agent", "gamma_obs", "gamma_tilde", "nu"])
        for seg, t, a, go, gt, nu in rows:
            w.writerow([seg, _fmt(t), a, _fmt(go), _fmt(gt), _fmt(nu)])
    click.echo(f"wrote {len(rows)} rows to {outdir / 'censor.csv'}")


def summarize(tracks, m: int) -> dict:
    vol = [[e for e in tr.events if not e.mandatory] for tr in tracks]
    counts = np.array([len(v) for v in vol])
    jumps = [[] for _ in range(m)]
    for tr, evs in zip(tracks, vol):
        for e in evs:
            for i in range(m):
                jumps[i].append(tr.s_price[i, e.index] - tr.gamma_tilde[i, e.index])
    term = np.array([tr.s_price[:, -1] for tr in tracks])
    return {
        "schema": oracle.SCHEMA,
        "paths": len(tracks),
        "events_total": int(counts.sum()),
        "events_per_path": float(counts.mean()) if len(counts) else 0.0,
        "mean_jump": [float(np.mean(j)) if j else None for j in jumps],
        "terminal_valuation_mean": term.mean(axis=0).tolist(),
        "terminal_valuation_sd": (term.std(axis=0, ddof=1).tolist() if len(tracks) > 1
                                  else [0.0] * m),
    }


@main.command()
@click.option("--config", "config", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", required=True, type=int)
@click.option("--paths", "n_paths", default=100, show_default=True, type=click.IntRange(1))
@click.option("--grid", default=1000, show_default=True, type=click.IntRange(2))
@click.option("--convention", default=DEFAULT_CONVENTION, show_default=True,
              type=click.Choice(CONVENTIONS))
@click.option("--dump-paths", is_flag=True, help="Also write the raw path and arrival CSVs.")
def simulate(config, out, seed, n_paths, grid, convention, dump_paths):
    """Simulate paths and the disclosure game; write tracks, events, summary."""
    spec = _spec(config)
    outdir = _outdir(out)
    g = TimeGrid.uniform(grid)
    bundles = simulate_paths(spec, g, seed, n_paths)
    tracks = run_disclosure_game(spec, bundles, convention)
    write_tracks_csv(tracks, outdir / "tracks.csv")
    write_events_csv(tracks, outdir / "events.csv")
    if dump_paths:
        write_paths_csv(bundles, spec, outdir / "paths.csv")
        write_arrivals_csv(bundles, outdir / "arrivals.csv")
    summary = summarize(tracks, spec.m)
    summary.update({"seed": seed, "grid": grid, "convention": convention})
    _write_json(outdir / "summary.json", summary)
    click.echo(f"{n_paths} paths, {summary['events_total']} voluntary events")


def run_suite(suite, spec, seed, n_paths, convention, t=0.0, s=1e-3, cutoff_scale=1.0):
    if suite == "indifference":
        cut = None
        if cutoff_scale != 1.0:
            _, _, _, eng = oracle.engine_state(spec, t, s, convention)
            cut = float(eng["gamma_obs_s"][0]) * cutoff_scale
        return [oracle.indifference_check(spec, t, s, cut, n_paths or 1_000_000, seed, convention)]
    if suite == "lpm":
        return [oracle.lpm_order_check(spec, t, n_paths=n_paths or 1_000_000, seed=seed,
                                       convention=convention)]
    if suite == "nash":
        cuts = None
        if cutoff_scale != 1.0:
            _, _, _, eng = oracle.engine_state(spec, t, s)
            cuts = np.asarray(eng["gamma_obs_s"], float).copy()
            cuts[0] *= cutoff_scale
        return [oracle.nash_check(spec, t, s, cuts, n_paths or 10_000_000, seed)]
    if suite == "statics":
        return [oracle.statics_sweep()]
    if suite == "reduction":
        return [oracle.reduction_check(spec, convention=convention)]
    raise click.BadParameter(f"unknown suite {suite!r}")


@main.command()
@click.option("--config", "config", type=click.Path(dir_okay=False),
              help="Model config (not needed for the statics suite).")
@click.option("--suite", required=True, type=click.Choice(SUITES))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", required=True, type=int)
@click.option("--paths", "n_paths", type=click.IntRange(100_000), help="Monte Carlo paths.")
@click.option("--convention", default=DEFAULT_CONVENTION, show_default=True,
              type=click.Choice(CONVENTIONS))
@click.option("--t", "t", default=0.0, show_default=True, type=float)
@click.option("--s", "s", default=1e-3, show_default=True, type=float)
@click.option("--cutoff-scale", default=1.0, show_default=True, type=float,
              help="Multiply agent 1's cutoff (power check).")
def verify(config, suite, out, seed, n_paths, convention, t, s, cutoff_scale):
    """Run an oracle suite; exit code 0 iff every verdict passes."""
    if config is None and suite != "statics":
        raise click.UsageError("--config is required for this suite")
    spec = _spec(config) if config else None
    outdir = _outdir(out)
    try:
        reports = run_suite(suite, spec, seed, n_paths, convention, t, s, cutoff_scale)
    except (ValueError, oracle.StarvationError) as exc:
        raise click.ClickException(str(exc)) from None
    doc = {"schema": oracle.SCHEMA, "suite": suite, "seed": seed,
           "reports": [r.to_dict() for r in reports]}
    _write_json(outdir / f"verify_{suite}.json", doc)
    ok = all(r.passed for r in reports)
    for r in reports:
        click.echo(f"{r.claim}: {'pass' if r.passed else 'fail'}")
    sys.exit(0 if ok else 1)


SWEEP_TIMES = (0.25, 0.5, 0.75, 1.0)


@main.command()
@click.option("--config", "config", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--param", required=True,
              type=click.Choice(["sigma0", "sigmaM", "alpha", "f", "lambda"]))
@click.option("--values", required=True, help="Comma-separated values (applied to every agent).")
@click.option("--grid", default=1000, show_default=True, type=click.IntRange(2))
@click.option("--convention", default=DEFAULT_CONVENTION, show_default=True,
              type=click.Choice(CONVENTIONS))
def sweep(config, out, param, values, grid, convention):
    """Silent-interval valuations and amended means across one parameter."""
    base = _spec(config)
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("values must be numbers") from None
    g = TimeGrid.uniform(grid)
    idx = [int(round(t * grid)) for t in SWEEP_TIMES]
    outdir = _outdir(out)
    doc = base.to_json()
    with open(outdir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "agent"] + [f"gamma_tilde_{t:g}" for t in SWEEP_TIMES]
                   + ["int_nu", "amended_mean_0"])
        for v in vals:
            d = dict(doc)
            if param == "sigma0":
                d["sigma0"] = v
            elif param == "lambda":
                d["lambda"] = [v] * base.m
            else:
                d[param] = [v] * base.m
            try:
                spec = spec_from_dict(d)
            except SpecError as exc:
                raise click.ClickException(str(exc)) from None
            derived = derive(spec)
            sched = build_schedule(derived, g.points, convention)
            y0 = np.asarray(spec.f) * spec.x0 ** np.asarray(spec.alpha) * np.asarray(spec.m0)
            anchor = sched.reinit(0, y0)
            for i in range(spec.m):
                gt = [anchor[i] * sched.valuation_decay(0, k) for k in idx]
                am = amended_mean(derived, i, 0.0)[0] if spec.m > 1 else math.nan
                w.writerow([_fmt(v), i + 1] + [_fmt(x) for x in gt]
                           + [_fmt(sched.cum_agg[-1]), _fmt(am)])
    click.echo(f"wrote {outdir / 'sweep.csv'}")


if __name__ == "__main__":
    main()
