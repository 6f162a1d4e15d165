import dataclasses
import math

import numpy as np
import pytest

from censorkit import (TimeGrid, derive, martingale_report, run_disclosure_game, simulate_game,
                       simulate_paths, single_agent, symmetric)
from censorkit.market import build_schedule, run_path, write_events_csv, write_tracks_csv
from censorkit.oracle import default_spec

G = TimeGrid.uniform(200)


def _fixture_path(spec, arrivals, level):
    """A path whose observations jump to ``level`` times the start from t = 0.5."""
    (b,) = simulate_paths(spec, G, 0, 1)
    y = np.repeat(b.y[:, :1], len(G), axis=1)
    y[:, 100:] *= level
    return dataclasses.replace(b, y=y, arrivals=arrivals)


def test_no_intensity_no_events():
    spec = single_agent(0.3, 0.3, lam=0.0)
    tracks = run_disclosure_game(spec, simulate_paths(spec, G, 1, 5))
    for tr in tracks:
        assert [e.mandatory for e in tr.events] == [True, True]
        assert np.allclose(tr.gamma_tilde, tr.gamma_tilde[:, :1])


def test_single_arrival_above_cutoff():
    spec = default_spec(1)
    tr = run_path(build_schedule(derive(spec), G.points), _fixture_path(spec, (np.array([0.5]),), 1.3))
    vol = [e for e in tr.events if not e.mandatory]
    assert len(vol) == 1 and vol[0].t == 0.5 and vol[0].agents == (0,)
    k = vol[0].index
    assert tr.s_price[0, k] > tr.gamma_tilde[0, k]
    assert tr.gamma_tilde[0, k + 1] < tr.s_price[0, k]


def test_silent_arrival_leaves_no_trace():
    spec = default_spec(1)
    sched = build_schedule(derive(spec), G.points)
    quiet = run_path(sched, _fixture_path(spec, (np.array([]),), 0.5))
    low = run_path(sched, _fixture_path(spec, (np.array([0.5]),), 0.5))
    assert len(low.events) == 2
    assert np.array_equal(quiet.s_price[:, :-1], low.s_price[:, :-1])


def test_exact_cutoff_is_continuous():
    spec = default_spec(1)
    sched = build_schedule(derive(spec), G.points)
    probe = run_path(sched, _fixture_path(spec, (np.array([]),), 1.0))
    b = _fixture_path(spec, (np.array([0.5]),), 1.0)
    y = b.y.copy()
    y[0, 100] = probe.cutoffs[0, 100]
    tr = run_path(sched, dataclasses.replace(b, y=y))
    assert len(tr.events) == 3
    assert tr.s_price[0, 100] == pytest.approx(tr.gamma_tilde[0, 100], rel=1e-12)


@pytest.mark.parametrize("spec", [default_spec(1), default_spec(2)])
def test_track_invariants(spec):
    bundles = simulate_paths(spec, G, 3, 300)
    tracks = run_disclosure_game(spec, bundles)
    for b, tr in zip(bundles, tracks):
        ev = {e.index for e in tr.events}
        for e in tr.events:
            assert e.agents
            assert np.allclose(e.values, b.y[list(e.agents), e.index])
            if not e.mandatory:
                assert all(b.y[j, e.index] >= tr.cutoffs[j, e.index] for j in e.agents)
                assert np.all(tr.s_price[:, e.index] >= tr.gamma_tilde[:, e.index] * (1 - 1e-12))
        between = [k for k in range(len(G)) if k not in ev]
        assert np.array_equal(tr.s_price[:, between], tr.gamma_tilde[:, between])


def test_predictability():
    spec = default_spec(1)
    sched = build_schedule(derive(spec), G.points)
    (b,) = simulate_paths(spec, G, 9, 1)
    b = dataclasses.replace(b, arrivals=(np.array([0.2, 0.45, 0.7]),))
    full = run_path(sched, b)
    cut = run_path(sched, dataclasses.replace(b, arrivals=(np.array([0.2]),)))
    k = 90  # t = 0.45
    assert np.array_equal(full.cutoffs[:, :k + 1], cut.cutoffs[:, :k + 1])


def test_grid_mismatch():
    spec = default_spec(1)
    sched = build_schedule(derive(spec), TimeGrid.uniform(50).points)
    with pytest.raises(ValueError, match="mismatch"):
        run_path(sched, simulate_paths(spec, G, 0, 1)[0])


def test_martingale_report_degenerate():
    spec = single_agent(0.3, 0.3, lam=0.0)
    tracks = run_disclosure_game(spec, simulate_paths(spec, G, 1, 150))
    rep = martingale_report(tracks, 0.2, 0.6)
    assert rep["diff"] == 0.0 and rep["n"] == 150
    with pytest.raises(ValueError):
        martingale_report(tracks, 0.6, 0.2)
    with pytest.raises(ValueError):
        martingale_report(tracks[:50], 0.2, 0.6)


@pytest.mark.parametrize("m", [1, 2])
def test_vectorized_game_matches_per_path(m):
    spec = default_spec(m)
    q = [60, 140]
    n = 3000
    tracks = run_disclosure_game(spec, simulate_paths(spec, G, 5, n))
    a_price = np.array([[tr.s_price[0, k] for k in q] for tr in tracks])
    a_disc = np.array([[any(not e.mandatory and e.index <= k for e in tr.events) for k in q]
                       for tr in tracks])
    g = simulate_game(spec, G, q, 200_000, 6)
    for j in range(2):
        se = math.hypot(a_price[:, j].std() / math.sqrt(n), g.price[j, 0].std() / math.sqrt(200_000))
        assert abs(a_price[:, j].mean() - g.price[j, 0].mean()) < 4 * se
        p = g.disclosed_by[j].mean()
        assert abs(a_disc[:, j].mean() - p) < 4 * math.sqrt(p * (1 - p) / n) + 1e-3
    # silent paths share one deterministic price
    silent = ~g.disclosed_by[1]
    assert np.ptp(g.price[1, 0, silent]) < 1e-12


def test_vectorized_game_deterministic():
    spec = default_spec(2)
    a = simulate_game(spec, G, [100], 5000, 1)
    b = simulate_game(spec, G, [100], 5000, 1)
    assert np.array_equal(a.price, b.price) and np.array_equal(a.n_events, b.n_events)


def test_csv_outputs(tmp_path):
    spec = default_spec(2)
    tracks = run_disclosure_game(spec, simulate_paths(spec, G, 2, 3))
    write_tracks_csv(tracks, tmp_path / "t.csv")
    write_events_csv(tracks, tmp_path / "e.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "path,t,agent,gamma_tilde,s_price"
    assert len(lines) == 1 + 3 * len(G) * 2
    ev = (tmp_path / "e.csv").read_text().splitlines()
    assert ev[0] == "path,t,agents,values"
    assert len(ev) == 1 + sum(len(tr.events) for tr in tracks)
