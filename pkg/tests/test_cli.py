import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from censorkit import TimeGrid, decay_segment, derive, load_spec
from censorkit.cli import main
from censorkit.oracle import default_spec


def _write(tmp_path, spec, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec.to_json()))
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_censor_single_matches_library(tmp_path):
    spec = default_spec(1)
    res = CliRunner().invoke(main, ["censor", "--config", _write(tmp_path, spec), "--out",
                                    str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    rows = _rows(tmp_path / "o" / "censor.csv")
    seg = decay_segment(derive(spec), 0, 0.0, 1.0)
    gt0 = float(rows[0]["gamma_tilde"])
    for r in rows[::97]:
        t = float(r["t"])
        ref = math.exp(-np.interp(t, seg.times, seg.nu_integral))
        assert float(r["gamma_tilde"]) / gt0 == pytest.approx(ref, abs=1e-10)


def test_censor_flat_and_symmetric(tmp_path):
    flat = default_spec(1).replace(lam=(0.0,))
    r = CliRunner().invoke(main, ["censor", "--config", _write(tmp_path, flat), "--out",
                                  str(tmp_path / "a")])
    assert r.exit_code == 0
    assert len({row["gamma_tilde"] for row in _rows(tmp_path / "a" / "censor.csv")}) == 1
    r = CliRunner().invoke(main, ["censor", "--config", _write(tmp_path, default_spec(2)), "--out",
                                  str(tmp_path / "b"), "--grid", "100"])
    rows = _rows(tmp_path / "b" / "censor.csv")
    for a, b in zip(rows[::2], rows[1::2]):
        assert (a["gamma_obs"], a["gamma_tilde"], a["nu"]) == (b["gamma_obs"], b["gamma_tilde"], b["nu"])


def test_censor_fixtures(tmp_path):
    fx = tmp_path / "fx.json"
    fx.write_text(json.dumps([{"t": 0.5, "y": [1.4]}]))
    r = CliRunner().invoke(main, ["censor", "--config", _write(tmp_path, default_spec(1)), "--out",
                                  str(tmp_path / "o"), "--grid", "100", "--fixtures", str(fx)])
    assert r.exit_code == 0, r.output
    rows = _rows(tmp_path / "o" / "censor.csv")
    assert {row["segment"] for row in rows} == {"0", "1"}
    first = [row for row in rows if row["segment"] == "1"][0]
    assert float(first["t"]) == 0.5 and float(first["gamma_obs"]) == pytest.approx(1.4)


def test_config_errors_nonzero(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"m": 1, "sigma0": -1}')
    r = CliRunner().invoke(main, ["censor", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert r.exit_code != 0 and "sigma0" in r.output
    r = CliRunner().invoke(main, ["censor", "--config", str(tmp_path / "missing.json"), "--out",
                                  str(tmp_path / "o")])
    assert r.exit_code != 0


def test_simulate_deterministic(tmp_path):
    cfg = _write(tmp_path, default_spec(1))
    outs = []
    for name in ("a", "b"):
        r = CliRunner().invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path / name),
                                      "--seed", "4", "--paths", "1", "--grid", "100"])
        assert r.exit_code == 0, r.output
        outs.append([(tmp_path / name / f).read_bytes() for f in ("tracks.csv", "events.csv", "summary.json")])
    assert outs[0] == outs[1]


def test_simulate_summary_counts(tmp_path):
    base = default_spec(1)
    counts = []
    for lam in (0.0, 2.0, 4.0):
        cfg = _write(tmp_path, base.replace(lam=(lam,)), f"c{lam}.json")
        r = CliRunner().invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path / str(lam)),
                                      "--seed", "1", "--paths", "400", "--grid", "100"])
        assert r.exit_code == 0, r.output
        s = json.loads((tmp_path / str(lam) / "summary.json").read_text())
        counts.append(s["events_per_path"])
        assert s["schema"]
    assert counts[0] == 0
    # doubling the intensity roughly doubles the disclosure count
    assert 1.4 < counts[2] / counts[1] < 2.6


def test_verify_exit_codes(tmp_path):
    cfg = _write(tmp_path, default_spec(1))
    r = CliRunner().invoke(main, ["verify", "--config", cfg, "--suite", "reduction", "--out",
                                  str(tmp_path), "--seed", "0"])
    assert r.exit_code == 0, r.output
    doc = json.loads((tmp_path / "verify_reduction.json").read_text())
    assert doc["schema"] and doc["reports"][0]["verdict"] == "pass"
    r = CliRunner().invoke(main, ["verify", "--suite", "statics", "--out", str(tmp_path), "--seed", "0"])
    assert r.exit_code == 0
    r = CliRunner().invoke(main, ["verify", "--config", cfg, "--suite", "indifference", "--out",
                                  str(tmp_path), "--seed", "0", "--cutoff-scale", "1.02"])
    assert r.exit_code == 1
    r = CliRunner().invoke(main, ["verify", "--config", cfg, "--suite", "bogus", "--out",
                                  str(tmp_path), "--seed", "0"])
    assert r.exit_code == 2
    r = CliRunner().invoke(main, ["verify", "--config", cfg, "--suite", "reduction", "--out",
                                  str(tmp_path)])
    assert r.exit_code == 2


def test_sweep(tmp_path):
    cfg = _write(tmp_path, default_spec(2))
    r = CliRunner().invoke(main, ["sweep", "--config", cfg, "--out", str(tmp_path), "--param",
                                  "lambda", "--values", "0,1,2", "--grid", "100"])
    assert r.exit_code == 0, r.output
    rows = _rows(tmp_path / "sweep.csv")
    assert len(rows) == 6
    assert float(rows[0]["int_nu"]) == 0.0
    assert float(rows[4]["gamma_tilde_1"]) < float(rows[2]["gamma_tilde_1"])
