import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from censorkit import (IntensityTable, ModelSpec, SpecError, common_sized, derive, load_spec,
                       single_agent, spec_from_dict, symmetric, tilde_at)

from conftest import specs


def test_unit_symmetric_single():
    d = derive(single_agent(1.0, 1.0, 1.0))
    assert d.p[0] == pytest.approx(1) and d.p[1] == pytest.approx(1)
    assert d.kappa == pytest.approx([0.5, 0.5])
    assert d.kappa1 == pytest.approx([0.5])


def test_unit_size_constant():
    d = derive(single_agent(0.7, 0.3, 1.4, f=1.0))
    assert d.k_single[0] == 1.0


def test_two_agent_arithmetic():
    spec = ModelSpec(2, 1.0, (2.0, 1.0), (2.0, 1.0), (1.0, 1.0), (1.0, 1.0))
    d = derive(spec)
    assert d.sigma_i == pytest.approx([1, 1])
    assert d.p == pytest.approx([1, 1, 1])
    assert d.kappa == pytest.approx([1 / 3] * 3)
    assert d.kappa_minus == pytest.approx([0.5, 0.5])


def test_tilde_examples():
    d = derive(single_agent(1.0, 1.0))
    assert tilde_at(d, 0.0).sigma0i_sq[0] == pytest.approx(2.0)
    assert tilde_at(d, 0.75).sigma0i_sq[0] == pytest.approx(0.5)
    assert tilde_at(d, 1 - 1e-9).sigma0i_sq[0] < 1e-8


@pytest.mark.parametrize("t", [1.0, 1.5, -0.1])
def test_tilde_degenerate(t):
    with pytest.raises(SpecError, match="degenerate horizon"):
        tilde_at(derive(single_agent()), t)


def test_rejects_bad_specs():
    with pytest.raises(SpecError):
        single_agent(sigma0=0.0)
    with pytest.raises(SpecError):
        ModelSpec(2, 1.0, (1.0,), (1.0, 1.0), (1.0, 1.0), (1.0, 1.0))
    with pytest.raises(SpecError):
        single_agent(alpha=0.0)
    with pytest.raises(SpecError):
        ModelSpec(0, 1.0, (), (), (), ())
    with pytest.raises(SpecError, match="infinite precision"):
        derive(single_agent(sigmaM=0.0))


def test_intensity_table():
    tab = IntensityTable([0, 0.5, 1], [4, 0])
    assert tab(0.25) == 4 and tab(0.5) == 0 and tab(1.0) == 0
    assert tab.integral(0, 1) == pytest.approx(2.0)
    assert tab.integral(0.25, 0.75) == pytest.approx(1.0)
    assert tab.peak == 4
    with pytest.raises(SpecError):
        IntensityTable([0, 1], [-1])
    with pytest.raises(SpecError):
        IntensityTable([0, 0.7], [1])


def test_config_roundtrip(tmp_path):
    spec = symmetric(2, 0.4, 0.2, 1.5, 2.0, 3.0)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(spec.to_json()))
    assert load_spec(p) == spec


def test_config_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"m": 1,\n "sigma0": }')
    with pytest.raises(SpecError, match="line 2"):
        load_spec(p)
    with pytest.raises(SpecError, match="sigmaM"):
        spec_from_dict({"m": 1, "sigma0": 1, "sigmaM": [-1], "alpha": [1], "f": [1], "lambda": [1]})
    with pytest.raises(SpecError, match="beta: Extra"):
        spec_from_dict({"m": 1, "sigma0": 1, "sigmaM": [1], "alpha": [1], "f": [1], "lambda": [1],
                        "beta": 2})


@given(specs())
def test_kappa_identities(spec):
    d = derive(spec)
    assert d.kappa.sum() == pytest.approx(1.0, abs=1e-12)
    k = d.kappa[1:]
    assert np.allclose(d.kappa_minus, k / (1 - k), rtol=1e-12)
    if spec.m == 1:
        assert d.kappa1[0] == pytest.approx(d.kappa[1], abs=1e-12)
        assert d.k_multi[0] == pytest.approx(d.k_single[0], rel=1e-12)


@given(specs(), st.floats(0.0, 0.999))
def test_tilde_ratio_time_free(spec, t):
    d = derive(spec)
    tp = tilde_at(d, t)
    assert np.allclose(tp.p_tilde_i / tp.p_tilde, d.kappa[1:], rtol=1e-12)


@given(specs())
def test_derive_pure(spec):
    a, b = derive(spec), derive(spec)
    assert np.array_equal(a.kappa, b.kappa) and np.array_equal(a.k_multi, b.k_multi)


def test_common_sized_keeps_prior_mean():
    spec = common_sized(single_agent(0.3, 0.3, lam=2.0))
    assert spec.m0[0] > 1
    assert math.isclose(spec.x0, 1.0)
