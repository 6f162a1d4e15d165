import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from censorkit import (ModelSpec, aggregate_cutoffs, aggregated_intensity, derive, hypothetical_cutoff,
                       multi_reinitialize, multi_valuation, partial_covariances, single_agent, symmetric)
from censorkit.censor_multi import (MultiSchedule, T_CLAMP, aggregation_weights, amended_mean,
                                    dynamic_log_shift, multi_schedule_points, nu_hyp_rate, sigma_hyp)
from censorkit.censor_single import SingleSchedule
from censorkit.mathkit import solve_cutoff
from censorkit.params import SpecError
from censorkit.regression import law_at, terminal_valuation

from conftest import specs

# mpmath: two symmetric agents, sigma0 = sigmaM = 0.3, unit loadings, t = 0
L_SYM = 0.99252805481913843052
SIGMA_HYP_SYM = 0.12247448713915890491


def test_partial_covariance_examples():
    assert partial_covariances(single_agent(0.3, 0.3), 0.0).rho[0] == 0.0
    cov = partial_covariances(symmetric(2, 0.3, 0.3), 0.2)
    assert cov.rho_sq == pytest.approx([0.25, 0.25], abs=1e-14)
    with pytest.raises(SpecError, match="degenerate horizon"):
        partial_covariances(symmetric(2), 1.0)


@given(specs(), st.floats(0, 0.99))
def test_rho_time_invariant(spec, t):
    a = partial_covariances(spec, 0.0).rho
    b = partial_covariances(spec, t).rho
    assert np.allclose(a, b, atol=1e-12)
    assert np.all((a >= 0) & (a < 1))


def test_amended_mean_reference():
    d = derive(symmetric(2, 0.3, 0.3))
    L, clamped = amended_mean(d, 0, 0.0)
    assert L == pytest.approx(L_SYM, rel=1e-14) and not clamped
    assert sigma_hyp(d, 0, 0.0) == pytest.approx(SIGMA_HYP_SYM, rel=1e-14)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        _, clamped = amended_mean(d, 0, 1.0)
    assert clamped and w


def test_single_agent_amended_mean():
    # no competitors: only the -alpha^2 / (2 p~) term and the p~_0 term survive
    d = derive(single_agent(0.4, 0.2, alpha=1.0))
    assert amended_mean(d, 0, 0.3)[0] == pytest.approx(math.exp(-0.7 / (2 * d.p_total)), rel=1e-14)


def test_aggregation_examples():
    d1 = derive(single_agent(0.4, 0.25))
    assert aggregation_weights(d1) == pytest.approx([1.0], abs=1e-14)
    d2 = derive(symmetric(2, 0.3, 0.3))
    k, km, k0 = d2.kappa[1], d2.kappa_minus[0], d2.kappa[0]
    brute = sum((k / km) * (1 + sum(1.0 * k / k0 for _ in range(2))) for _ in range(2))
    assert aggregated_intensity([0.7, 0.7], d2) == pytest.approx(brute * 0.7, rel=1e-14)
    assert aggregated_intensity([0.7, 0.7], d2) == pytest.approx(4 * 0.7, rel=1e-14)
    assert aggregated_intensity([0.0, 0.0], d2) == 0.0


def test_static_aggregation():
    d = derive(ModelSpec(3, 0.5, (0.3, 0.6, 0.4), (1.0, 2.0, 0.5), (1, 1, 1), (1, 1, 1)))
    assert np.allclose(aggregate_cutoffs([1.0, 1.0, 1.0], d), 0.0)
    ds = derive(symmetric(2, 0.3, 0.5))
    y = aggregate_cutoffs([0.8, 0.8], ds)
    assert y[0] == pytest.approx(y[1])


@given(specs(), st.permutations(range(4)))
def test_permutation_equivariance(spec, perm):
    perm = [p for p in perm if p < spec.m]
    sp = ModelSpec(spec.m, spec.sigma0, tuple(spec.sigmaM[p] for p in perm),
                   tuple(spec.alpha[p] for p in perm), tuple(spec.f[p] for p in perm),
                   tuple(spec.lam[p] for p in perm))
    d, dp = derive(spec), derive(sp)
    I = np.linspace(0.1, 0.4, spec.m)
    a = dynamic_log_shift(I, d)
    b = dynamic_log_shift(I[perm], dp)
    assert np.allclose(a[perm], b, atol=1e-12)
    ra = partial_covariances(spec, 0.2).rho
    rb = partial_covariances(sp, 0.2).rho
    assert np.allclose(ra[perm], rb, atol=1e-12)


def test_hypothetical_agent():
    d = derive(symmetric(2, 0.3, 0.3, lam=2.0))
    h = hypothetical_cutoff(d, 0, 0.0)
    assert h.g == pytest.approx(solve_cutoff(2.0, SIGMA_HYP_SYM).y * L_SYM, rel=1e-12)
    assert h.nu_hyp == pytest.approx(2.0 * (2 * 0.5 * (1 + math.erf(SIGMA_HYP_SYM / 2 / math.sqrt(2))) - 1))
    assert nu_hyp_rate(2.0, 0.0) == 0.0
    assert nu_hyp_rate(2.0, 0.0, "literal") == pytest.approx(1.0)


def test_multi_valuation_and_reinit():
    assert multi_valuation(1.3, 0.0) == 1.3
    assert multi_valuation(2.0, 0.5) == pytest.approx(2.0 * math.exp(-0.5))
    with pytest.raises(ValueError):
        multi_valuation(0.0, 0.1)
    d = derive(symmetric(2, 0.3, 0.3))
    v = multi_reinitialize(d, 0, 0.2, {0: 1.0, 1: 1.0}, {})
    assert v == pytest.approx(law_at(d, 0, 0.2).beta)
    v2 = multi_reinitialize(d, 0, 0.2, {1: 1.4}, {0: 0.9, 1: 0.5})
    assert v2 == pytest.approx(law_at(d, 0, 0.2).beta * terminal_valuation(d, 0, [0.9, 1.4]))
    with pytest.raises(ValueError):
        multi_reinitialize(d, 0, 0.2, {}, {0: 1.0, 1: 1.0})


@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(0.5, 2.0), st.floats(0.0, 5.0))
def test_reduction_property(s0, sm, a, lam):
    d = derive(single_agent(s0, sm, alpha=a, lam=lam))
    times = np.linspace(0, 1, 41)
    ms, ss = MultiSchedule(d, times), SingleSchedule(d, times)
    idx = np.arange(len(times))
    assert np.max(np.abs(ms.cum_agg - ss.cum_agg)) < 1e-10
    assert np.max(np.abs(ms.log_cutoff_shift(0, idx) - ss.log_cutoff_shift(0, idx))) < 1e-10
    assert np.allclose(ms.reinit(7, [1.3]), ss.reinit(7, [1.3]), rtol=1e-12)


def test_schedule_points_symmetric():
    d = derive(symmetric(2, 0.3, 0.4, lam=3.0))
    pts = multi_schedule_points(d, [1.0, 1.0], np.linspace(0, 1, 21))
    for p in pts:
        assert p.y_cut[0] == pytest.approx(p.y_cut[1])
        assert p.gamma_tilde[0] == pytest.approx(p.gamma_tilde[1])
    assert pts[-1].nu_agg == 0.0
    assert all(b.gamma_tilde[0] < a.gamma_tilde[0] for a, b in zip(pts[:-1], pts[1:]))


def test_kappa0_zero_guard():
    d = derive(symmetric(2))
    object.__setattr__(d, "kappa", np.array([0.0, 0.5, 0.5]))
    with pytest.raises(SpecError):
        aggregate_cutoffs([1.0, 1.0], d)
