import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from chemowave.acceptance import KPP, SMALL_CHI, kpp_bvp_oracle, random_sandwich
from chemowave.constants import ModelParams, kernel_constants, rate_constants
from chemowave.construct import (
    IterationConfig,
    WaveProfile,
    build_profiles,
    d_zero,
    discrete_tail_slope,
    inner_evolve,
    mu_tilde_upper,
    outer_fixed_point,
    residual_4_4,
    select_mu_tilde,
    star_norm,
    tilde_c0,
)
from chemowave.elliptic import Field, Grid1D
from chemowave.errors import DomainError, HypothesisError
from chemowave.speed import c_of_mu, mu_cap

from strategies import params


# ---------------------------------------------------------------- constants of the construction

def test_ceiling_without_coupling_is_carrying_capacity():
    assert tilde_c0(replace(KPP, a=2.0, b=5.0), 0.5) == pytest.approx(0.4)


def test_ceiling_against_direct_formula():
    p = ModelParams(1.0, 0.0, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    kc = kernel_constants(p)
    c = c_of_mu(p.a, 0.5)
    direct = p.a / (p.b + p.chi2 * p.mu2 - kc.m_bar - c * p.tau * kc.k)
    assert tilde_c0(p, 0.5) == pytest.approx(direct, rel=1e-14)


def test_ceiling_denominator_blowup_and_error():
    base = ModelParams(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
    kc = kernel_constants(base)
    c = c_of_mu(1.0, 0.5)
    # the denominator is b - chi1 mu1 - M_bar - c K; pick b just above and below its root
    root = base.chi1 * base.mu1 + kc.m_bar + c * kc.k
    near = tilde_c0(replace(base, b=root + 1e-6), 0.5)
    assert near > 1e5
    with pytest.raises(HypothesisError):
        tilde_c0(replace(base, b=root - 1e-6), 0.5)


def test_mu_tilde_without_coupling():
    p = KPP
    assert mu_tilde_upper(p, 0.4) == pytest.approx(0.8)
    assert select_mu_tilde(p, 0.4) == pytest.approx(0.6)


def test_mu_tilde_empty_at_cap():
    with pytest.raises(HypothesisError):
        select_mu_tilde(KPP, mu_cap(KPP))


@given(params(tau=1.0, small_chi=True), st.floats(0.1, 0.9))
def test_mu_tilde_constraints_hold(p, frac):
    mu = frac * mu_cap(p)
    try:
        mt = select_mu_tilde(p, mu)
    except HypothesisError:
        assume(False)
    rc = rate_constants(p, mu)
    c = c_of_mu(p.a, mu)
    assert mu < mt < min(mu_cap(p), 2 * mu) + 1e-15
    assert (1 + rc.k_tm) * (mt - mu) < p.b + p.net_coupling - (p.tau * c + mu) * rc.k_tm


def test_d_zero_example():
    dz = d_zero(replace(KPP, b=1.0), 0.5, 0.75, 1.0)
    assert dz.a0 == pytest.approx(0.3125, rel=1e-14)
    assert dz.a1 == pytest.approx(1.0, rel=1e-14)
    assert dz.d0 == pytest.approx(3.2, rel=1e-14)
    assert dz.ceiling_term == pytest.approx(1.0)


def test_d_zero_blows_up_near_product_limit():
    dz = d_zero(KPP, 0.5, 2.0 - 1e-9, 1.0)
    assert dz.a0 < 1e-8 and dz.d0 > 1e7
    with pytest.raises(DomainError):
        d_zero(KPP, 0.5, 2.0, 1.0)


def test_d_zero_small_ceiling_term_dominates():
    dz = d_zero(KPP, 0.5, 0.75, 1e-6)
    assert dz.ceiling_term >= 1.0
    assert dz.d0 == dz.ceiling_term


# ---------------------------------------------------------------- envelopes

@pytest.fixture(scope="module")
def kpp_setup():
    cfg = IterationConfig.default(KPP, 0.5)
    return cfg, build_profiles(cfg)


def test_lower_envelope_vanishes_at_its_root(kpp_setup):
    cfg, prof = kpp_setup
    a = prof.a_under
    assert math.exp(-cfg.mu * a) - cfg.d * math.exp(-cfg.mu_tilde * a) == pytest.approx(0.0, abs=1e-14)


def test_lower_envelope_peaks_at_its_critical_point(kpp_setup):
    cfg, prof = kpp_setup
    a = prof.a_bar
    slope = -cfg.mu * math.exp(-cfg.mu * a) + cfg.d * cfg.mu_tilde * math.exp(-cfg.mu_tilde * a)
    assert slope == pytest.approx(0.0, abs=1e-14)


@given(params(tau=1.0, small_chi=True), st.floats(0.2, 0.8))
def test_envelope_ordering(p, frac):
    mu = frac * mu_cap(p)
    try:
        cfg = IterationConfig.default(p, mu, h=0.1)
    except HypothesisError:
        assume(False)
    prof = build_profiles(cfg)
    assert prof.u_minus_shift.values.min() >= 0
    assert np.all(prof.u_minus_shift.values <= prof.u_plus.values)
    assert np.all(prof.u_minus.values <= prof.u_plus.values)


def _phi_residual(h):
    mu, a = 0.5, 1.0
    c = c_of_mu(a, mu)
    x = np.arange(-5, 5 + h / 2, h)
    phi = np.exp(-mu * x)
    lap = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2
    grad = (phi[2:] - phi[:-2]) / (2 * h)
    return float(np.abs(lap + c * grad + a * phi[1:-1]).max())


def test_exponential_profile_residual_is_second_order():
    r = [_phi_residual(h) for h in (0.1, 0.05, 0.025)]
    assert all(3.8 <= r[i] / r[i + 1] <= 4.2 for i in range(2))


@pytest.mark.parametrize("scheme", ["centered", "upwind"])
def test_discrete_tail_slope_near_mu(scheme):
    k = discrete_tail_slope(2.5, 1.0, 0.02, 0.5, scheme)
    assert abs(k - 0.5) < 0.01


# ---------------------------------------------------------------- inner evolution

def test_inner_without_coupling_ignores_frozen_density(kpp_setup):
    cfg, prof = kpp_setup
    a = inner_evolve(KPP, prof.u_plus, cfg, prof)
    b = inner_evolve(KPP, prof.u_minus_shift, cfg, prof)
    assert np.array_equal(a.u.values, b.u.values)


@pytest.mark.parametrize("p", [KPP, SMALL_CHI], ids=["kpp", "small_chi"])
def test_inner_monotone_and_confined(p):
    cfg = IterationConfig.default(p, 0.5)
    prof = build_profiles(cfg)
    rng = np.random.default_rng(5)
    for u in (prof.u_plus, random_sandwich(prof, rng)):
        res = inner_evolve(p, u, cfg, prof)
        assert res.monotone and res.confined
        lo = prof.u_minus_shift.values - res.slack
        hi = prof.u_plus.values + res.slack
        assert np.all((res.u.values >= lo) & (res.u.values <= hi))


def test_outer_iterates_stay_in_sandwich():
    trace = []
    cfg = IterationConfig.default(SMALL_CHI, 0.5)
    prof = build_profiles(cfg)
    outer_fixed_point(SMALL_CHI, 0.5, cfg, trace=trace)
    assert len(trace) >= 2
    for res in trace:
        assert res.confined


# ---------------------------------------------------------------- outer fixed point

@pytest.fixture(scope="module")
def kpp_wave():
    return outer_fixed_point(KPP, 0.5)


def test_kpp_wave_matches_bvp(kpp_wave):
    x = kpp_wave.u.grid.x
    assert np.abs(kpp_wave.u.values - kpp_bvp_oracle(x, 2.5, 0.5)).max() <= 1e-3
    assert abs(kpp_wave.plateau - 1.0) <= 0.01
    assert kpp_wave.decay_error <= 0.05
    assert kpp_wave.ok


def test_kpp_error_second_order_in_h():
    errs = []
    for h in (0.08, 0.04, 0.02):
        w = outer_fixed_point(KPP, 0.5, IterationConfig.default(KPP, 0.5, h=h))
        errs.append(np.abs(w.u.values - kpp_bvp_oracle(w.u.grid.x, 2.5, 0.5)).max())
    assert all(3.5 <= errs[i] / errs[i + 1] <= 4.5 for i in range(2)), errs


def test_small_chi_wave_and_restart():
    cfg = IterationConfig.default(SMALL_CHI, 0.5)
    up = outer_fixed_point(SMALL_CHI, 0.5, cfg, "upper")
    lo = outer_fixed_point(SMALL_CHI, 0.5, cfg, "lower")
    assert up.ok and lo.ok
    assert up.residual <= 1e-4 * up.u.values.max()
    assert star_norm(up.u, lo.u) <= 10 * cfg.outer_tol
    assert residual_4_4(SMALL_CHI, up) == pytest.approx(up.residual)


def test_outer_rejects_bad_start_and_mismatched_config():
    with pytest.raises(DomainError):
        outer_fixed_point(KPP, 0.5, start="middle")
    with pytest.raises(DomainError):
        outer_fixed_point(KPP, 0.4, IterationConfig.default(KPP, 0.5))


def test_wave_csv_has_metadata(kpp_wave):
    lines = kpp_wave.to_csv().splitlines()
    keys = [l[2:].split("=")[0] for l in lines if l.startswith("# ")]
    assert keys == ["mu", "c", "residual", "plateau", "decay_error"]
    assert "x,u,v1,v2" in lines


# ---------------------------------------------------------------- residual and norm

def _flat_profile(p, value):
    g = Grid1D(-10, 10, 201)
    f = Field(g, np.full(g.n, value))
    v1 = Field(g, np.full(g.n, value * p.mu1 / p.lambda1))
    v2 = Field(g, np.full(g.n, value * p.mu2 / p.lambda2))
    return WaveProfile(f, v1, v2, 0.5, 2.5, 0.0, value, 0.0)


def test_residual_of_trivial_states():
    assert residual_4_4(KPP, _flat_profile(KPP, 0.0)) == 0.0
    p = replace(KPP, a=2.0, b=3.0)
    assert residual_4_4(p, _flat_profile(p, 2.0 / 3.0)) <= 1e-12


def test_star_norm_basics():
    g = Grid1D(-60.0, 60.0, 1201)
    zero = Field(g, np.zeros(g.n))
    assert star_norm(zero, zero) == 0.0
    assert star_norm(zero, Field(g, np.full(g.n, 0.3))) == pytest.approx(0.3, rel=1e-12)
    far = Field(g, np.where(np.abs(g.x) > 1.0, 1.0, 0.0))
    near = Field(g, np.where(np.abs(g.x) <= 1.0, 1.0, 0.0))
    assert star_norm(zero, far) <= 0.5 * star_norm(zero, near) + 1e-12
