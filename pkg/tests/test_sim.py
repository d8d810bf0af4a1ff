import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chemowave.acceptance import KPP, SMALL_CHI
from chemowave.construct import outer_fixed_point
from chemowave.elliptic import Field, Grid1D
from chemowave.errors import DomainError, HypothesisError
from chemowave.sim import (
    CHEM_MODES,
    FrontTrack,
    SimConfig,
    SineProbe,
    equilibrium_distance,
    front_position,
    initial_state,
    measure_front_speed,
    ramp,
    run_bound_check,
    run_stability_experiment,
    simulate,
    sine_probe_check,
    step,
    suggest_dt,
    track_front,
    trajectory_csv,
)


def test_config_validation():
    g = Grid1D(0, 1, 5)
    with pytest.raises(DomainError):
        SimConfig(g, 0.0, 1.0)
    with pytest.raises(DomainError):
        SimConfig(g, 0.1, 1.0, chem_mode="hybrid")
    assert SimConfig(g, 0.1, 1.0).n_steps == 10


@pytest.mark.parametrize("mode", CHEM_MODES)
def test_equilibrium_is_preserved(mode):
    g = Grid1D(0.0, 20.0, 201)
    p = SMALL_CHI
    cfg = SimConfig(g, 0.01, 5.0, chem_mode=mode)
    res = simulate(p, Field(g, np.full(g.n, p.a / p.b)), cfg)
    assert equilibrium_distance(p, res.final) / cfg.t_end <= 1e-10


def test_zero_state_stays_zero():
    g = Grid1D(0.0, 10.0, 101)
    res = simulate(SMALL_CHI, Field(g, np.zeros(g.n)), SimConfig(g, 0.01, 2.0))
    assert not res.final.u.values.any()


def _logistic_error(dt):
    g = Grid1D(0.0, 1.0, 3)
    res = simulate(KPP, Field(g, np.full(g.n, 0.2)), SimConfig(g, dt, 0.5))
    t = res.final.t
    exact = 0.2 / (0.2 + 0.8 * math.exp(-t))
    return float(np.abs(res.final.u.values - exact).max())


def test_uncoupled_constant_follows_logistic_ode():
    coarse, fine = _logistic_error(1e-4), _logistic_error(2.5e-5)
    assert fine <= 1e-6
    assert 3.5 <= coarse / fine <= 4.5  # first order in dt


def test_single_step_matches_simulate():
    g = Grid1D(0.0, 10.0, 101)
    u0 = ramp(g, 5.0, 0.25)
    cfg = SimConfig(g, 0.01, 0.01)
    st = step(initial_state(SMALL_CHI, u0, cfg), SMALL_CHI, cfg)
    res = simulate(SMALL_CHI, u0, cfg)
    assert np.array_equal(st.u.values, res.final.u.values)


@given(arrays(float, 101, elements=st.floats(0, 1)), arrays(float, 101, elements=st.floats(0, 0.5)))
def test_comparison_keeps_order(u, bump):
    g = Grid1D(0.0, 20.0, 101)
    cfg = SimConfig(g, 0.02, 1.0)
    lo = simulate(KPP, Field(g, u), cfg).final.u.values
    hi = simulate(KPP, Field(g, u + bump), cfg).final.u.values
    assert np.all(hi >= lo - 1e-12)


def test_trajectory_csv_schema_and_determinism():
    g = Grid1D(0.0, 10.0, 21)
    cfg = SimConfig(g, 0.05, 0.2)
    runs = [trajectory_csv(simulate(SMALL_CHI, ramp(g, 3.0, 0.25), cfg, record_every=2).history) for _ in range(2)]
    assert runs[0] == runs[1]
    assert runs[0].splitlines()[0] == "t,x,u,v1,v2"


def test_suggested_step_is_positive_and_shrinks_with_h():
    big = suggest_dt(SMALL_CHI, Grid1D(0, 10, 101), 1.0, 2.0)
    small = suggest_dt(SMALL_CHI, Grid1D(0, 10, 1001), 1.0, 2.0)
    assert 0 < small <= big


# ---------------------------------------------------------------- ceilings and stability

def test_uncoupled_ceiling_is_max_of_data_and_capacity():
    g = Grid1D(0.0, 20.0, 201)
    u0 = Field(g, 1.7 * np.exp(-((g.x - 10) ** 2)))
    rep = run_bound_check(KPP, u0, SimConfig(g, 0.01, 5.0))
    assert rep.u_ceiling == pytest.approx(max(1.7, 1.0), rel=1e-6)
    assert rep.ok and rep.worst_ratio <= 1.0 + 1e-12


@pytest.mark.parametrize("mode", CHEM_MODES)
def test_ceiling_below_second_branch(mode):
    p = SMALL_CHI
    g = Grid1D(0.0, 30.0, 301)
    u0 = Field(g, 0.2 * (1 + np.sin(g.x) ** 2))
    rep = run_bound_check(p, u0, SimConfig(g, 0.01, 10.0, chem_mode=mode))
    assert rep.ok
    assert rep.v_max[0] <= rep.v_ceilings[0] * 1.01


def test_constant_density_chemicals_reach_their_ceiling():
    p = SMALL_CHI
    g = Grid1D(0.0, 10.0, 51)
    rep = run_bound_check(p, Field(g, np.full(g.n, 0.1)), SimConfig(g, 0.01, 1.0, chem_mode="parabolic"))
    assert rep.ok and rep.v_max[0] <= p.mu1 * rep.u_ceiling / p.lambda1 + 1e-12


def test_bound_check_rejects_infeasible():
    p = replace(SMALL_CHI, chi1=5.0, b=1.0)
    g = Grid1D(0, 1, 5)
    with pytest.raises(HypothesisError):
        run_bound_check(p, Field(g, np.ones(5)), SimConfig(g, 0.1, 1.0))


def test_stability_from_equilibrium_is_immediate():
    g = Grid1D(0.0, 10.0, 51)
    rep = run_stability_experiment(SMALL_CHI, Field(g, np.full(g.n, 0.25)), SimConfig(g, 0.01, 1.0))
    assert rep.converged and rep.time == pytest.approx(0.0, abs=0.011) and rep.distance <= 1e-12


@pytest.mark.parametrize("mode", CHEM_MODES)
def test_stability_from_perturbation(mode):
    p = SMALL_CHI
    g = Grid1D(0.0, 40.0, 401)
    u0 = Field(g, p.a / p.b * (1 + 0.5 * np.sin(0.7 * g.x)))
    rep = run_stability_experiment(p, u0, SimConfig(g, 0.01, 40.0, chem_mode=mode))
    assert rep.converged and rep.distance <= 1e-3


def test_stability_time_matches_logistic_ode():
    g = Grid1D(0.0, 5.0, 11)
    rep = run_stability_experiment(KPP, Field(g, np.full(g.n, 2.0)), SimConfig(g, 0.001, 20.0))
    # u - 1 = e^{-t} / (2 - e^{-t}) reaches 1e-3 at e^{-t} = 2e-3 / 1.001
    t_exact = -math.log(2e-3 / 1.001)
    assert rep.time == pytest.approx(t_exact, rel=0.05)


def test_stability_needs_positive_data():
    g = Grid1D(0, 1, 5)
    with pytest.raises(DomainError):
        run_stability_experiment(KPP, Field(g, np.zeros(5)), SimConfig(g, 0.1, 1.0))


# ---------------------------------------------------------------- fronts

def test_synthetic_track_speed_is_exact():
    tr = FrontTrack()
    for k in range(40):
        tr.add(0.5 * k, 1.0 + 2.0 * 0.5 * k)
    est = measure_front_speed(tr)
    assert est.speed == pytest.approx(2.0, abs=1e-12)
    assert tr.to_csv().splitlines()[0] == "t,front_x"


def test_track_needs_samples():
    with pytest.raises(DomainError):
        measure_front_speed(FrontTrack([(0.0, 1.0)]))


def test_front_position_interpolates():
    g = Grid1D(0.0, 4.0, 5)
    assert front_position(Field(g, np.array([1.0, 1.0, 0.6, 0.2, 0.0])), 0.5) == pytest.approx(2.25)
    assert front_position(Field(g, np.zeros(5)), 0.5) is None


@pytest.fixture(scope="module")
def kpp_run():
    g = Grid1D.with_spacing(0.0, 200.0, 0.1)
    cfg = SimConfig(g, 0.02, 60.0)
    return track_front(KPP, ramp(g, 10.0, 1.0), cfg, every=25, record_every=50)


def test_kpp_spreading_speed(kpp_run):
    track, _ = kpp_run
    assert measure_front_speed(track).speed == pytest.approx(2.0, rel=0.05)


def test_stationary_probe_stays_below(kpp_run):
    _, res = kpp_run
    rep = sine_probe_check(KPP, res.history, SineProbe.build(KPP.a, 0.0, 0.05, t0=10.0))
    assert rep.holds and rep.checked_until > 50.0


def test_fast_probe_eventually_fails(kpp_run):
    _, res = kpp_run
    width = SineProbe.build(KPP.a, 1.5, 0.05).L
    probe = SineProbe.build(KPP.a, 2.5, 0.05, L=width, t0=10.0)
    assert not probe.certifying
    rep = sine_probe_check(KPP, res.history, probe)
    assert not rep.holds and rep.first_failure is not None


def test_zero_amplitude_probe_is_zero():
    probe = SineProbe.build(1.0, 1.0, 0.05)
    assert not probe.values(np.linspace(-5, 50, 200), 3.0).any()


def test_probe_width_requires_slow_speed():
    with pytest.raises(DomainError):
        SineProbe.build(1.0, 2.5, 0.05)


@pytest.fixture(scope="module")
def constructed_wave():
    return outer_fixed_point(SMALL_CHI, 0.5)


def test_wave_is_stationary_in_its_frame(constructed_wave):
    w = constructed_wave
    cfg = SimConfig(w.u.grid, 0.005, 20.0, frame_speed=w.c, right_slope=w.mu)
    track, _ = track_front(SMALL_CHI, w.u, cfg, every=20)
    assert abs(measure_front_speed(track).speed) <= 0.02 * w.c


def test_lab_and_moving_frame_speeds_agree(constructed_wave):
    w = constructed_wave
    lab, _ = track_front(SMALL_CHI, w.u, SimConfig(w.u.grid, 0.005, 10.0, right_slope=w.mu), every=20)
    mov, _ = track_front(SMALL_CHI, w.u, SimConfig(w.u.grid, 0.005, 10.0, frame_speed=w.c, right_slope=w.mu),
                         every=20)
    lab_speed = measure_front_speed(lab).speed
    frame_speed = w.c + measure_front_speed(mov).speed
    assert lab_speed == pytest.approx(frame_speed, rel=0.02)
