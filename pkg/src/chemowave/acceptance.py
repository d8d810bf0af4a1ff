"""The twelve acceptance checks, each returning a pass/fail verdict with a short detail line.

Shared by ``chemowave verify`` and the test suite.  Random draws use fixed seeds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_bvp

from .constants import ModelParams, kernel_constants, m_under_closed, piecewise_kernel_integrals, quadrature_oracle
from .construct import (
    IterationConfig,
    build_profiles,
    decay_error,
    inner_evolve,
    outer_fixed_point,
    plateau_value,
    star_norm,
)
from .elliptic import Field, Grid1D, chem_potentials, check_lemma_bounds, solve_v
from .sim import (
    CHEM_MODES,
    SimConfig,
    SineProbe,
    equilibrium_distance,
    measure_front_speed,
    ramp,
    run_bound_check,
    run_stability_experiment,
    simulate,
    sine_probe_check,
    track_front,
    trajectory_csv,
)
from .speed import c_of_mu, chi_limit_study, f_of_mu, wave_window

KPP = ModelParams(tau=1.0, chi1=0.0, chi2=0.0, lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, a=1.0, b=1.0)
SMALL_CHI = ModelParams(tau=1.0, chi1=0.02, chi2=0.05, lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, a=1.0, b=4.0)
LIMIT_BASE = ModelParams(tau=1.0, chi1=2.0, chi2=6.0, lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, a=1.0, b=1.1)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


# ---------------------------------------------------------------- random parameter draws

def _draw(rng: np.random.Generator, **fixed) -> ModelParams:
    vals = dict(
        tau=rng.uniform(0.0, 2.0),
        chi1=rng.uniform(0.0, 2.0),
        chi2=rng.uniform(0.0, 2.0),
        lambda1=rng.uniform(0.2, 5.0),
        lambda2=rng.uniform(0.2, 5.0),
        mu1=rng.uniform(0.2, 3.0),
        mu2=rng.uniform(0.2, 3.0),
        a=rng.uniform(0.2, 3.0),
        b=rng.uniform(0.2, 5.0),
    )
    vals.update(fixed)
    return ModelParams(**vals)


def case_draw(case: str, rng: np.random.Generator) -> ModelParams:
    """A draw landing in one closed-form case of the negative-part integral."""
    while True:
        p = _draw(rng)
        l1 = p.lambda1
        if case == "equal_rates":
            return replace(p, lambda2=l1)
        if case == "no_repulsion":
            return _draw(rng, chi2=0.0)
        ratio = rng.uniform(1.3, 4.0)
        faster_rep = case in ("rep_fast_att_dominant", "rep_fast_rep_dominant")
        l2 = l1 * ratio if faster_rep else l1 / ratio
        p = _draw(rng, lambda1=l1, lambda2=l2)
        att, rep = p.chi1 * p.lambda1 * p.mu1, p.chi2 * p.lambda2 * p.mu2
        if att <= 0 or rep <= 0:
            continue
        rep_dominant = rep >= att
        if case.endswith("rep_dominant") == rep_dominant:
            return p


CASES = (
    "rep_fast_att_dominant",  # lambda2 > lambda1, chi2 l2 mu2 <= chi1 l1 mu1
    "rep_fast_rep_dominant",  # lambda2 > lambda1, chi2 l2 mu2 >= chi1 l1 mu1
    "rep_slow_att_dominant",  # lambda2 < lambda1, chi2 l2 mu2 <= chi1 l1 mu1
    "rep_slow_rep_dominant",  # lambda2 < lambda1, chi2 l2 mu2 >= chi1 l1 mu1
    "equal_rates",
    "no_repulsion",
)


# ---------------------------------------------------------------- criteria

def criterion_1() -> tuple[bool, str]:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        p = _draw(rng)
        pos, _neg = piecewise_kernel_integrals(p)
        kc = kernel_constants(p)
        net = p.net_coupling
        err = max(abs(pos - m_under_closed(p) - net), abs(kc.m_bar - kc.m_under - net)) / (1.0 + abs(net))
        worst = max(worst, err)
    return worst <= 1e-10, f"max scaled identity error {worst:.3e} over 1000 draws"


def criterion_2() -> tuple[bool, str]:
    rng = np.random.default_rng(202)
    worst = {}
    for case in CASES:
        w = 0.0
        for _ in range(100):
            p = case_draw(case, rng)
            closed = m_under_closed(p)
            quad = quadrature_oracle(p, "m_under", tol=max(1e-14, 1e-12 * closed))
            w = max(w, abs(closed - quad) / max(abs(quad), 1e-300) if closed or quad else 0.0)
        worst[case] = w
    ok = all(v <= 1e-8 for v in worst.values())
    return ok, "max relative gap " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


def criterion_3() -> tuple[bool, str]:
    w = wave_window(KPP)
    ok = abs(w.c_star - 2.0) <= 1e-9 and w.unbounded
    return ok, f"c*={w.c_star:.17g}, c**={'inf' if w.unbounded else w.c_double_star}"


def criterion_4() -> tuple[bool, str]:
    rows = chi_limit_study(LIMIT_BASE, [1e-1, 1e-2, 1e-3])
    limit = c_of_mu(LIMIT_BASE.a, rows[0].window.mu_cap)
    cs = [r.window.c_star for r in rows]
    decreasing = all(b <= a + 1e-12 for a, b in zip(cs, cs[1:]))
    gap = cs[-1] - limit
    last = rows[-1].window
    big = last.unbounded or last.c_double_star > 100.0 * math.sqrt(LIMIT_BASE.a)
    ok = decreasing and 0 <= gap + 1e-12 and gap <= 1e-2 * limit and big
    return ok, f"c*={['%.6f' % c for c in cs]} -> {limit:.6f}, last c**={last.c_double_star:.4g}"


def _eigen_error(n: int, mu: float = 0.1) -> float:
    p = KPP
    c = c_of_mu(p.a, mu)
    g = Grid1D(-20.0, 40.0, n)
    u = Field.of(g, lambda x: np.exp(-mu * x))
    v = solve_v(p, c, u, 1, mu, left_slope=mu)
    exact = p.mu1 * np.exp(-mu * g.x) / (p.lambda1 + p.tau * mu * c - mu * mu)
    return float(np.abs(v.values - exact).max())


def criterion_5() -> tuple[bool, str]:
    e_main = _eigen_error(4096)
    errs = [_eigen_error(n) for n in (1025, 2049, 4097)]
    orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
    ok = e_main <= 1e-6 and all(abs(o - 2.0) <= 0.2 for o in orders)
    return ok, f"error {e_main:.2e} at n=4096, orders {orders[0]:.3f}, {orders[1]:.3f}"


LEMMA_PARAMS = ModelParams(tau=1.0, chi1=0.2, chi2=0.5, lambda1=1.0, lambda2=2.0, mu1=1.0, mu2=1.0, a=1.0, b=4.0)


def random_sandwich(profiles, rng: np.random.Generator) -> Field:
    """A field between the shifted lower and the upper envelope, smooth or rough."""
    g = profiles.u_plus.grid
    x = g.x
    if rng.random() < 0.5:
        theta = rng.random(g.n)
    else:
        k = rng.uniform(0.05, 2.0, 4)
        ph = rng.uniform(0, 2 * np.pi, 4)
        theta = 0.5 + 0.5 * np.sin(np.outer(x, k) + ph).mean(axis=1)
    lo, hi = profiles.u_minus.values, profiles.u_plus.values
    return Field(g, lo + np.clip(theta, 0.0, 1.0) * (hi - lo))


def criterion_6() -> tuple[bool, str]:
    p, mu = LEMMA_PARAMS, 0.5
    cfg = IterationConfig.default(p, mu, h=0.05)
    prof = build_profiles(cfg)
    rng = np.random.default_rng(606)
    c = c_of_mu(p.a, mu)
    worst = math.inf
    fails = 0
    for _ in range(50):
        u = random_sandwich(prof, rng)
        rep = check_lemma_bounds(p, mu, cfg.c0, prof, u, chem_potentials(p, c, u, mu))
        worst = min(worst, rep.worst)
        fails += not rep.ok
    return fails == 0, f"{50 - fails}/50 fields inside, worst margin {worst:.3e}"


def criterion_7() -> tuple[bool, str]:
    rng = np.random.default_rng(707)
    runs = []
    for p in (KPP, SMALL_CHI, LEMMA_PARAMS):
        cfg = IterationConfig.default(p, 0.5)
        prof = build_profiles(cfg)
        frozen = [prof.u_plus, prof.u_minus_shift, random_sandwich(prof, rng)]
        for u in frozen:
            res = inner_evolve(p, u, cfg, prof)
            runs.append((res.monotone and res.confined, res.max_increase, max(res.above_upper, res.below_lower), res.slack))
    ok = all(r[0] for r in runs)
    inc = max(r[1] for r in runs)
    env = max(r[2] for r in runs)
    return ok, f"{len(runs)} runs, max increase {inc:.2e}, max envelope excess {env:.2e}, slack {runs[0][3]:.1e}"


def kpp_bvp_oracle(x: np.ndarray, c: float, mu: float, right: float = 18.0) -> np.ndarray:
    """Independent collocation solve of U'' + cU' + U(1 - U) = 0 normalized so exp(mu x) U -> 1."""
    left = float(x[0])
    nu = 0.5 * (math.sqrt(c * c + 4.0) - c)

    def tail(z):
        e = np.exp(-mu * z)
        return e - 2.0 * e**2 + 8.0 * e**3  # valid for mu = 0.5, c = 2.5

    def rhs(z, y):
        return np.vstack([y[1], -c * y[1] - y[0] * (1.0 - y[0])])

    def bc(ya, yb):
        return np.array([ya[1] - nu * (ya[0] - 1.0), yb[0] - tail(right)])

    mesh = np.linspace(left, right, 4001)
    guess = np.vstack([1.0 / (1.0 + np.exp(mesh)), -np.exp(mesh) / (1.0 + np.exp(mesh)) ** 2])
    sol = solve_bvp(rhs, bc, mesh, guess, tol=1e-10, max_nodes=200000)
    if not sol.success:
        raise RuntimeError(f"BVP oracle failed: {sol.message}")
    return np.where(x <= right, sol.sol(np.minimum(x, right))[0], tail(x))


def criterion_8() -> tuple[bool, str]:
    mu = 0.5
    prof = outer_fixed_point(KPP, mu)
    x = prof.u.grid.x
    oracle = kpp_bvp_oracle(x, prof.c, mu)
    sup = float(np.abs(prof.u.values - oracle).max())
    plat = abs(prof.plateau - 1.0)
    ok = sup <= 1e-3 and plat <= 0.01 and prof.decay_error <= 0.05
    return ok, f"sup gap to BVP {sup:.2e}, plateau error {plat:.2e}, decay error {prof.decay_error:.2e}"


def criterion_9() -> tuple[bool, str]:
    p, mu = SMALL_CHI, 0.5
    win = wave_window(p)
    feasible = win.mu_lo < mu < win.mu_hi and f_of_mu(p, mu) < p.b
    cfg = IterationConfig.default(p, mu)
    up = outer_fixed_point(p, mu, cfg, start="upper")
    lo = outer_fixed_point(p, mu, cfg, start="lower")
    umax = float(up.u.values.max())
    gap = star_norm(up.u, lo.u)
    ok = (
        feasible
        and up.residual <= 1e-4 * umax
        and abs(up.plateau - p.a / p.b) <= 0.01 * p.a / p.b
        and up.decay_error <= 0.05
        and gap <= 10.0 * cfg.outer_tol
    )
    return ok, (
        f"window ({win.mu_lo:.4f}, {win.mu_hi:.4f}), residual {up.residual:.2e}, plateau {up.plateau:.6f}, "
        f"decay {up.decay_error:.2e}, restart gap {gap:.2e}"
    )


def criterion_10() -> tuple[bool, str]:
    g = Grid1D(0.0, 40.0, 801)
    rng = np.random.default_rng(1010)
    worst = 0.0
    ok = True
    runs = 0
    strong = ModelParams(tau=1.0, chi1=0.4, chi2=0.1, lambda1=1.0, lambda2=2.0, mu1=1.0, mu2=1.0, a=1.0, b=1.5)
    for p in (SMALL_CHI, strong):
        for mode in CHEM_MODES:
            for u0 in (
                Field(g, 0.5 + 0.5 * np.sin(g.x) ** 2 + 0.3 * rng.random(g.n)),
                Field(g, 0.05 * p.a / p.b * (1.0 + rng.random(g.n))),
                ramp(g, 20.0, 2.0 * p.a / p.b),
            ):
                rep = run_bound_check(p, u0, SimConfig(g, 0.01, 20.0, chem_mode=mode))
                ok &= rep.ok
                runs += 1
                worst = max(worst, rep.worst_ratio)
    stab = []
    for p in (SMALL_CHI, strong):
        for mode in CHEM_MODES:
            u0 = Field(g, p.a / p.b * (1.0 + 0.5 * np.sin(0.7 * g.x)))
            rep = run_stability_experiment(p, u0, SimConfig(g, 0.01, 60.0, chem_mode=mode))
            stab.append(rep.distance)
            ok &= rep.converged
    return ok, f"worst ceiling ratio {worst:.4f} over {runs} runs, stability distances {max(stab):.2e} max"


def criterion_11() -> tuple[bool, str]:
    t_end, h, dt = 60.0, 0.1, 0.02
    g = Grid1D.with_spacing(0.0, t_end * 3.0 + 20.0, h)
    cfg = SimConfig(g, dt, t_end)
    track, res = track_front(KPP, ramp(g, 10.0, 1.0), cfg, every=25, record_every=50)
    s0 = measure_front_speed(track).speed
    track9, _ = track_front(SMALL_CHI, ramp(g, 10.0, SMALL_CHI.a / SMALL_CHI.b), cfg, every=25)
    s9 = measure_front_speed(track9).speed
    eps = 0.05
    slow = sine_probe_check(KPP, res.history, SineProbe.build(KPP.a, 1.5, eps, t0=10.0))
    fast = sine_probe_check(KPP, res.history, SineProbe.build(KPP.a, 2.5, eps, L=SineProbe.build(KPP.a, 1.5, eps).L, t0=10.0))
    ok = abs(s0 - 2.0) <= 0.1 and s9 >= 0.95 * 2.0 * math.sqrt(SMALL_CHI.a) and slow.holds and not fast.holds
    fail = "never" if fast.first_failure is None else f"at t={fast.first_failure:.2f}"
    return ok, f"speed {s0:.4f} (chi=0), {s9:.4f} (small chi); probe q=1.5 holds={slow.holds}, q=2.5 fails {fail}"


def criterion_12() -> tuple[bool, str]:
    p = SMALL_CHI
    g = Grid1D(0.0, 50.0, 501)
    drift = {}
    for mode in CHEM_MODES:
        cfg = SimConfig(g, 0.01, 10.0, chem_mode=mode)
        res = simulate(p, Field(g, np.full(g.n, p.equilibrium[0])), cfg)
        drift[mode] = equilibrium_distance(p, res.final) / cfg.t_end
    g2 = Grid1D(0.0, 30.0, 301)
    cfg2 = SimConfig(g2, 0.01, 2.0)
    outs = [trajectory_csv(simulate(p, ramp(g2, 10.0, 0.25), cfg2, record_every=50).history).encode() for _ in range(2)]
    same = outs[0] == outs[1]
    ok = all(d <= 1e-8 for d in drift.values()) and same
    rates = ", ".join(f"{m}={d:.1e}" for m, d in drift.items())
    return ok, f"drift per unit time {rates}, byte-identical CSV={same}"


CRITERIA: dict[int, tuple[str, Callable[[], tuple[bool, str]]]] = {
    1: ("identity M_bar - M_under = chi2 mu2 - chi1 mu1", criterion_1),
    2: ("closed forms vs quadrature", criterion_2),
    3: ("KPP window reduction", criterion_3),
    4: ("small-chi limits of the window", criterion_4),
    5: ("elliptic solver accuracy and order", criterion_5),
    6: ("envelope and gradient bounds", criterion_6),
    7: ("inner evolution monotone and confined", criterion_7),
    8: ("KPP wave vs BVP oracle", criterion_8),
    9: ("chemotactic wave construction", criterion_9),
    10: ("global ceilings and stability", criterion_10),
    11: ("spreading speed and sine probe", criterion_11),
    12: ("equilibrium drift and determinism", criterion_12),
}


def run_criterion(k: int) -> CriterionResult:
    title, fn = CRITERIA[k]
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported rather than raised
        ok, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CriterionResult(k, title, bool(ok), detail, time.perf_counter() - t0)
