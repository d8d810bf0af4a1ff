"""Traveling-wave construction by envelopes, monotone time stepping and an outer fixed point.

For a decay exponent ``mu`` the wave travels at ``c_mu = mu + a/mu``.  The
envelopes are ``U+ = min(C0, exp(-mu x))`` and ``U- = max(0, exp(-mu x) - d exp(-mu_t x))``.
Given a frozen density ``u`` the chemicals are solved once, and the scalar
equation for U is stepped from U+ down to its steady state.  The outer loop
iterates u -> U(.; u) until successive iterates agree in the weighted norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq, minimize_scalar

from .constants import ModelParams, kernel_constants, rate_constants
from .elliptic import ChemPotentials, Field, Grid1D, chem_potentials, operator_bands, same_grid
from .errors import DomainError, HypothesisError, NonConvergenceError
from .speed import c_of_mu, mu_cap


def tilde_c0(p: ModelParams, mu: float) -> float:
    """Smallest constant ceiling that is a super-solution at speed c_mu."""
    kc = kernel_constants(p)
    c = c_of_mu(p.a, mu)
    den = p.b + p.net_coupling - kc.m_bar - c * p.tau * kc.k
    if den <= 0:
        raise HypothesisError(f"ceiling denominator {den:.6g} is not positive at mu={mu}")
    return p.a / den


def mu_tilde_upper(p: ModelParams, mu: float) -> float:
    rc = rate_constants(p, mu)
    c = c_of_mu(p.a, mu)
    slack = (p.b + p.net_coupling - (p.tau * c + mu) * rc.k_tm) / (1.0 + rc.k_tm)
    return min(mu_cap(p), 2.0 * mu, mu + slack)


def select_mu_tilde(p: ModelParams, mu: float) -> float:
    upper = mu_tilde_upper(p, mu)
    if not upper > mu:
        raise HypothesisError(f"no room for the secondary exponent above mu={mu} (upper={upper:.6g})")
    return 0.5 * (mu + upper)


@dataclass(frozen=True)
class DZero:
    d0: float
    a0: float
    a1: float
    ceiling_term: float


def d_zero(p: ModelParams, mu: float, mu_tilde: float, c0: float) -> DZero:
    if not mu < mu_tilde:
        raise DomainError("need mu < mu_tilde")
    if mu * mu_tilde >= p.a:
        raise DomainError(f"mu*mu_tilde={mu * mu_tilde:.6g} must stay below a={p.a}")
    rc = rate_constants(p, mu)
    c = c_of_mu(p.a, mu)
    a0 = (mu_tilde - mu) * (p.a - mu * mu_tilde) / mu
    a1 = (c * p.tau + mu) * rc.k_tm + rc.m_under_tm + p.b + p.net_coupling
    ceiling = c0 ** ((mu - mu_tilde) / mu)
    return DZero(max(1.0, a1 / a0, ceiling), a0, a1, ceiling)


@dataclass(frozen=True)
class IterationConfig:
    mu: float
    mu_tilde: float
    d: float
    delta: float
    c0: float
    grid: Grid1D
    dt: float
    inner_tol: float = 1e-8
    outer_tol: float = 1e-8
    max_inner_steps: int = 200_000
    max_outer_iters: int = 60
    advection: str = "centered"  # or "upwind" (explicit, first order)
    d0: Optional[DZero] = field(default=None, compare=False)

    def tail_slope(self, p: ModelParams) -> float:
        return discrete_tail_slope(c_of_mu(p.a, self.mu), p.a, self.grid.h, self.mu, self.advection)

    @classmethod
    def default(
        cls,
        p: ModelParams,
        mu: float,
        h: float = 0.02,
        margin: Optional[float] = None,
        d_factor: float = 2.0,
        **overrides,
    ) -> "IterationConfig":
        """Constants from the construction: C0 = tilde C0, d = d_factor * d0, delta = h.

        The default left margin is 25/nu, nu the rate at which the plateau is approached,
        measured from the front of U+ or the root of the lower envelope, whichever is further left.
        """
        if margin is None:
            c = c_of_mu(p.a, mu)
            nu = 0.5 * (math.sqrt(c * c + 4.0 * p.a) - c)
            margin = max(40.0, 25.0 / nu)
        c0 = overrides.pop("c0", None) or tilde_c0(p, mu)
        mu_t = overrides.pop("mu_tilde", None) or select_mu_tilde(p, mu)
        dz = d_zero(p, mu, mu_t, c0)
        d = overrides.pop("d", None) or d_factor * dz.d0
        a_under = math.log(d) / (mu_t - mu)
        z_max = (math.log(1e9) - math.log(c0)) / mu
        z_max = max(z_max, a_under + 5.0)
        # the margin counts from whichever comes first: the lower envelope's root or the front of U+
        x_front = -math.log(c0) / mu
        grid = overrides.pop("grid", None) or Grid1D.with_spacing(min(a_under, x_front) - margin, z_max, h)
        advection = overrides.get("advection", "centered")
        dt = overrides.pop("dt", None) or stable_dt(p, mu, c0, grid.h, advection)
        overrides.setdefault("delta", grid.h)
        return cls(mu=mu, mu_tilde=mu_t, d=d, c0=c0, grid=grid, dt=dt, d0=dz, **overrides)


def discrete_tail_slope(c: float, a: float, h: float, mu: float, scheme: str = "centered") -> float:
    """Ghost-node Robin slope that keeps the grid's own exponential tail steady.

    At speed c the difference operator annihilates exp(-kappa x) for a kappa
    within O(h^2) of ``mu``; closing the right end with slope sinh(kappa h)/h
    makes that tail exact, so the truncated problem has no spurious drift.
    """
    if scheme == "centered":
        def rel(k):
            return (2.0 * math.cosh(k * h) - 2.0) / h**2 - c * math.sinh(k * h) / h + a
    else:
        def rel(k):
            return (2.0 * math.cosh(k * h) - 2.0) / h**2 + c * (math.exp(-k * h) - 1.0) / h + a
    lo, hi = 0.5 * mu, mu
    while rel(hi) > 0 and hi < 4.0 * mu:
        hi *= 1.01
    if rel(hi) > 0:
        kappa = minimize_scalar(rel, bounds=(lo, 4.0 * mu), method="bounded").x
    else:
        kappa = brentq(rel, lo, hi, xtol=1e-15)
    return math.sinh(kappa * h) / h


def stable_dt(p: ModelParams, mu: float, c0: float, h: float, advection: str = "centered") -> float:
    kc = kernel_constants(p)
    c = c_of_mu(p.a, mu)
    react = p.a + (kc.m_bar + kc.m_under) * c0 + c * p.tau * kc.k * c0 + 2.0 * abs(p.b + p.net_coupling) * c0
    bound = 1.0 / react
    if advection == "upwind":
        bound = min(bound, h / (c + kc.k * c0 * 2.0 + 1e-300))
    return 0.4 * bound


@dataclass(frozen=True)
class ProfileSet:
    phi: Field
    u_plus: Field
    u_minus: Field
    u_minus_shift: Field
    a_under: float
    a_bar: float


def build_profiles(cfg: IterationConfig) -> ProfileSet:
    x = cfg.grid.x
    mu, mt, d = cfg.mu, cfg.mu_tilde, cfg.d
    phi = np.exp(-mu * x)
    lower = np.maximum(0.0, phi - d * np.exp(-mt * x))
    a_under = math.log(d) / (mt - mu)
    a_bar = math.log(d * mt / mu) / (mt - mu)
    x_cut = a_under + cfg.delta
    level = max(0.0, math.exp(-mu * x_cut) - d * math.exp(-mt * x_cut))
    shifted = np.where(x <= x_cut, level, lower)
    g = cfg.grid
    return ProfileSet(
        phi=Field(g, phi),
        u_plus=Field(g, np.minimum(cfg.c0, phi)),
        u_minus=Field(g, lower),
        u_minus_shift=Field(g, shifted),
        a_under=a_under,
        a_bar=a_bar,
    )


@dataclass(frozen=True)
class InnerResult:
    u: Field
    steps: int
    t: float
    max_increase: float  # largest nodewise increase between consecutive steps
    above_upper: float  # largest excess over U+
    below_lower: float  # largest shortfall under the shifted lower envelope
    slack: float

    @property
    def monotone(self) -> bool:
        return self.max_increase <= self.slack

    @property
    def confined(self) -> bool:
        return self.above_upper <= self.slack and self.below_lower <= self.slack


def monotone_slack(cfg: IterationConfig) -> float:
    return 10.0 * cfg.dt * cfg.grid.h**2 * max(cfg.c0, 1.0)


class _InnerStepper:
    """Implicit diffusion (and centered advection), explicit reaction, frozen chemicals."""

    def __init__(self, p: ModelParams, pots: ChemPotentials, cfg: IterationConfig):
        self.p, self.cfg = p, cfg
        c = c_of_mu(p.a, cfg.mu)
        w, z = pots.w.values, pots.z.values
        self.drift = c - w
        self.growth = p.a + z + c * p.tau * w
        self.beta = p.b + p.net_coupling
        dt = cfg.dt
        self.slope = cfg.tail_slope(p)
        if cfg.advection == "centered":
            lower, diag, upper = operator_bands(cfg.grid, self.drift, 0.0, 0.0, self.slope)
        elif cfg.advection == "upwind":
            lower, diag, upper = operator_bands(cfg.grid, 0.0, 0.0, 0.0, self.slope)
        else:
            raise DomainError(f"unknown advection scheme {cfg.advection!r}")
        ab = np.zeros((3, cfg.grid.n))
        ab[0, 1:] = -dt * upper[:-1]
        ab[1] = 1.0 - dt * diag
        ab[2, :-1] = -dt * lower[1:]
        self.ab = ab

    def explicit(self, u: np.ndarray) -> np.ndarray:
        out = self.growth * u - self.beta * u * u
        if self.cfg.advection == "upwind":
            h = self.cfg.grid.h
            fwd = np.empty_like(u)
            bwd = np.empty_like(u)
            fwd[:-1] = (u[1:] - u[:-1]) / h
            fwd[-1] = -self.slope * u[-1]
            bwd[1:] = (u[1:] - u[:-1]) / h
            bwd[0] = 0.0
            dr = self.drift
            out += np.where(dr > 0, dr * fwd, dr * bwd)
        return out

    def step(self, u: np.ndarray) -> np.ndarray:
        rhs = u + self.cfg.dt * self.explicit(u)
        return solve_banded((1, 1), self.ab, rhs)


def inner_evolve(p: ModelParams, u_frozen: Field, cfg: IterationConfig, profiles: ProfileSet,
                 pots: Optional[ChemPotentials] = None) -> InnerResult:
    """Step the frozen-chemical equation from U+ until it stops changing."""
    same_grid(u_frozen, profiles.u_plus)
    if pots is None:
        pots = chem_potentials(p, c_of_mu(p.a, cfg.mu), u_frozen, cfg.tail_slope(p))
    stepper = _InnerStepper(p, pots, cfg)
    upper, lower = profiles.u_plus.values, profiles.u_minus_shift.values
    u = upper.copy()
    slack = monotone_slack(cfg)
    max_inc = above = below = 0.0
    for k in range(1, cfg.max_inner_steps + 1):
        new = stepper.step(u)
        diff = new - u
        max_inc = max(max_inc, float(diff.max()))
        above = max(above, float((new - upper).max()))
        below = max(below, float((lower - new).max()))
        u = new
        if float(np.abs(diff).max()) / cfg.dt < cfg.inner_tol:
            return InnerResult(Field(cfg.grid, u), k, k * cfg.dt, max_inc, above, below, slack)
    raise NonConvergenceError(f"inner evolution did not settle in {cfg.max_inner_steps} steps")


def star_norm(u1: Field, u2: Field) -> float:
    """Sum over n >= 1 of 2^-n times the sup of |u1 - u2| on [-n, n]."""
    g = same_grid(u1, u2)
    x = g.x
    diff = np.abs(u1.values - u2.values)
    n_max = int(math.ceil(max(abs(g.x_lo), abs(g.x_hi))))
    total = 0.0
    for n in range(1, n_max + 1):
        mask = np.abs(x) <= n
        if mask.any():
            total += 0.5**n * float(diff[mask].max())
    # beyond the grid extent the sup no longer grows
    if n_max >= 1:
        total += 0.5**n_max * float(diff.max())
    return total


@dataclass(frozen=True)
class WaveProfile:
    u: Field
    v1: Field
    v2: Field
    mu: float
    c: float
    residual: float
    plateau: float
    decay_error: float
    outer_iters: int = 0
    last_change: float = math.nan
    failures: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_csv(self) -> str:
        meta = {
            "mu": self.mu,
            "c": self.c,
            "residual": self.residual,
            "plateau": self.plateau,
            "decay_error": self.decay_error,
        }
        lines = [f"# {k}={v:.17g}" for k, v in meta.items()]
        lines.append("x,u,v1,v2")
        for row in zip(self.u.grid.x, self.u.values, self.v1.values, self.v2.values):
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def residual_4_4(p: ModelParams, prof: WaveProfile) -> float:
    """Max interior residual of the stationary wave equation with the profile's own chemicals."""
    return float(np.abs(stationary_residual(p, prof.u, prof.v1, prof.v2, prof.mu)).max(initial=0.0))


def stationary_residual(p: ModelParams, u: Field, v1: Field, v2: Field, mu: float) -> np.ndarray:
    g = same_grid(u, v1, v2)
    h = g.h
    c = c_of_mu(p.a, mu)
    U = u.values
    s = np.gradient(p.chi2 * v2.values - p.chi1 * v1.values, h, edge_order=2)  # -(w)
    z = p.chi2 * p.lambda2 * v2.values - p.chi1 * p.lambda1 * v1.values
    uxx = (U[2:] - 2.0 * U[1:-1] + U[:-2]) / h**2
    ux = (U[2:] - U[:-2]) / (2.0 * h)
    inner = slice(1, -1)
    coef = p.a + z[inner] - c * p.tau * s[inner] - (p.b + p.net_coupling) * U[inner]
    return uxx + (c + s[inner]) * ux + coef * U[inner]


def plateau_value(u: Field) -> float:
    k = max(1, u.grid.n // 10)
    return float(np.mean(u.values[:k]))


def decay_error(u: Field, mu: float, c0: float, lo: float = 1e-6, hi: float = 1e-3) -> float:
    vals = u.values
    mask = (vals >= lo * c0) & (vals <= hi * c0)
    if not mask.any():
        return math.nan
    return float(np.max(np.abs(np.exp(mu * u.grid.x[mask]) * vals[mask] - 1.0)))


def outer_fixed_point(p: ModelParams, mu: float, cfg: Optional[IterationConfig] = None,
                      start: str = "upper", trace: Optional[list] = None) -> WaveProfile:
    """Iterate u -> U(.; u) from U+ (or from the shifted lower envelope) to a fixed point."""
    if not p.coupling_ok:
        raise HypothesisError("b + chi2 mu2 - chi1 mu1 must be positive")
    cfg = cfg or IterationConfig.default(p, mu)
    if abs(cfg.mu - mu) > 0:
        raise DomainError("config exponent differs from requested mu")
    profiles = build_profiles(cfg)
    c = c_of_mu(p.a, mu)
    if start == "upper":
        u = profiles.u_plus
    elif start == "lower":
        u = profiles.u_minus_shift
    else:
        raise DomainError(f"unknown start {start!r}")

    change = math.inf
    for it in range(1, cfg.max_outer_iters + 1):
        res = inner_evolve(p, u, cfg, profiles)
        change = star_norm(res.u, u)
        if trace is not None:
            trace.append(res)
        u = res.u
        if change < cfg.outer_tol:
            break
    else:
        raise NonConvergenceError(f"outer iteration stalled at change {change:.3g} after {cfg.max_outer_iters} iterations")

    pots = chem_potentials(p, c, u, cfg.tail_slope(p))
    resid = float(np.abs(stationary_residual(p, u, pots.v1, pots.v2, mu)).max())
    plat = plateau_value(u)
    derr = decay_error(u, mu, cfg.c0)
    failures = []
    umax = float(u.values.max())
    if not resid <= 1e-4 * umax:
        failures.append(f"residual {resid:.3g} above 1e-4*max|u|")
    if not abs(plat - p.a / p.b) <= 0.01 * p.a / p.b:
        failures.append(f"plateau {plat:.6g} not within 1% of a/b")
    if not derr <= 0.05:
        failures.append(f"decay error {derr:.3g} above 5%")
    return WaveProfile(u, pots.v1, pots.v2, mu, c, resid, plat, derr, it, change, tuple(failures))
