"""Time-dependent simulation of the cell/attractant/repellent system.

Lab frame (frame speed 0) or a frame moving with speed c.  The density equation
is written in conservative form

    u_t = u_xx + ((c + s_x) u)_x + u (a - b u),   s = chi2 v2 - chi1 v1,

and advanced with implicit diffusion, explicit upwind transport and explicit
reaction.  Chemicals are either re-solved quasi-statically every step
("elliptic") or stepped with their own time derivative ("parabolic").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .constants import ModelParams, kernel_constants
from .elliptic import Field, Grid1D, operator_bands, solve_v
from .errors import BlowupError, DomainError, HypothesisError

CHEM_MODES = ("elliptic", "parabolic")
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class SimConfig:
    grid: Grid1D
    dt: float
    t_end: float
    frame_speed: float = 0.0
    chem_mode: str = "elliptic"
    # zero-derivative at the left; at the right either zero-derivative or
    # exponential decay U' = -right_slope U (wave-frame runs)
    right_slope: float = 0.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.t_end > 0:
            raise DomainError("t_end must be positive")
        if self.chem_mode not in CHEM_MODES:
            raise DomainError(f"chem_mode must be one of {CHEM_MODES}")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True)
class SimState:
    t: float
    u: Field
    v1: Field
    v2: Field
    clipped_mass: float = 0.0


def suggest_dt(p: ModelParams, grid: Grid1D, u_max: float, frame_speed: float = 0.0, safety: float = 0.4) -> float:
    """Step limited by explicit transport and explicit reaction."""
    kc = kernel_constants(p)
    # |s_x| <= (chi1 mu1 + chi2 mu2) sup u / sqrt(lambda) roughly; use the K-type bound generously
    drift = abs(frame_speed) + 2.0 * (p.chi1 * p.mu1 / math.sqrt(p.lambda1) + p.chi2 * p.mu2 / math.sqrt(p.lambda2)) * u_max
    react = p.a + 2.0 * p.b * u_max + (kc.m_bar + kc.m_under) * u_max
    bound = 1.0 / react
    if drift > 0:
        bound = min(bound, grid.h / drift)
    return safety * bound


def initial_state(p: ModelParams, u0: Field, cfg: SimConfig) -> SimState:
    v1 = solve_v(p, cfg.frame_speed, u0, 1, cfg.right_slope)
    v2 = solve_v(p, cfg.frame_speed, u0, 2, cfg.right_slope)
    return SimState(0.0, u0, v1, v2)


def _banded(lower, diag, upper) -> np.ndarray:
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


class Stepper:
    """Holds the factor-free banded matrices for one (params, config) pair."""

    def __init__(self, p: ModelParams, cfg: SimConfig):
        if cfg.chem_mode == "parabolic" and not p.tau > 0:
            raise DomainError("parabolic chemicals need tau > 0")
        self.p, self.cfg = p, cfg
        g, dt = cfg.grid, cfg.dt
        lower, diag, upper = operator_bands(g, 0.0, 0.0, 0.0, cfg.right_slope)
        self.u_ab = _banded(-dt * lower, 1.0 - dt * diag, -dt * upper)
        self.v_ab = {}
        if cfg.chem_mode == "parabolic":
            for i, lam in ((1, p.lambda1), (2, p.lambda2)):
                lo, di, up = operator_bands(g, cfg.frame_speed * p.tau, -lam, 0.0, cfg.right_slope)
                self.v_ab[i] = _banded(-dt * lo, p.tau - dt * di, -dt * up)
        self.ghost_decay = math.exp(-cfg.right_slope * g.h) if cfg.right_slope > 0 else None

    def transport(self, u: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        """Upwind discretization of ((c + s_x) u)_x with closed or decaying ends."""
        p, cfg = self.p, self.cfg
        h = cfg.grid.h
        s = p.chi2 * v2 - p.chi1 * v1
        vel = cfg.frame_speed + np.diff(s) / h  # at interior faces j+1/2
        flux = np.where(vel > 0, vel * u[1:], vel * u[:-1])
        full = np.zeros(u.size + 1)
        full[1:-1] = flux
        if self.ghost_decay is not None:
            # inflow through the right end from the exponential continuation
            vr = cfg.frame_speed
            full[-1] = vr * u[-1] * self.ghost_decay if vr > 0 else vr * u[-1]
            full[0] = cfg.frame_speed * u[0] if cfg.frame_speed > 0 else 0.0
        return (full[1:] - full[:-1]) / h

    def step(self, state: SimState) -> SimState:
        p, cfg = self.p, self.cfg
        dt, g = cfg.dt, cfg.grid
        u, v1, v2 = state.u.values, state.v1.values, state.v2.values
        rhs = u + dt * (self.transport(u, v1, v2) + u * (p.a - p.b * u))
        new_u = solve_banded((1, 1), self.u_ab, rhs)
        low = new_u < -1e-12
        clipped = float(-new_u[low].sum() * g.h) if low.any() else 0.0
        new_u[low] = 0.0
        uf = Field(g, new_u)
        if cfg.chem_mode == "elliptic":
            nv1 = solve_v(p, cfg.frame_speed, uf, 1, cfg.right_slope)
            nv2 = solve_v(p, cfg.frame_speed, uf, 2, cfg.right_slope)
        else:
            nv1 = Field(g, solve_banded((1, 1), self.v_ab[1], p.tau * v1 + dt * p.mu1 * u))
            nv2 = Field(g, solve_banded((1, 1), self.v_ab[2], p.tau * v2 + dt * p.mu2 * u))
        return SimState(state.t + dt, uf, nv1, nv2, state.clipped_mass + clipped)


def step(state: SimState, p: ModelParams, cfg: SimConfig) -> SimState:
    return Stepper(p, cfg).step(state)


@dataclass
class SimResult:
    history: list[SimState]
    final: SimState
    steps: int


def simulate(
    p: ModelParams,
    u0: Field,
    cfg: SimConfig,
    record_every: int = 0,
    observer: Optional[Callable[[SimState], bool]] = None,
    state0: Optional[SimState] = None,
) -> SimResult:
    """Run to ``t_end``; ``observer`` may return True to stop early."""
    stepper = Stepper(p, cfg)
    state = state0 or initial_state(p, u0, cfg)
    bound = BLOWUP_FACTOR * max(float(np.abs(state.u.values).max()), p.a / p.b)
    history = [state] if record_every else []
    if observer is not None and observer(state):
        return SimResult(history, state, 0)
    k = 0
    for k in range(1, cfg.n_steps + 1):
        state = stepper.step(state)
        if float(np.abs(state.u.values).max()) > bound:
            raise BlowupError(f"|u| exceeded {bound:.3g} at t={state.t:.6g}")
        if record_every and k % record_every == 0:
            history.append(state)
        if observer is not None and observer(state):
            break
    return SimResult(history, state, k)


def ramp(grid: Grid1D, x_step: float, level: float, cells: int = 10) -> Field:
    """Smoothed Heaviside: ``level`` left of x_step, zero beyond, cosine ramp over ``cells`` cells."""
    x = grid.x
    width = cells * grid.h
    t = np.clip((x - x_step) / width, 0.0, 1.0)
    return Field(grid, level * 0.5 * (1.0 + np.cos(np.pi * t)))


def trajectory_csv(history: Sequence[SimState]) -> str:
    lines = ["t,x,u,v1,v2"]
    for st in history:
        for row in zip(st.u.grid.x, st.u.values, st.v1.values, st.v2.values):
            lines.append(f"{st.t:.17g}," + ",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- global bounds and stability

@dataclass(frozen=True)
class BoundReport:
    ok: bool
    u_ceiling: float
    v_ceilings: tuple[float, float]
    u_max: float
    v_max: tuple[float, float]
    worst_ratio: float  # largest observed value / ceiling over all checkpoints
    violation: Optional[str] = None


def bound_denominator(p: ModelParams, c: float) -> float:
    kc = kernel_constants(p)
    return p.b - kc.m_under - c * p.tau * kc.k


def run_bound_check(p: ModelParams, u0: Field, cfg: SimConfig, allowance: float = 0.01) -> BoundReport:
    den = bound_denominator(p, cfg.frame_speed)
    if den <= 0:
        raise HypothesisError(f"bound hypothesis fails: b - M_under - c tau K = {den:.6g}")
    u0max = float(np.abs(u0.values).max())
    u_ceiling = max(u0max, p.a / den)
    v_ceil = (
        max(p.mu1 * u0max / p.lambda1, p.a * p.mu1 / (den * p.lambda1)),
        max(p.mu2 * u0max / p.lambda2, p.a * p.mu2 / (den * p.lambda2)),
    )
    seen = {"u": 0.0, "v1": 0.0, "v2": 0.0, "ratio": 0.0, "bad": None}

    def watch(st: SimState) -> bool:
        um = float(np.abs(st.u.values).max())
        v1m = float(np.abs(st.v1.values).max())
        v2m = float(np.abs(st.v2.values).max())
        seen["u"], seen["v1"], seen["v2"] = max(seen["u"], um), max(seen["v1"], v1m), max(seen["v2"], v2m)
        ratio = max(um / u_ceiling, v1m / v_ceil[0], v2m / v_ceil[1])
        seen["ratio"] = max(seen["ratio"], ratio)
        if ratio > 1.0 + allowance and seen["bad"] is None:
            seen["bad"] = f"ceiling exceeded by factor {ratio:.6g} at t={st.t:.6g}"
        return False

    simulate(p, u0, cfg, observer=watch)
    return BoundReport(
        seen["bad"] is None, u_ceiling, v_ceil, seen["u"], (seen["v1"], seen["v2"]), seen["ratio"], seen["bad"]
    )


@dataclass(frozen=True)
class StabilityReport:
    converged: bool
    time: Optional[float]
    distance: float
    threshold_under: bool  # b > 2 (M_under + c tau K)
    threshold_bar: bool  # b > 2 (M_bar + c tau K)


def equilibrium_distance(p: ModelParams, st: SimState) -> float:
    ue, v1e, v2e = p.equilibrium
    return max(
        float(np.abs(st.u.values - ue).max()),
        float(np.abs(st.v1.values - v1e).max()),
        float(np.abs(st.v2.values - v2e).max()),
    )


def run_stability_experiment(p: ModelParams, u0: Field, cfg: SimConfig, target: float = 1e-3) -> StabilityReport:
    kc = kernel_constants(p)
    c = cfg.frame_speed
    under = p.b > 2.0 * (kc.m_under + c * p.tau * kc.k)
    bar = p.b > 2.0 * (kc.m_bar + c * p.tau * kc.k)
    if not under:
        raise HypothesisError("stability hypothesis b > 2(M_under + c tau K) fails")
    if not float(u0.values.min()) > 0:
        raise DomainError("initial density must be bounded away from zero")
    hit: dict[str, float] = {}

    def watch(st: SimState) -> bool:
        d = equilibrium_distance(p, st)
        hit["d"] = d
        if d <= target:
            hit["t"] = st.t
            return True
        return False

    simulate(p, u0, cfg, observer=watch)
    return StabilityReport("t" in hit, hit.get("t"), hit["d"], under, bar)


# ---------------------------------------------------------------- fronts

@dataclass
class FrontTrack:
    samples: list[tuple[float, float]] = field(default_factory=list)

    def add(self, t: float, x: Optional[float]) -> None:
        if x is not None:
            self.samples.append((t, x))

    def to_csv(self) -> str:
        return "t,front_x\n" + "".join(f"{t:.17g},{x:.17g}\n" for t, x in self.samples)


def front_position(u: Field, level: float) -> Optional[float]:
    """Rightmost crossing of ``level``, linearly interpolated between nodes."""
    v = u.values
    above = np.nonzero(v >= level)[0]
    if above.size == 0:
        return None
    j = int(above[-1])
    x = u.grid.x
    if j == v.size - 1:
        return float(x[-1])
    v0, v1 = v[j], v[j + 1]
    return float(x[j] + (v0 - level) / (v0 - v1) * (x[j + 1] - x[j]))


@dataclass(frozen=True)
class SpeedEstimate:
    speed: float
    confidence: float  # rms fit residual divided by the covered span


def measure_front_speed(track: FrontTrack, min_samples: int = 20) -> SpeedEstimate:
    if len(track.samples) < min_samples:
        raise DomainError(f"need at least {min_samples} front samples, got {len(track.samples)}")
    data = np.array(track.samples[len(track.samples) // 2:])
    t, x = data[:, 0], data[:, 1]
    slope, icpt = np.polyfit(t, x, 1)
    resid = x - (slope * t + icpt)
    span = max(float(x.max() - x.min()), 1e-300)
    return SpeedEstimate(float(slope), float(np.sqrt(np.mean(resid**2)) / span))


def track_front(p: ModelParams, u0: Field, cfg: SimConfig, every: int = 10, record_every: int = 0):
    """Simulate and sample the a/(2b) level crossing every ``every`` steps."""
    level = 0.5 * p.a / p.b
    track = FrontTrack()
    count = {"k": 0}

    def watch(st: SimState) -> bool:
        if count["k"] % every == 0:
            track.add(st.t, front_position(st.u, level))
        count["k"] += 1
        return False

    res = simulate(p, u0, cfg, record_every=record_every, observer=watch)
    return track, res


# ---------------------------------------------------------------- sine comparison probe

@dataclass(frozen=True)
class SineProbe:
    q: float
    eps: float
    L: float
    m0: float = 0.0
    t0: float = 0.0
    x0: float = 0.0  # left end of the window at t0
    certifying: bool = True  # False when the width was supplied because q is too fast

    @classmethod
    def build(cls, a: float, q: float, eps: float, L: Optional[float] = None, **kw) -> "SineProbe":
        disc = 4.0 * (a - eps) - (q + eps) ** 2
        if L is None:
            if not (eps < a and disc > 0):
                raise DomainError(f"q + eps must stay below 2 sqrt(a - eps) (q={q}, eps={eps})")
            return cls(q, eps, 2.0 * math.pi / math.sqrt(disc), **kw)
        if L <= 0:
            raise DomainError("width must be positive")
        return cls(q, eps, L, certifying=disc > 0 and abs(L - 2.0 * math.pi / math.sqrt(disc)) < 1e-12, **kw)

    def values(self, x: np.ndarray, t: float) -> np.ndarray:
        xi = x - self.x0 - self.q * (t - self.t0)
        inside = (xi >= 0.0) & (xi <= self.L)
        out = np.zeros_like(x)
        xs = xi[inside]
        out[inside] = self.m0 * np.exp(-(self.q + self.eps) * xs / 2.0) * np.sin(np.pi * xs / self.L)
        return out


@dataclass(frozen=True)
class ProbeReport:
    holds: bool
    first_failure: Optional[float]
    checked_until: float
    x_anchor: float
    m0: float


def sine_probe_check(p: ModelParams, history: Sequence[SimState], probe: SineProbe,
                     anchor: Optional[float] = None, tol: float = 1e-12) -> ProbeReport:
    """Place the probe at the first recorded time and test probe <= u at every later record.

    ``anchor`` is the left end of the window at t0; by default the window ends one
    width behind the a/(2b) front.  The amplitude is the minimum of u over the window.
    """
    states = [s for s in history if s.t >= probe.t0 - 1e-12]
    if not states:
        raise DomainError("history does not reach the probe anchor time")
    first = states[0]
    x = first.u.grid.x
    if anchor is None:
        front = front_position(first.u, 0.5 * p.a / p.b)
        if front is None:
            raise DomainError("no front to anchor the probe behind")
        anchor = front - 2.0 * probe.L
    window = (x >= anchor) & (x <= anchor + probe.L)
    if not window.any() or float(first.u.values[window].min()) <= 0:
        raise DomainError("cannot anchor the probe: u vanishes on the initial window")
    m0 = float(first.u.values[window].min())
    pr = SineProbe(probe.q, probe.eps, probe.L, m0, first.t, anchor, probe.certifying)
    last = first.t
    for st in states:
        if anchor + probe.q * (st.t - first.t) + probe.L > x[-1]:
            break
        last = st.t
        if np.any(pr.values(x, st.t) > st.u.values + tol):
            return ProbeReport(False, st.t, last, anchor, m0)
    return ProbeReport(True, None, last, anchor, m0)
