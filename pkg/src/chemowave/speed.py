"""Admissibility function f(mu), the feasibility test b > inf f, and the wave-speed window."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import KernelConstants, ModelParams, decay_rate_r, kernel_constants, rate_constants
from .errors import DomainError, HypothesisError
from .parallel import pmap

UNBOUNDED = math.inf  # exact sentinel for an unbounded upper speed; rendered "inf"


def c_of_mu(a: float, mu: float) -> float:
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu}")
    return mu + a / mu


def mu_of_c(a: float, c: float) -> float:
    floor = 2.0 * math.sqrt(a)
    if c < floor:
        raise DomainError(f"c={c} below the minimal speed {floor}")
    disc = max(c * c - 4.0 * a, 0.0)
    # a / ((c + sqrt)/2) avoids cancellation in c - sqrt(c^2 - 4a)
    return 2.0 * a / (c + math.sqrt(disc))


def mu_cap(p: ModelParams) -> float:
    cap = math.sqrt(p.a)
    slack = 1.0 - p.tau
    if slack > 0:
        for lam in (p.lambda1, p.lambda2):
            cap = min(cap, math.sqrt((lam + p.tau * p.a) / slack))
    return cap


def _top_sample(p: ModelParams) -> float:
    """Largest exponent where the weighted integrals still converge."""
    cap = mu_cap(p)
    if min(p.lambda1, p.lambda2) + decay_rate_r(p.tau, p.a, cap) > 0:
        return cap
    return cap * (1.0 - 1e-9)


def f_branches(p: ModelParams, mu: float, kc: Optional[KernelConstants] = None) -> tuple[float, float]:
    kc = kc or kernel_constants(p)
    c = c_of_mu(p.a, mu)
    rc = rate_constants(p, mu)
    first = 2.0 * (kc.m_under + p.tau * c * kc.k)
    second = -p.net_coupling + (p.tau * c + mu) * rc.k_tm + rc.m_bar_tm
    return first, second


def f_of_mu(p: ModelParams, mu: float, kc: Optional[KernelConstants] = None) -> float:
    return max(f_branches(p, mu, kc))


@dataclass(frozen=True)
class HypothesisResult:
    holds: bool
    witness: Optional[float]  # argmin mu when feasible
    min_f: float
    argmin: float
    forms_agree: bool  # M_under form vs the M_bar rewrite, at every sample


def _samples(p: ModelParams, n: int) -> np.ndarray:
    top = _top_sample(p)
    return top * np.arange(1, n + 1) / n


def hypothesis_H(p: ModelParams, n: int = 2048) -> HypothesisResult:
    if n < 100:
        raise DomainError("resolution must be at least 100")
    kc = kernel_constants(p)
    mus = _samples(p, n)
    fvals = np.array(pmap(lambda m: f_of_mu(p, m, kc), mus))

    agree = True
    for m in mus:
        c = c_of_mu(p.a, m)
        lhs1 = p.b - 2.0 * (kc.m_under + p.tau * c * kc.k)
        lhs2 = p.b + 2.0 * p.net_coupling - 2.0 * (kc.m_bar + p.tau * c * kc.k)
        if abs(lhs1 - lhs2) > 1e-12 * (1.0 + abs(lhs1)) or (lhs1 > 0) != (lhs2 > 0) and abs(lhs1) > 1e-12:
            agree = False

    j = int(np.argmin(fvals))
    best_mu, best_f = float(mus[j]), float(fvals[j])
    lo = float(mus[j - 1]) if j > 0 else 0.5 * float(mus[0])
    hi = float(mus[min(j + 1, n - 1)])
    gm, gf = _golden_min(lambda m: f_of_mu(p, m, kc), lo, hi)
    if gf < best_f:
        best_mu, best_f = gm, gf
    holds = best_f < p.b
    return HypothesisResult(holds, best_mu if holds else None, best_f, best_mu, agree)


def _golden_min(fn, lo: float, hi: float, iters: int = 60) -> tuple[float, float]:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if hi - lo < 1e-12 * max(1.0, hi):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


@dataclass(frozen=True)
class WaveWindow:
    mu_lo: float
    mu_hi: float
    c_star: float
    c_double_star: float  # UNBOUNDED when mu_lo == 0
    mu_cap: float
    over_reported: bool = False  # endpoints resolved toward the larger window

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.c_double_star)

    def csv_row(self) -> str:
        cdd = "inf" if self.unbounded else f"{self.c_double_star:.17g}"
        return f"{self.mu_lo:.17g},{self.mu_hi:.17g},{self.c_star:.17g},{cdd},{self.mu_cap:.17g}"


WINDOW_HEADER = "mu_lo,mu_hi,c_star,c_double_star,mu_cap"


def _bisect_edge(gap, inside: float, outside: float, tol: float, max_iter: int = 40) -> float:
    """Shrink [inside, outside] around the sign change of ``gap``; return the outer end."""
    for _ in range(max_iter):
        if abs(outside - inside) <= tol:
            break
        mid = 0.5 * (inside + outside)
        if gap(mid) > 0:
            inside = mid
        else:
            outside = mid
    return outside


def wave_window(p: ModelParams, n: int = 2048, tol: float = 1e-10) -> WaveWindow:
    """Rightmost connected component of {mu : f(mu) < b}, scanned right to left."""
    kc = kernel_constants(p)
    cap = mu_cap(p)
    mus = _samples(p, n)
    fvals = np.array(pmap(lambda m: f_of_mu(p, m, kc), mus))
    feasible = fvals < p.b

    def gap(m: float) -> float:
        return p.b - f_of_mu(p, m, kc)

    idx = np.nonzero(feasible)[0]
    if idx.size == 0:
        hyp = hypothesis_H(p, max(n, 100))
        if not hyp.holds:
            raise HypothesisError(f"b={p.b} does not exceed min f={hyp.min_f:.6g} (at mu={hyp.argmin:.6g})")
        # feasible only between samples: fall back to the refined witness
        idx = np.array([int(np.argmin(np.abs(mus - hyp.witness)))])
        feasible[idx[0]] = True

    j_hi = int(idx[-1])
    over = False
    if j_hi == n - 1:
        mu_hi = cap  # supremum; the cap itself may be excluded when lambda_i + r vanishes there
    else:
        mu_hi = _bisect_edge(gap, float(mus[j_hi]), float(mus[j_hi + 1]), tol)
        over = True

    j = j_hi
    while j >= 0 and feasible[j]:
        j -= 1
    if j >= 0:
        mu_lo = _bisect_edge(gap, float(mus[j + 1]), float(mus[j]), tol)
        over = True
    else:
        # feasible down to the first sample: follow it toward zero geometrically
        inside, mu_lo = float(mus[0]), 0.0
        probe = inside
        for _ in range(12):
            probe *= 0.1
            if gap(probe) <= 0:
                mu_lo = _bisect_edge(gap, inside, probe, min(tol, 1e-6 * probe))
                over = True
                break
            inside = probe

    c_star = c_of_mu(p.a, mu_hi)
    c_dd = UNBOUNDED if mu_lo == 0.0 else c_of_mu(p.a, mu_lo)
    return WaveWindow(mu_lo, mu_hi, c_star, c_dd, cap, over)


@dataclass(frozen=True)
class LimitRow:
    scale: float
    window: WaveWindow


def chi_limit_study(p: ModelParams, scales: Sequence[float], n: int = 2048, tol: float = 1e-10) -> list[LimitRow]:
    """Windows for (s*chi1, s*chi2) along a decreasing sequence of scales s."""
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be positive and strictly decreasing")
    return [LimitRow(s, wave_window(p.scaled(s), n, tol)) for s in scales]
