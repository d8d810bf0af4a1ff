"""Model parameters and the kernel-derived constants.

The attraction kernel is ``chi1*lambda1*mu1*exp(-lambda1 s)`` and the repulsion
kernel ``chi2*lambda2*mu2*exp(-lambda2 s)``.  ``m_bar`` integrates the positive
part of (repulsion - attraction), ``m_under`` the negative part, and ``k`` the
absolute gap of the unweighted kernels against the heat factor 1/(2 sqrt(pi s)).
Each constant has a closed-form path and a quadrature path; they check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erf, erfc

from .errors import DomainError, NonConvergenceError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ModelParams:
    tau: float
    chi1: float
    chi2: float
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float
    a: float
    b: float
    # b + chi2 mu2 - chi1 mu1 > 0; needed by the wave construction, not enforced here
    coupling_ok: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "mu1", "mu2", "a", "b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        for name in ("tau", "chi1", "chi2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be nonnegative and finite, got {v!r}")
        object.__setattr__(self, "coupling_ok", self.b + self.net_coupling > 0)

    @property
    def net_coupling(self) -> float:
        """chi2*mu2 - chi1*mu1: repulsion minus attraction production strength."""
        return self.chi2 * self.mu2 - self.chi1 * self.mu1

    @property
    def equilibrium(self) -> tuple[float, float, float]:
        u = self.a / self.b
        return u, u * self.mu1 / self.lambda1, u * self.mu2 / self.lambda2

    def scaled(self, s: float) -> "ModelParams":
        return replace(self, chi1=s * self.chi1, chi2=s * self.chi2)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PARAM_NAMES}


PARAM_NAMES = ("tau", "chi1", "chi2", "lambda1", "lambda2", "mu1", "mu2", "a", "b")


@dataclass(frozen=True)
class KernelConstants:
    m_bar: float
    m_under: float
    k: float
    crossing: Optional[float] = None


@dataclass(frozen=True)
class RateConstants:
    mu: float
    r: float
    m_bar_tm: float
    m_under_tm: float
    k_tm: float


def _sign_change(c1: float, l1: float, c2: float, l2: float) -> Optional[float]:
    """Positive s where c1 exp(-l1 s) = c2 exp(-l2 s), if there is one."""
    if c1 <= 0 or c2 <= 0 or l1 == l2:
        return None
    s = math.log(c2 / c1) / (l2 - l1)
    return s if (math.isfinite(s) and s > 0) else None


def crossing_time(p: ModelParams) -> Optional[float]:
    """Time where the attraction and repulsion kernels swap order, or None."""
    return _sign_change(p.chi1 * p.lambda1 * p.mu1, p.lambda1, p.chi2 * p.lambda2 * p.mu2, p.lambda2)


def _k_crossing(p: ModelParams) -> Optional[float]:
    # the K kernel compares chi_i mu_i exp(-lambda_i s) without the lambda_i factor
    return _sign_change(p.chi1 * p.mu1, p.lambda1, p.chi2 * p.mu2, p.lambda2)


def m_under_closed(p: ModelParams) -> float:
    """Negative-part integral of the kernel difference, by case analysis."""
    l1, l2 = p.lambda1, p.lambda2
    g1, g2 = p.chi1 * p.mu1, p.chi2 * p.mu2
    att, rep = g1 * l1, g2 * l2
    if att == 0.0:
        return 0.0
    if rep == 0.0:
        return g1
    if l1 == l2:
        return max(g1 - g2, 0.0)
    if l2 > l1:
        if rep <= att:
            return g1 - g2
        return (l2 / l1 - 1.0) * g2 * (att / rep) ** (l2 / (l2 - l1))
    if rep >= att:
        return 0.0
    return g1 - g2 + (l1 / l2 - 1.0) * g1 * (rep / att) ** (l1 / (l1 - l2))


def _half_heat(lam: float, lo: float, hi: float) -> float:
    """Integral of exp(-lam s)/(2 sqrt(pi s)) over [lo, hi] (hi may be inf)."""
    rl = math.sqrt(lam)
    if math.isinf(hi):
        return float(erfc(math.sqrt(lam * lo))) / (2.0 * rl)
    return float(erf(math.sqrt(lam * hi)) - erf(math.sqrt(lam * lo))) / (2.0 * rl)


def k_closed(p: ModelParams) -> float:
    g1, g2 = p.chi1 * p.mu1, p.chi2 * p.mu2
    s = _k_crossing(p)
    edges = [0.0, math.inf] if s is None else [0.0, s, math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = g1 * _half_heat(p.lambda1, lo, hi) - g2 * _half_heat(p.lambda2, lo, hi)
        total += abs(piece)
    return total


def kernel_constants(p: ModelParams) -> KernelConstants:
    m_under = m_under_closed(p)
    return KernelConstants(
        m_bar=m_under + p.net_coupling,
        m_under=m_under,
        k=k_closed(p),
        crossing=crossing_time(p),
    )


def decay_rate_r(tau: float, a: float, mu: float) -> float:
    """tau*mu*c_mu - mu^2 written without the division by mu."""
    return tau * a + (tau - 1.0) * mu * mu


# ---------------------------------------------------------------- quadrature

MIN_TOL = 1e-14


def _simpson(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> float:
    t = np.linspace(lo, hi, n + 1)
    y = g(t)
    hstep = (hi - lo) / n
    return float(hstep / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _simpson_doubling(g, lo: float, hi: float, tol: float, n0: int = 32, max_n: int = 1 << 22) -> float:
    n = n0
    prev = _simpson(g, lo, hi, n)
    while True:
        n *= 2
        cur = _simpson(g, lo, hi, n)
        if abs(cur - prev) <= tol / 2.0:
            return cur
        if n >= max_n:
            raise NonConvergenceError(f"Simpson doubling stalled on [{lo}, {hi}] at n={n}")
        prev = cur


def _truncation_point(coef: float, alpha: float, tol: float) -> float:
    """T with coef*(1+T)*exp(-alpha T^2)/(2 alpha T) below tol/2."""
    if coef <= 0:
        return 1.0
    T = 1.0 / math.sqrt(alpha)
    for _ in range(50):
        bound = coef * (1.0 + T) / (2.0 * alpha * T)
        T_new = math.sqrt(max(math.log(max(2.0 * bound / tol, 1.0 + 1e-16)), 0.0) / alpha)
        T_new = max(T_new, 1.0 / math.sqrt(alpha))
        if abs(T_new - T) < 1e-12 * T:
            break
        T = T_new
    return T * 1.05


def integrate_half_line(
    g: Callable[[np.ndarray], np.ndarray],
    coef: float,
    alpha: float,
    tol: float,
    breakpoints: Sequence[float] = (),
) -> float:
    """Integrate ``g(t)`` over t in (0, inf).

    ``g`` is already written in the t = sqrt(s) variable and is assumed smooth
    between ``breakpoints``, with ``|g(t)| <= coef (1 + t) exp(-alpha t^2)``.
    """
    if tol < MIN_TOL:
        raise NonConvergenceError(f"tolerance {tol} below the reachable floor {MIN_TOL}")
    if alpha <= 0:
        raise DomainError("integrand must decay: alpha > 0 required")
    if coef == 0:
        return 0.0
    T = _truncation_point(coef, alpha, tol)
    # dyadic cuts keep each panel to one length scale when decay rates differ widely
    dyadic = [2.0**k for k in range(2, int(math.log2(T)) + 1)] if T > 4.0 else []
    cuts = sorted(set(b for b in (*breakpoints, *dyadic) if 0 < b < T))
    edges = [0.0, *cuts, T]
    piece_tol = tol / (2.0 * (len(edges) - 1))
    return sum(_simpson_doubling(g, lo, hi, piece_tol) for lo, hi in zip(edges[:-1], edges[1:]))


KERNELS = ("m_bar", "m_under", "k", "k_tm", "exp")


def quadrature_oracle(
    p: Optional[ModelParams],
    kernel: str,
    r: float = 0.0,
    tol: float = 1e-12,
    mu: float = 0.0,
    lam: float = 1.0,
) -> float:
    """Quadrature value of one of the kernel integrals, weighted by exp(-r s).

    ``kernel`` is one of ``m_bar``, ``m_under`` (positive / negative part of
    repulsion minus attraction), ``k`` (absolute gap against 1/(2 sqrt(pi s))),
    ``k_tm`` (absolute gap against (1 + mu sqrt(pi s))/sqrt(pi s)) or ``exp``
    (plain exp(-lam s), ``p`` unused).
    """
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}")
    if kernel == "exp":
        alpha = lam + r
        return integrate_half_line(lambda t: 2.0 * t * np.exp(-alpha * t * t), 2.0, alpha, tol)

    assert p is not None
    g1, g2 = p.chi1 * p.mu1, p.chi2 * p.mu2
    l1, l2 = p.lambda1, p.lambda2
    active = [lam_i for lam_i, g in ((l1, g1), (l2, g2)) if g > 0]
    if not active:
        return 0.0
    alpha = min(active) + r

    if kernel in ("m_bar", "m_under"):
        att, rep = g1 * l1, g2 * l2
        sign = 1.0 if kernel == "m_bar" else -1.0
        s_cross = crossing_time(p)

        def g(t):
            s = t * t
            diff = sign * (rep * np.exp(-(l2 + r) * s) - att * np.exp(-(l1 + r) * s))
            return 2.0 * t * np.maximum(diff, 0.0)

        coef = 2.0 * (att + rep)
    else:
        s_cross = _k_crossing(p)
        if kernel == "k":

            def g(t):
                s = t * t
                return np.abs(g1 * np.exp(-(l1 + r) * s) - g2 * np.exp(-(l2 + r) * s)) / SQRT_PI

            coef = (g1 + g2) / SQRT_PI
        else:

            def g(t):
                s = t * t
                gap = np.abs(g1 * np.exp(-(l1 + r) * s) - g2 * np.exp(-(l2 + r) * s))
                return 2.0 * gap * (1.0 + mu * SQRT_PI * t) / SQRT_PI

            coef = 2.0 * (g1 + g2) * max(1.0, mu * SQRT_PI) / SQRT_PI

    bps = () if s_cross is None else (math.sqrt(s_cross),)
    return integrate_half_line(g, coef, alpha, tol, bps)


# ---------------------------------------------------------------- weighted constants

def _check_mu(p: ModelParams, mu: float) -> None:
    from .speed import mu_cap  # local import: speed depends on this module

    cap = mu_cap(p)
    if not (0.0 < mu <= cap):
        raise DomainError(f"mu={mu} outside (0, {cap})")
    r = decay_rate_r(p.tau, p.a, mu)
    if min(p.lambda1, p.lambda2) + r <= 0:
        raise DomainError(f"lambda_i + r must be positive at mu={mu} (r={r})")


def rate_constants(p: ModelParams, mu: float, tol: float = 1e-11) -> RateConstants:
    """Weighted constants at exponent ``mu``, by quadrature."""
    _check_mu(p, mu)
    r = decay_rate_r(p.tau, p.a, mu)
    # tol is relative to a bound on the sizes, which blow up as lambda_i + r -> 0
    scale = 0.0
    for g, lam in ((p.chi1 * p.mu1, p.lambda1), (p.chi2 * p.mu2, p.lambda2)):
        if g:
            scale += g * (lam / (lam + r) + 1.0 / math.sqrt(lam + r) + mu / (lam + r))
    tol = tol * max(1.0, scale)
    return RateConstants(
        mu=mu,
        r=r,
        m_bar_tm=quadrature_oracle(p, "m_bar", r, tol),
        m_under_tm=quadrature_oracle(p, "m_under", r, tol),
        k_tm=quadrature_oracle(p, "k_tm", r, tol, mu=mu),
    )


def _exp_piece(beta: float, lo: float, hi: float) -> float:
    upper = 0.0 if math.isinf(hi) else math.exp(-beta * hi)
    return (math.exp(-beta * lo) - upper) / beta


def piecewise_kernel_integrals(p: ModelParams, r: float = 0.0) -> tuple[float, float]:
    """Positive and negative parts of the repulsion-minus-attraction kernel, split at the crossing.

    Each piece is an exact exponential integral; no case analysis is involved.
    """
    att, rep = p.chi1 * p.mu1 * p.lambda1, p.chi2 * p.mu2 * p.lambda2
    b1, b2 = p.lambda1 + r, p.lambda2 + r
    s = crossing_time(p)
    edges = [0.0, math.inf] if s is None else [0.0, s, math.inf]
    pos = neg = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = (rep * _exp_piece(b2, lo, hi) if rep else 0.0) - (att * _exp_piece(b1, lo, hi) if att else 0.0)
        if piece > 0:
            pos += piece
        else:
            neg -= piece
    return pos, neg


def rate_constants_exact(p: ModelParams, mu: float) -> RateConstants:
    """Piecewise closed form of the weighted constants (cross-check path)."""
    _check_mu(p, mu)
    r = decay_rate_r(p.tau, p.a, mu)
    g1, g2 = p.chi1 * p.mu1, p.chi2 * p.mu2
    b1, b2 = p.lambda1 + r, p.lambda2 + r

    pos, neg = piecewise_kernel_integrals(p, r)

    s = _k_crossing(p)
    edges = [0.0, math.inf] if s is None else [0.0, s, math.inf]
    k_tm = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = 0.0
        for g, beta, sgn in ((g1, b1, 1.0), (g2, b2, -1.0)):
            if g:
                piece += sgn * g * (2.0 * _half_heat(beta, lo, hi) + mu * _exp_piece(beta, lo, hi))
        k_tm += abs(piece)
    return RateConstants(mu=mu, r=r, m_bar_tm=pos, m_under_tm=neg, k_tm=k_tm)
