"""Uniform 1-D grids, node fields, and the moving-frame chemical solves.

Each chemical solves ``V'' + c*tau*V' - lambda_i V + mu_i u = 0``.  The finite
difference solve is checked against the heat-kernel representation evaluated
by nested quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .constants import ModelParams, kernel_constants, rate_constants
from .errors import DomainError, GridMismatchError, NonConvergenceError, SandwichError


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self) -> None:
        if not self.x_lo < self.x_hi:
            raise DomainError("x_lo must be below x_hi")
        if self.n < 3:
            raise DomainError("need at least 3 nodes")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n)

    @classmethod
    def with_spacing(cls, x_lo: float, x_hi: float, h: float) -> "Grid1D":
        n = int(math.ceil((x_hi - x_lo) / h)) + 1
        return cls(x_lo, x_lo + (n - 1) * h, n)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise GridMismatchError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(fn(grid.x), (grid.n,)))

    def to_csv(self) -> str:
        lines = ["x,value"]
        lines += [f"{x:.17g},{v:.17g}" for x, v in zip(self.grid.x, self.values)]
        return "\n".join(lines) + "\n"


def same_grid(*fields: Field) -> Grid1D:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


def _tridiag(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def operator_bands(grid: Grid1D, drift: np.ndarray | float, shift: np.ndarray | float,
                   left_slope: float = 0.0, right_slope: float = 0.0):
    """Bands of ``U'' + drift U' + shift U`` with ghost-node Robin closures.

    Boundary rows impose ``U' = -left_slope U`` at x_lo and ``U' = -right_slope U``
    at x_hi (zero slope gives a zero-derivative condition).
    """
    n, h = grid.n, grid.h
    drift = np.broadcast_to(np.asarray(drift, float), (n,))
    shift = np.broadcast_to(np.asarray(shift, float), (n,))
    lower = 1.0 / h**2 - drift / (2.0 * h)
    upper = 1.0 / h**2 + drift / (2.0 * h)
    diag = -2.0 / h**2 + shift
    lower, upper, diag = lower.copy(), upper.copy(), diag.copy()
    # ghost U_{-1} = U_1 + 2h k U_0 ; ghost U_n = U_{n-2} - 2h k U_{n-1}
    diag[0] += 2.0 * h * left_slope * lower[0]
    upper[0] += lower[0]
    lower[0] = 0.0
    diag[-1] -= 2.0 * h * right_slope * upper[-1]
    lower[-1] += upper[-1]
    upper[-1] = 0.0
    return lower, diag, upper


def solve_v(p: ModelParams, c: float, u: Field, i: int, mu: float = 0.0, left_slope: float = 0.0) -> Field:
    """Finite-difference solve for chemical ``i`` (1 or 2) driven by ``u``.

    Right boundary: ``V' = -mu V``; left boundary: ``V' = -left_slope V``.
    """
    lam, prod = _chem(p, i)
    lower, diag, upper = operator_bands(u.grid, c * p.tau, -lam, left_slope, mu)
    return Field(u.grid, _tridiag(lower, diag, upper, -prod * u.values))


def _chem(p: ModelParams, i: int) -> tuple[float, float]:
    if i == 1:
        return p.lambda1, p.mu1
    if i == 2:
        return p.lambda2, p.mu2
    raise DomainError(f"chemical index must be 1 or 2, got {i}")


def extend(u: Field, mu: float) -> Callable[[np.ndarray], np.ndarray]:
    """Constant continuation on the left, exponential decay at rate ``mu`` on the right."""
    g = u.grid
    xs, vals = g.x, u.values

    def ext(y: np.ndarray) -> np.ndarray:
        out = np.interp(y, xs, vals)
        right = y > g.x_hi
        out[right] = vals[-1] * np.exp(-mu * (y[right] - g.x_hi))
        return out

    return ext


def greens_quadrature_v(
    p: ModelParams,
    c: float,
    u: Union[Field, Callable[[np.ndarray], np.ndarray]],
    i: int,
    x: float,
    mu: float = 0.0,
    tol: float = 1e-9,
    n_hermite: int = 120,
) -> float:
    """Heat-kernel representation of chemical ``i`` at point ``x``.

    Inner Gaussian integral by Gauss-Hermite in zeta (z = x + 2 sqrt(s) zeta),
    outer time integral by Simpson doubling in t = sqrt(s).
    """
    lam, prod = _chem(p, i)
    f = extend(u, mu) if isinstance(u, Field) else u
    zeta, wts = np.polynomial.hermite.hermgauss(n_hermite)
    wts = wts / math.sqrt(math.pi)
    shift = p.tau * c

    def g(t: np.ndarray) -> np.ndarray:
        pts = x + 2.0 * t[:, None] * zeta[None, :] + shift * (t * t)[:, None]
        inner = f(pts.ravel()).reshape(pts.shape) @ wts
        return 2.0 * t * np.exp(-lam * t * t) * inner

    # |inner| is bounded by the sup of u on the sampled points; use a generous envelope
    T = math.sqrt(math.log(max(4.0 * prod / (lam * tol), 2.0)) / lam) * 1.1
    n = 64
    prev = _simpson_nodes(g, T, n)
    while n < 1 << 16:
        n *= 2
        cur = _simpson_nodes(g, T, n)
        if abs(cur - prev) <= tol / (2.0 * max(prod, 1.0)):
            return prod * cur
        prev = cur
    raise NonConvergenceError("Green quadrature did not settle")


def _simpson_nodes(g, T: float, n: int) -> float:
    t = np.linspace(0.0, T, n + 1)
    y = g(t)
    return float((T / n) / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def derivative(f: Field) -> Field:
    return Field(f.grid, np.gradient(f.values, f.grid.h, edge_order=2))


@dataclass(frozen=True)
class ChemPotentials:
    v1: Field
    v2: Field
    dv1: Field
    dv2: Field
    z: Field  # chi2 lambda2 V2 - chi1 lambda1 V1
    w: Field  # d/dx (chi1 V1 - chi2 V2)


def combo_fields(p: ModelParams, v1: Field, v2: Field) -> ChemPotentials:
    g = same_grid(v1, v2)
    dv1, dv2 = derivative(v1), derivative(v2)
    z = p.chi2 * p.lambda2 * v2.values - p.chi1 * p.lambda1 * v1.values
    w = p.chi1 * dv1.values - p.chi2 * dv2.values
    return ChemPotentials(v1, v2, dv1, dv2, Field(g, z), Field(g, w))


def chem_potentials(p: ModelParams, c: float, u: Field, mu: float = 0.0) -> ChemPotentials:
    return combo_fields(p, solve_v(p, c, u, 1, mu), solve_v(p, c, u, 2, mu))


@dataclass(frozen=True)
class BoundReport:
    ok: bool
    z_upper_margin: float  # min over nodes of (bound + allowance - z)
    z_lower_margin: float
    w_margin: float
    allowance: float

    @property
    def worst(self) -> float:
        return min(self.z_upper_margin, self.z_lower_margin, self.w_margin)


def check_lemma_bounds(p: ModelParams, mu: float, c0: float, profiles, u: Field, pots: ChemPotentials,
                       sandwich_tol: float = 1e-12) -> BoundReport:
    """Nodewise check of the envelope bounds on z and w for ``u`` inside the sandwich.

    ``profiles`` needs ``u_minus``, ``u_plus`` and ``phi`` fields on the grid of ``u``.
    """
    g = same_grid(u, pots.z, profiles.u_plus)
    lo, hi = profiles.u_minus.values, profiles.u_plus.values
    if np.any(u.values < lo - sandwich_tol) or np.any(u.values > hi + sandwich_tol):
        raise SandwichError("u leaves the envelope set")
    kc = kernel_constants(p)
    rc = rate_constants(p, mu)
    phi = profiles.phi.values
    up = np.minimum(kc.m_bar * c0, rc.m_bar_tm * phi)
    down = np.minimum(kc.m_under * c0, rc.m_under_tm * phi)
    wb = np.minimum(kc.k * c0, rc.k_tm * phi)
    scale = max(kc.m_bar, kc.m_under, kc.k) * c0
    allowance = 10.0 * g.h**2 * max(scale, 1e-300) + 1e-13
    z, w = pots.z.values, pots.w.values
    m_up = float(np.min(up + allowance - z))
    m_dn = float(np.min(z + down + allowance))
    m_w = float(np.min(wb + allowance - np.abs(w)))
    return BoundReport(min(m_up, m_dn, m_w) >= 0.0, m_up, m_dn, m_w, allowance)
