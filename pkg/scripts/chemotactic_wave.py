"""Construct a wave for a coupled parameter set and check it from both starting envelopes.

Writes results/chemotactic_wave.csv.
"""

from dataclasses import dataclass

from chemowave import IterationConfig, ModelParams, outer_fixed_point, wave_window
from chemowave.construct import star_norm

from _common import out_path, parse_into


@dataclass
class WaveConfig:
    chi1: float = 0.02
    chi2: float = 0.05
    lam1: float = 1.0
    lam2: float = 1.0
    a: float = 1.0
    b: float = 4.0
    mu: float = 0.5
    h: float = 0.02
    out: str = "results"


def main(cfg: WaveConfig) -> None:
    p = ModelParams(1.0, cfg.chi1, cfg.chi2, cfg.lam1, cfg.lam2, 1.0, 1.0, cfg.a, cfg.b)
    win = wave_window(p)
    print(f"window mu in ({win.mu_lo:.6g}, {win.mu_hi:.6g}), c* = {win.c_star:.6g}")
    if not win.mu_lo < cfg.mu < win.mu_hi:
        raise SystemExit(f"mu={cfg.mu} lies outside the window")
    icfg = IterationConfig.default(p, cfg.mu, h=cfg.h)
    up = outer_fixed_point(p, cfg.mu, icfg, "upper")
    lo = outer_fixed_point(p, cfg.mu, icfg, "lower")
    print(f"c={up.c:.6g} residual={up.residual:.3e} plateau={up.plateau:.8f} (a/b={p.a / p.b})")
    print(f"decay_error={up.decay_error:.3e} outer_iters={up.outer_iters} restart_gap={star_norm(up.u, lo.u):.3e}")
    out_path(cfg.out, "chemotactic_wave.csv").write_text(up.to_csv())


if __name__ == "__main__":
    main(parse_into(WaveConfig, __doc__))
