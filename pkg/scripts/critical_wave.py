"""Waves as the decay exponent approaches the top of the window (the slowest speeds).

No pass/fail: prints how the profile diagnostics behave as mu -> mu_hi and saves each profile.
Closer to the top the tail converges to the pure exponential only far out, so the decay
error grows, and the domain and settling time grow with it.
"""

from dataclasses import dataclass

from chemowave import (
    ChemowaveError,
    IterationConfig,
    ModelParams,
    outer_fixed_point,
    wave_window,
)

from _common import out_path, parse_into


@dataclass
class CriticalConfig:
    chi1: float = 0.02
    chi2: float = 0.05
    a: float = 1.0
    b: float = 4.0
    etas: tuple = (0.4, 0.2, 0.1)
    h: float = 0.04
    out: str = "results"


def main(cfg: CriticalConfig) -> None:
    p = ModelParams(1.0, cfg.chi1, cfg.chi2, 1.0, 1.0, 1.0, 1.0, cfg.a, cfg.b)
    win = wave_window(p)
    print(f"mu_hi={win.mu_hi:.6g} c*={win.c_star:.6g}")
    print("eta,mu,c,residual,plateau,decay_error,grid_points,outer_iters")
    for eta in cfg.etas:
        mu = win.mu_hi - eta
        try:
            w = outer_fixed_point(p, mu, IterationConfig.default(p, mu, h=cfg.h))
        except ChemowaveError as exc:
            print(f"{eta},{mu:.6g},failed: {exc}")
            continue
        print(f"{eta},{mu:.6g},{w.c:.6g},{w.residual:.3e},{w.plateau:.8f},{w.decay_error:.3e},"
              f"{w.u.grid.n},{w.outer_iters}")
        out_path(cfg.out, f"critical_eta_{eta}.csv").write_text(w.to_csv())


if __name__ == "__main__":
    main(parse_into(CriticalConfig, __doc__))
