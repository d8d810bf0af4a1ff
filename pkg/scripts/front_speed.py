"""Spreading speed from step-like data for a few coupling strengths.

Writes results/front_<chi>.csv tracks and prints fitted speeds next to 2 sqrt(a).
"""

import math
from dataclasses import dataclass

from chemowave import Grid1D, ModelParams, SimConfig
from chemowave.sim import measure_front_speed, ramp, track_front

from _common import out_path, parse_into


@dataclass
class FrontConfig:
    chis: tuple = (0.0, 0.02, 0.1)
    a: float = 1.0
    b: float = 4.0
    length: float = 200.0
    h: float = 0.1
    dt: float = 0.02
    t_end: float = 60.0
    mode: str = "elliptic"
    out: str = "results"


def main(cfg: FrontConfig) -> None:
    g = Grid1D.with_spacing(0.0, cfg.length, cfg.h)
    print(f"chi,speed,confidence,minimal_speed={2 * math.sqrt(cfg.a)}")
    for chi in cfg.chis:
        p = ModelParams(1.0, chi, 2.5 * chi, 1.0, 1.0, 1.0, 1.0, cfg.a, cfg.b)
        track, _ = track_front(p, ramp(g, 10.0, p.a / p.b), SimConfig(g, cfg.dt, cfg.t_end, chem_mode=cfg.mode), 25)
        est = measure_front_speed(track)
        print(f"{chi},{est.speed:.6f},{est.confidence:.2e}")
        out_path(cfg.out, f"front_{chi}.csv").write_text(track.to_csv())


if __name__ == "__main__":
    main(parse_into(FrontConfig, __doc__))
