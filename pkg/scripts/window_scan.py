"""Wave-speed window as the repulsion strength grows, attraction fixed.

Writes results/window_scan.csv with one row per chi2.
"""

from dataclasses import dataclass

import numpy as np

from chemowave import HypothesisError, ModelParams, hypothesis_H, wave_window
from chemowave.speed import WINDOW_HEADER

from _common import out_path, parse_into


@dataclass
class ScanConfig:
    chi1: float = 0.1
    chi2_max: float = 1.0
    points: int = 11
    lam1: float = 1.0
    lam2: float = 2.0
    a: float = 1.0
    b: float = 2.0
    resolution: int = 1024
    out: str = "results"


def main(cfg: ScanConfig) -> None:
    rows = ["chi2,feasible,min_f," + WINDOW_HEADER]
    for chi2 in np.linspace(0.0, cfg.chi2_max, cfg.points):
        p = ModelParams(1.0, cfg.chi1, float(chi2), cfg.lam1, cfg.lam2, 1.0, 1.0, cfg.a, cfg.b)
        hyp = hypothesis_H(p, cfg.resolution)
        try:
            row = wave_window(p, cfg.resolution).csv_row()
        except HypothesisError:
            row = ",,,,"
        rows.append(f"{chi2:.17g},{str(hyp.holds).lower()},{hyp.min_f:.17g},{row}")
        print(rows[-1])
    out_path(cfg.out, "window_scan.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(parse_into(ScanConfig, __doc__))
