"""Windows along a shrinking-coupling sequence.

Writes results/limits.csv (scale plus the window columns).
"""

from dataclasses import dataclass

from chemowave import ModelParams, chi_limit_study
from chemowave.speed import WINDOW_HEADER

from _common import out_path, parse_into


@dataclass
class LimitConfig:
    chi1: float = 2.0
    chi2: float = 6.0
    a: float = 1.0
    b: float = 1.1
    scales: tuple = (0.1, 0.03, 0.01, 0.003, 0.001)
    resolution: int = 2048
    out: str = "results"


def main(cfg: LimitConfig) -> None:
    p = ModelParams(1.0, cfg.chi1, cfg.chi2, 1.0, 1.0, 1.0, 1.0, cfg.a, cfg.b)
    rows = ["scale," + WINDOW_HEADER]
    for r in chi_limit_study(p, cfg.scales, cfg.resolution):
        rows.append(f"{r.scale:.17g},{r.window.csv_row()}")
        print(rows[-1])
    out_path(cfg.out, "limits.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(parse_into(LimitConfig, __doc__))
