"""Traveling waves of a one-dimensional attraction-repulsion chemotaxis model with logistic growth."""

from .constants import ModelParams, kernel_constants, rate_constants, rate_constants_exact
from .construct import IterationConfig, WaveProfile, outer_fixed_point
from .elliptic import Field, Grid1D, solve_v
from .errors import (
    BlowupError,
    ChemowaveError,
    ConfigError,
    DomainError,
    GridMismatchError,
    HypothesisError,
    NonConvergenceError,
    SandwichError,
)
from .sim import SimConfig, simulate
from .speed import WaveWindow, c_of_mu, chi_limit_study, hypothesis_H, mu_of_c, wave_window

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ChemowaveError",
    "ConfigError",
    "DomainError",
    "Field",
    "Grid1D",
    "GridMismatchError",
    "HypothesisError",
    "IterationConfig",
    "ModelParams",
    "NonConvergenceError",
    "SandwichError",
    "SimConfig",
    "WaveProfile",
    "WaveWindow",
    "c_of_mu",
    "chi_limit_study",
    "hypothesis_H",
    "kernel_constants",
    "mu_of_c",
    "outer_fixed_point",
    "rate_constants",
    "rate_constants_exact",
    "simulate",
    "solve_v",
    "wave_window",
]
