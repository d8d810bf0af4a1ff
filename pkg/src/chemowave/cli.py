"""Command-line front end.

    chemowave constants --config run.ini [--mu 0.5]
    chemowave window    --config run.ini [--resolution 2048] [--tol 1e-10] [--limit-study]
    chemowave limits    --config run.ini
    chemowave wave      --config run.ini (--mu M | --c C) [--out DIR]
    chemowave simulate  --config run.ini [--out DIR]
    chemowave verify    [--only 1,3,5]

Exit codes: 0 success, 1 infeasible parameters, 2 non-convergence or a failed
criterion, 3 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .constants import PARAM_NAMES, ModelParams, kernel_constants, rate_constants
from .construct import IterationConfig, outer_fixed_point
from .elliptic import Field, Grid1D
from .errors import BlowupError, ConfigError, DomainError, HypothesisError, NonConvergenceError
from .sim import (
    CHEM_MODES,
    SimConfig,
    equilibrium_distance,
    measure_front_speed,
    ramp,
    run_bound_check,
    run_stability_experiment,
    simulate,
    track_front,
    trajectory_csv,
)
from .speed import WINDOW_HEADER, c_of_mu, chi_limit_study, hypothesis_H, mu_of_c, wave_window

EXIT_OK, EXIT_INFEASIBLE, EXIT_NONCONVERGED, EXIT_CONFIG = 0, 1, 2, 3

SCENARIOS = ("plain", "equilibrium", "stability", "bounds", "front")
INITIALS = ("equilibrium", "ramp", "perturbed")

# allowed keys per section, with the converter for each value
_FLOAT, _INT, _STR = float, int, str


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


SECTIONS: dict[str, dict[str, Callable]] = {
    "params": {k: _FLOAT for k in PARAM_NAMES},
    "constants": {"mu": _FLOAT},
    "window": {"resolution": _INT, "tol": _FLOAT},
    "limits": {"scales": _floats, "resolution": _INT, "tol": _FLOAT},
    "wave": {
        "mu": _FLOAT,
        "c": _FLOAT,
        "h": _FLOAT,
        "margin": _FLOAT,
        "start": _STR,
        "inner_tol": _FLOAT,
        "outer_tol": _FLOAT,
        "advection": _STR,
        "d_factor": _FLOAT,
    },
    "simulate": {
        "scenario": _STR,
        "x_lo": _FLOAT,
        "x_hi": _FLOAT,
        "h": _FLOAT,
        "dt": _FLOAT,
        "t_end": _FLOAT,
        "chem_mode": _STR,
        "frame_speed": _FLOAT,
        "initial": _STR,
        "level": _FLOAT,
        "ramp_at": _FLOAT,
        "amplitude": _FLOAT,
        "record_every": _INT,
        "front_every": _INT,
        "target": _FLOAT,
    },
}


@dataclass
class RunConfig:
    params: Optional[ModelParams]
    sections: dict[str, dict] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)


def parse_config(text: str, need_params: bool = True) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc

    sections: dict[str, dict] = {}
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        allowed = SECTIONS[name]
        out = {}
        for key, raw in cp.items(name):
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}' in [{name}]")
            try:
                out[key] = allowed[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}' in [{name}]: {raw!r}") from exc
        sections[name] = out

    params = None
    if "params" in sections:
        given = sections["params"]
        missing = [k for k in PARAM_NAMES if k not in given]
        if missing:
            raise ConfigError(f"missing key '{missing[0]}' in [params]")
        try:
            params = ModelParams(**given)
        except (DomainError, HypothesisError) as exc:
            raise ConfigError(f"invalid parameters: {exc}") from exc
    elif need_params:
        raise ConfigError("missing section [params]")
    return RunConfig(params, sections)


def load_config(path: Optional[str], need_params: bool = True) -> RunConfig:
    if path is None:
        if need_params:
            raise ConfigError("--config is required")
        return RunConfig(None)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, need_params)


# ---------------------------------------------------------------- output helpers

def fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def report(pairs: dict, out=None) -> str:
    text = "".join(f"{k}={fmt(v)}\n" for k, v in pairs.items())
    (out or sys.stdout).write(text)
    return text


def _write(out_dir: Optional[str], name: str, text: str) -> None:
    if out_dir is None:
        return
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text)


# ---------------------------------------------------------------- commands

def cmd_constants(cfg: RunConfig, args) -> int:
    p = cfg.params
    kc = kernel_constants(p)
    pairs = {
        "m_bar": kc.m_bar,
        "m_under": kc.m_under,
        "k": kc.k,
        "crossing": kc.crossing,
        "identity_residual": kc.m_bar - kc.m_under - p.net_coupling,
    }
    header = ["m_bar", "m_under", "k", "identity_residual"]
    row = [pairs[k] for k in header]
    mu = args.mu if args.mu is not None else cfg.get("constants", "mu")
    if mu is not None:
        rc = rate_constants(p, mu)
        pairs.update(mu=mu, r=rc.r, m_bar_tm=rc.m_bar_tm, m_under_tm=rc.m_under_tm, k_tm=rc.k_tm)
        header += ["mu", "r", "m_bar_tm", "m_under_tm", "k_tm"]
        row += [mu, rc.r, rc.m_bar_tm, rc.m_under_tm, rc.k_tm]
    report(pairs)
    csv = ",".join(header) + "\n" + ",".join(fmt(v) for v in row) + "\n"
    print(csv, end="")
    _write(args.out, "constants.csv", csv)
    return EXIT_OK


def _resolution(cfg: RunConfig, args, section: str) -> tuple[int, float]:
    n = args.resolution or cfg.get(section, "resolution", 2048)
    tol = args.tol or cfg.get(section, "tol", 1e-10)
    return n, tol


def cmd_window(cfg: RunConfig, args) -> int:
    p = cfg.params
    n, tol = _resolution(cfg, args, "window")
    hyp = hypothesis_H(p, n)
    report({"hypothesis": hyp.holds, "min_f": hyp.min_f, "argmin": hyp.argmin, "witness": hyp.witness,
            "forms_agree": hyp.forms_agree})
    if not hyp.holds:
        print(f"infeasible: b={fmt(p.b)} does not exceed min f={fmt(hyp.min_f)} at mu={fmt(hyp.argmin)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    win = wave_window(p, n, tol)
    csv = WINDOW_HEADER + "\n" + win.csv_row() + "\n"
    print(csv, end="")
    _write(args.out, "window.csv", csv)
    if getattr(args, "limit_study", False):
        return cmd_limits(cfg, args)
    return EXIT_OK


def cmd_limits(cfg: RunConfig, args) -> int:
    p = cfg.params
    n, tol = _resolution(cfg, args, "limits")
    scales = cfg.get("limits", "scales", [1e-1, 1e-2, 1e-3])
    try:
        rows = chi_limit_study(p, scales, n, tol)
    except HypothesisError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    csv = "scale," + WINDOW_HEADER + "\n" + "".join(f"{fmt(r.scale)},{r.window.csv_row()}\n" for r in rows)
    print(csv, end="")
    _write(args.out, "limits.csv", csv)
    return EXIT_OK


def _wave_mu(cfg: RunConfig, args, a: float) -> float:
    if args.mu is not None or args.c is not None:  # a flag overrides the config file
        mu, c = args.mu, args.c
    else:
        mu, c = cfg.get("wave", "mu"), cfg.get("wave", "c")
    if (mu is None) == (c is None):
        raise ConfigError("give exactly one of mu or c for the wave")
    if c is not None:
        try:
            return mu_of_c(a, c)
        except DomainError as exc:
            raise HypothesisError(str(exc)) from exc
    if not mu > 0:
        raise ConfigError("mu must be positive")
    return mu


def cmd_wave(cfg: RunConfig, args) -> int:
    p = cfg.params
    mu = _wave_mu(cfg, args, p.a)
    n, tol = _resolution(cfg, args, "window")
    win = wave_window(p, n, tol)
    if not win.mu_lo < mu < win.mu_hi:
        print(f"infeasible: mu={fmt(mu)} outside the window ({fmt(win.mu_lo)}, {fmt(win.mu_hi)})", file=sys.stderr)
        return EXIT_INFEASIBLE
    sec = cfg.sections.get("wave", {})
    kw = {k: sec[k] for k in ("inner_tol", "outer_tol", "advection") if k in sec}
    icfg = IterationConfig.default(p, mu, h=sec.get("h", 0.02), margin=sec.get("margin"),
                                   d_factor=sec.get("d_factor", 2.0), **kw)
    prof = outer_fixed_point(p, mu, icfg, start=sec.get("start", "upper"))
    report({"mu": prof.mu, "c": prof.c, "residual": prof.residual, "plateau": prof.plateau,
            "decay_error": prof.decay_error, "outer_iters": prof.outer_iters, "last_change": prof.last_change,
            "ok": prof.ok})
    _write(args.out, "wave.csv", prof.to_csv())
    for msg in prof.failures:
        print(f"check failed: {msg}", file=sys.stderr)
    return EXIT_OK if prof.ok else EXIT_NONCONVERGED


def _initial(p: ModelParams, g: Grid1D, sec: dict) -> Field:
    kind = sec.get("initial", "ramp")
    u_eq = p.a / p.b
    if kind == "equilibrium":
        return Field(g, np.full(g.n, u_eq))
    if kind == "ramp":
        return ramp(g, sec.get("ramp_at", g.x_lo + 10.0), sec.get("level", u_eq))
    if kind == "perturbed":
        amp = sec.get("amplitude", 0.5)
        return Field(g, u_eq * (1.0 + amp * np.sin(0.7 * g.x)))
    raise ConfigError(f"unknown initial '{kind}', expected one of {INITIALS}")


def cmd_simulate(cfg: RunConfig, args) -> int:
    p = cfg.params
    sec = cfg.sections.get("simulate", {})
    scenario = sec.get("scenario", "plain")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{scenario}', expected one of {SCENARIOS}")
    mode = sec.get("chem_mode", "elliptic")
    if mode not in CHEM_MODES:
        raise ConfigError(f"unknown chem_mode '{mode}'")
    g = Grid1D.with_spacing(sec.get("x_lo", 0.0), sec.get("x_hi", 50.0), sec.get("h", 0.1))
    scfg = SimConfig(g, sec.get("dt", 0.01), sec.get("t_end", 10.0), sec.get("frame_speed", 0.0), mode)
    u0 = _initial(p, g, sec)
    rec = sec.get("record_every", 0)
    pairs: dict = {"scenario": scenario, "chem_mode": mode}

    if scenario in ("plain", "equilibrium"):
        res = simulate(p, u0, scfg, record_every=rec)
        dist = equilibrium_distance(p, res.final)
        pairs.update(t=res.final.t, steps=res.steps, equilibrium_distance=dist,
                     drift_per_time=dist / scfg.t_end, clipped_mass=res.final.clipped_mass)
        if rec:
            _write(args.out, "trajectory.csv", trajectory_csv(res.history))
    elif scenario == "stability":
        rep = run_stability_experiment(p, u0, scfg, sec.get("target", 1e-3))
        pairs.update(converged=rep.converged, time=rep.time, distance=rep.distance,
                     threshold_under=rep.threshold_under, threshold_bar=rep.threshold_bar)
        if not rep.converged:
            report(pairs)
            return EXIT_NONCONVERGED
    elif scenario == "bounds":
        rep = run_bound_check(p, u0, scfg)
        pairs.update(ok=rep.ok, u_ceiling=rep.u_ceiling, u_max=rep.u_max, worst_ratio=rep.worst_ratio,
                     violation=rep.violation)
        if not rep.ok:
            report(pairs)
            return EXIT_NONCONVERGED
    else:
        track, res = track_front(p, u0, scfg, every=sec.get("front_every", 25), record_every=rec)
        est = measure_front_speed(track)
        pairs.update(speed=est.speed, confidence=est.confidence, samples=len(track.samples),
                     minimal_speed=c_of_mu(p.a, math.sqrt(p.a)))
        _write(args.out, "front.csv", track.to_csv())
        if rec:
            _write(args.out, "trajectory.csv", trajectory_csv(res.history))
    text = report(pairs)
    _write(args.out, "report.txt", text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from .acceptance import CRITERIA, run_criterion

    wanted = sorted(CRITERIA)
    if args.only:
        try:
            wanted = [int(t) for t in args.only.split(",")]
        except ValueError as exc:
            raise ConfigError(f"--only expects comma-separated integers, got {args.only!r}") from exc
        bad = [k for k in wanted if k not in CRITERIA]
        if bad:
            raise ConfigError(f"no criterion {bad[0]}")
    failed = 0
    lines = []
    for k in wanted:
        res = run_criterion(k)
        print(res.line(), flush=True)
        lines.append(res.line())
        failed += not res.passed
    _write(args.out, "verify.txt", "\n".join(lines) + "\n")
    print(f"{len(wanted) - failed}/{len(wanted)} criteria passed")
    return EXIT_NONCONVERGED if failed else EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "window": cmd_window,
    "limits": cmd_limits,
    "wave": cmd_wave,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chemowave", description="Traveling waves of an attraction-repulsion chemotaxis model.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a [params] section and per-command sections")
        sp.add_argument("--out", help="directory for CSV and report files")
        sp.add_argument("--resolution", type=int, help="number of mu samples in window scans")
        sp.add_argument("--tol", type=float, help="edge tolerance in window scans")
        if name in ("constants", "wave"):
            grp = sp.add_mutually_exclusive_group()
            grp.add_argument("--mu", type=float, help="decay exponent")
            if name == "wave":
                grp.add_argument("--c", type=float, help="wave speed (converted to mu)")
        if name == "window":
            sp.add_argument("--limit-study", action="store_true", help="also tabulate windows for shrinking chi")
        if name == "verify":
            sp.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors are configuration errors
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for flag in ("mu", "c"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    if args.resolution is not None and args.resolution < 100:
        print("error: --resolution must be at least 100", file=sys.stderr)
        return EXIT_CONFIG
    if args.tol is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, need_params=args.command != "verify")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NonConvergenceError, BlowupError) as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
