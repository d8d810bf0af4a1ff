import subprocess
import sys
from pathlib import Path

import pytest

from chemowave.cli import main, parse_config
from chemowave.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

PARAMS = """[params]
tau = 1
chi1 = {chi1}
chi2 = {chi2}
lambda1 = 1
lambda2 = 1
mu1 = 1
mu2 = 1
a = 1
b = {b}
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def kv(out):
    return dict(line.split("=", 1) for line in out.splitlines() if "=" in line and "," not in line)


# ---------------------------------------------------------------- config parsing

def test_unknown_key_named(tmp_path, capsys):
    cfg = write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1) + "speed = 3\n")
    assert main(["constants", "--config", cfg]) == 3
    assert "speed" in capsys.readouterr().err


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="extra"):
        parse_config(PARAMS.format(chi1=0, chi2=0, b=1) + "[extra]\n")


def test_missing_parameter_named(capsys, tmp_path):
    text = PARAMS.format(chi1=0, chi2=0, b=1).replace("a = 1\n", "")
    assert main(["constants", "--config", write(tmp_path, text)]) == 3
    assert "'a'" in capsys.readouterr().err


def test_non_numeric_value(tmp_path):
    assert main(["constants", "--config", write(tmp_path, PARAMS.format(chi1="x", chi2=0, b=1))]) == 3


def test_invalid_parameter_value(tmp_path):
    assert main(["constants", "--config", write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=-1))]) == 3


def test_malformed_file_and_missing_file(tmp_path):
    assert main(["constants", "--config", write(tmp_path, "no sections here\n")]) == 3
    assert main(["constants", "--config", str(tmp_path / "absent.ini")]) == 3
    assert main(["constants"]) == 3


def test_bad_flags():
    assert main(["window", "--resolution", "10", "--config", str(CONFIGS / "kpp.ini")]) == 3
    assert main(["nonsense"]) == 3
    assert main(["verify", "--only", "x"]) == 3
    assert main(["verify", "--only", "99"]) == 3


# ---------------------------------------------------------------- constants

def test_constants_zero_coupling(tmp_path, capsys):
    assert main(["constants", "--config", write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1))]) == 0
    vals = kv(capsys.readouterr().out)
    assert vals["m_bar"] == vals["m_under"] == vals["k"] == "0"


def test_constants_equal_rates_closed_form(tmp_path, capsys):
    cfg = write(tmp_path, PARAMS.format(chi1=2, chi2=1, b=3))
    assert main(["constants", "--config", cfg, "--mu", "0.5", "--out", str(tmp_path / "o")]) == 0
    vals = kv(capsys.readouterr().out)
    assert float(vals["m_under"]) == 1.0
    assert float(vals["identity_residual"]) == 0.0
    csv = (tmp_path / "o" / "constants.csv").read_text().splitlines()
    assert csv[0].startswith("m_bar,m_under,k") and len(csv) == 2


def test_constants_mu_outside_cap(tmp_path):
    assert main(["constants", "--config", write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1)), "--mu", "3"]) == 3


# ---------------------------------------------------------------- window and limits

def test_window_kpp(capsys, tmp_path):
    assert main(["window", "--config", str(CONFIGS / "kpp.ini"), "--resolution", "256", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "window.csv").read_text().splitlines()
    assert rows[0] == "mu_lo,mu_hi,c_star,c_double_star,mu_cap"
    assert rows[1] == "0,1,2,inf,1"


def test_window_infeasible(tmp_path, capsys):
    cfg = write(tmp_path, PARAMS.format(chi1=3, chi2=0, b=2))
    assert main(["window", "--config", cfg, "--resolution", "256"]) == 1
    out = capsys.readouterr()
    assert "hypothesis=false" in out.out
    assert "min f" in out.err and "mu=" in out.err


def test_window_limit_study_flag(tmp_path, capsys):
    cfg = str(CONFIGS / "small_chi.ini")
    assert main(["window", "--config", cfg, "--resolution", "256", "--limit-study"]) == 0
    lines = capsys.readouterr().out.splitlines()
    start = lines.index("scale,mu_lo,mu_hi,c_star,c_double_star,mu_cap")
    assert len(lines[start + 1:]) == 3


def test_limits_command(tmp_path):
    assert main(["limits", "--config", str(CONFIGS / "limits.ini"), "--resolution", "256", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "limits.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[-1].split(",")[0] == "0.001"


# ---------------------------------------------------------------- wave

def test_wave_kpp_profile(tmp_path, capsys):
    assert main(["wave", "--config", str(CONFIGS / "kpp.ini"), "--out", str(tmp_path), "--resolution", "256"]) == 0
    meta = kv(capsys.readouterr().out)
    for key in ("residual", "plateau", "decay_error"):
        assert key in meta
    text = (tmp_path / "wave.csv").read_text()
    assert "# residual=" in text and "x,u,v1,v2" in text


def test_wave_speed_flag_and_outside_window(tmp_path):
    cfg = str(CONFIGS / "kpp.ini")
    assert main(["wave", "--config", cfg, "--mu", "1.5", "--resolution", "256"]) == 1
    assert main(["wave", "--config", cfg, "--c", "1.0", "--resolution", "256"]) == 1
    assert main(["wave", "--config", cfg, "--c", "2.5", "--resolution", "256"]) == 0


def test_wave_requires_exponent(tmp_path):
    cfg = write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1))
    assert main(["wave", "--config", cfg]) == 3


def test_wave_nonconvergence_exit(tmp_path):
    cfg = write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1) + "[wave]\nmu = 0.5\nh = 0.05\n")
    from chemowave import cli

    # an iteration cap of one inner step cannot settle
    original = cli.IterationConfig.default

    def capped(*a, **kw):
        return original(*a, max_inner_steps=1, **kw)

    cli.IterationConfig.default = capped
    try:
        assert main(["wave", "--config", cfg, "--resolution", "256"]) == 2
    finally:
        cli.IterationConfig.default = original


# ---------------------------------------------------------------- simulate and verify

def test_simulate_equilibrium(tmp_path, capsys):
    assert main(["simulate", "--config", str(CONFIGS / "equilibrium.ini"), "--out", str(tmp_path)]) == 0
    vals = kv((tmp_path / "report.txt").read_text())
    assert float(vals["drift_per_time"]) <= 1e-8


def test_simulate_stability(capsys):
    assert main(["simulate", "--config", str(CONFIGS / "small_chi.ini")]) == 0
    vals = kv(capsys.readouterr().out)
    assert vals["converged"] == "true" and float(vals["time"]) > 0


def test_simulate_unknown_scenario(tmp_path):
    cfg = write(tmp_path, PARAMS.format(chi1=0, chi2=0, b=1) + "[simulate]\nscenario = party\n")
    assert main(["simulate", "--config", cfg]) == 3


def test_simulate_trajectory_is_byte_identical(tmp_path):
    body = PARAMS.format(chi1=0.02, chi2=0.05, b=4) + (
        "[simulate]\nscenario = plain\nx_hi = 20\nh = 0.2\ndt = 0.01\nt_end = 1\nrecord_every = 20\n"
    )
    cfg = write(tmp_path, body)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["simulate", "--config", cfg, "--out", str(d)]) == 0
        outs.append((d / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"t,x,u,v1,v2\n")


def test_verify_subset(capsys):
    assert main(["verify", "--only", "1,3"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2


def test_verify_failure_exit(monkeypatch, capsys):
    from chemowave import acceptance

    monkeypatch.setitem(acceptance.CRITERIA, 3, ("forced", lambda: (False, "forced failure")))
    assert main(["verify", "--only", "3"]) == 2
    assert "[FAIL]" in capsys.readouterr().out


def test_console_script_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "chemowave", "constants", "--config", str(CONFIGS / "kpp.ini")],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and "m_bar=0" in proc.stdout
