import csv
import filecmp
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from tdqho import cli
from tdqho.config import ConfigError, loads, sweep_points
from tdqho.diagnostics import COLUMNS

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

QUENCH = """
[protocol]
kind = "SuddenQuench"
omega_i = 1.0
omega_f = 3.0

[time]
stop = 4.0
samples = 201

[integrator]
rtol = 1e-11
atol = 1e-14

[observables]
pmf = true
transitions = 6

[output]
name = "q"
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# ---------------------------------------------------------------- run

def test_run_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", write(tmp_path, QUENCH), "--out", str(out)]) == 0
    header, data = read_csv(out / "q.csv")
    assert tuple(header) == COLUMNS
    assert data.shape == (201, len(COLUMNS))
    t = data[:, 0]
    sigma = data[:, header.index("sigma")]
    assert np.max(np.abs(sigma**2 - (np.cos(3 * t) ** 2 + np.sin(3 * t) ** 2 / 9))) <= 1e-8
    assert np.allclose(data[:, header.index("Q")], 5 / 3, atol=1e-9)
    report = json.loads((out / "q_report.json").read_text())
    assert report["config"]["protocol"]["kind"] == "SuddenQuench"
    paths = {m["path"]: m["rows"] for m in report["manifest"]}
    assert paths["q.csv"] == 201 and "q_pmf.csv" in paths and paths["q_transitions.csv"] == 36
    printed = json.loads(capsys.readouterr().out)
    assert printed["summary"]["final_Q"] == pytest.approx(5 / 3, abs=1e-9)


def test_csv_format(tmp_path):
    out = tmp_path / "out"
    cli.main(["run", "--config", write(tmp_path, QUENCH), "--out", str(out)])
    raw = (out / "q.csv").read_bytes()
    assert raw.count(b"\r\n") == 202
    first = raw.split(b"\r\n")[1].decode().split(",")
    # every field is written with 17 significant digits and a '.' separator
    assert all(x == "%.17g" % float(x) for x in first)


def test_run_is_byte_identical(tmp_path):
    cfg = write(tmp_path, QUENCH)
    for d in ("a", "b"):
        cli.main(["run", "--config", cfg, "--out", str(tmp_path / d)])
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for name in cmp.common_files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_shipped_configs_parse():
    for path in CONFIGS.glob("*.toml"):
        cfg = loads(path.read_text())
        assert cfg.t_stop > cfg.t_start


# ---------------------------------------------------------------- sweep

SWEEP = """
[protocol]
kind = "LinearSymmetric"
delta = 1.0

[oscillator]
c = 0.25

[time]
start = -80.0
stop = 0.0
samples = 2

[initial]
mode = "adiabatic"

[output]
name = "kz"

[sweep.axes]
"protocol.delta" = [0.1, 0.1931, 0.3728, 0.7197, 1.3895, 2.6827, 5.1795, 10.0]

[sweep.fit]
x = "protocol.delta"
y = "excess_energy"
"""


@pytest.mark.parametrize("jobs", ["1", "2"])
def test_sweep_fit(tmp_path, jobs):
    out = tmp_path / f"out{jobs}"
    assert cli.main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(out), "--jobs", jobs]) == 0
    rep = json.loads((out / "kz_sweep_report.json").read_text())
    assert rep["points"] == 8
    assert abs(rep["fit"]["loglog_slope"] - 1 / 3) <= 5e-3 / 3
    header, data = read_csv(out / "kz_sweep.csv")
    assert data.shape[0] == 8 and header[0] == "protocol.delta"


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write(tmp_path, SWEEP)
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")])
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "p"), "--jobs", "3"])
    for name in ("kz_sweep.csv", "kz_sweep_report.json"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_single_point_sweep_equals_run(tmp_path):
    text = QUENCH + '\n[sweep.axes]\n"protocol.omega_f" = [3.0]\n'
    cfg = write(tmp_path, text)
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")])
    cli.main(["run", "--config", write(tmp_path, QUENCH, "r.toml"), "--out", str(tmp_path / "r")])
    row = json.loads((tmp_path / "s" / "q_sweep_report.json").read_text())["rows"][0]
    summ = json.loads((tmp_path / "r" / "q_report.json").read_text())["summary"]
    for key in ("final_Q", "final_r", "excess_energy", "steps"):
        assert row[key] == summ[key]


def test_sweep_points_product():
    cfg = loads(QUENCH + '\n[sweep.axes]\n"protocol.omega_f" = [2.0, 3.0]\n"oscillator.mass" = [1.0, 2.0, 4.0]\n')
    pts = sweep_points(cfg)
    assert len(pts) == 6 and pts[0] == {"protocol.omega_f": 2.0, "oscillator.mass": 1.0}


# ---------------------------------------------------------------- errors and exit codes

@pytest.mark.parametrize("text", [
    "[protocol]\nkind = 'Nope'\n[time]\nstop = 1.0\n",
    "[protocol]\nkind = 'Constant'\nomega0 = 1.0\n",
    "[protocol]\nkind = 'Tanh'\nomega_i = 1.0\nomega_f = 2.0\neps = -1.0\n[time]\nstop = 1.0\n",
    "[protocol]\nkind = 'LinearSymmetric'\ndelta = 1.0\n[time]\nstop = 1.0\n",
    "[protocol]\nkind = 'Constant'\nomega0 = 1.0\n[time]\nstart = 0.0\nstop = 1.0\n[initial]\nmode = 'magic'\n",
    "[protocol]\nkind = 'Constant'\nomega0 = 1.0\n[time]\nstart = 0.0\nstop = 1.0\n[extra]\n",
    "[protocol]\nkind = 'LinearSymmetric'\ndelta = 1.0\n[time]\nstart = 0.0\nstop = 1.0\n",
    "[protocol\nkind = 'Constant'\n",
    "[protocol]\nkind = 'Constant'\nomega0 = 1.0\n[time]\nstart = 0.0\nstop = 1.0\n[sweep]\naxes = {}\n",
])
def test_config_errors_exit_2(tmp_path, text, capsys):
    assert cli.main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_syntax_error_has_line_context(tmp_path):
    with pytest.raises(ConfigError, match="line 1"):
        loads("[protocol\nkind = 'Constant'\n")


def test_missing_file_exit_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "absent.toml")]) == 2


def test_sweep_without_axes_exit_2(tmp_path):
    assert cli.main(["sweep", "--config", write(tmp_path, QUENCH), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    code = cli.main(["run", "--config", write(tmp_path, QUENCH), "--out", str(tmp_path / "o"),
                     "--tol-rel", "1e-30", "--tol-abs", "1e-300"])
    assert code == 3
    assert "last state" in capsys.readouterr().err


def test_bad_tolerance_exit_2(tmp_path):
    assert cli.main(["run", "--config", write(tmp_path, QUENCH), "--out", str(tmp_path / "o"),
                     "--tol-rel", "-1"]) == 2


def test_validate_subset(tmp_path, capsys):
    assert cli.main(["validate", "--only", "5", "6", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and all("PASS" in line for line in lines)
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["passed"] and [c["id"] for c in verdict["criteria"]] == [5, 6]


def test_validate_failure_exit_4(monkeypatch, capsys):
    from tdqho import closed_forms
    monkeypatch.setattr(closed_forms, "FULL_RAMP_WEIGHTS", (math.pi, math.pi / 6))
    assert cli.main(["validate", "--only", "4", "--json"]) == 4
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["passed"] is False


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert "tdqho" in capsys.readouterr().out
