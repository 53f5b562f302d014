import numpy as np
import pytest

from bcw import MediumParams
from bcw.cli import main
from bcw.energy import EnergySample
from bcw.errors import ConfigError
from bcw.io import parse_config, read_energies_csv, write_energies_csv

MINIMAL = """
domain.lengths = [3.141592653589793]
domain.modes = [8]
medium.a = 1.0
medium.b = 2.0
medium.c = 1.0
time.t_end = 1.0
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.dt == 1e-3 and cfg.picard_tol == 1e-10 and cfg.picard_max_iter == 25
    assert cfg.dealias is True and cfg.stride == 10 and cfg.nonlinear_enabled is True
    assert cfg.medium == MediumParams(1.0, 2.0, 1.0, 0.0)
    assert cfg.domain.size == 8 and cfg.output_path is None


def test_full_config():
    text = MINIMAL + """
medium.sigma = 0.01   # trailing comment
time.dt = 0.01
solver.nonlinear = false
solver.dealias = false
init.psi0 = [0.1, 0.2]
init.psi1 = 0.3
output.path = out
output.stride = 5
"""
    cfg = parse_config(text)
    assert cfg.medium.sigma == 0.01 and cfg.dt == 0.01
    assert not cfg.nonlinear_enabled and not cfg.dealias
    assert cfg.psi0 == (0.1, 0.2) and cfg.psi1 == (0.3,)
    assert str(cfg.output_path) == "out" and cfg.stride == 5


def test_physical_medium_keys():
    text = MINIMAL.replace("medium.a = 1.0\n", "") + "medium.nu = 0.7\nmedium.prandtl = 0.7\nmedium.b_over_a = 2\n"
    cfg = parse_config(text)
    assert cfg.medium.a == pytest.approx(1.0) and cfg.medium.sigma == pytest.approx(2.0)


def test_b_zero_rejected():
    with pytest.raises(ConfigError, match="b must be > 0") as info:
        parse_config(MINIMAL.replace("medium.b = 2.0", "medium.b = 0"))
    assert info.value.key == "medium.b" and info.value.line == 5


def test_malformed_number_names_line_and_key():
    with pytest.raises(ConfigError, match="line 7: time.t_end") as info:
        parse_config(MINIMAL.replace("time.t_end = 1.0", "time.t_end = 1.0.0"))
    assert info.value.key == "time.t_end" and info.value.line == 7


@pytest.mark.parametrize("text, key", [
    (MINIMAL + "medium.colour = 3\n", "medium.colour"),
    (MINIMAL.replace("medium.c = 1.0\n", ""), "medium.c"),
    (MINIMAL + "time.dt = -1\n", "time.dt"),
    (MINIMAL + "solver.dealias = maybe\n", "solver.dealias"),
    (MINIMAL + "time.t_end = 2\n", "time.t_end"),
    (MINIMAL.replace("domain.modes = [8]", "domain.modes = [8, 8]"), "domain.lengths"),
])
def test_rejections_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("domain.lengths = [1]\njunk\n")


def test_csv_round_trip_and_precision(tmp_path):
    samples = [EnergySample(0.1 * i, *(np.pi * (i + 1) * np.arange(1, 9) / 7)) for i in range(3)]
    path = write_energies_csv(samples, tmp_path / "e.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,E1,E2,calE0,calE,Epsi,Lambda,r,e"
    mantissa = lines[1].split(",")[1].split("e")[0].replace(".", "").lstrip("-")
    assert len(mantissa) >= 12
    back = read_energies_csv(path)
    assert back == samples


CLI_CFG = MINIMAL.replace("time.t_end = 1.0", "time.t_end = 4.0") + """
time.dt = 1e-2
medium.sigma = 0
init.psi0 = [1, -0.5, 0.3, 0.2]
init.psi1 = [0.5, 0.4, -0.2, 0.1]
"""


def test_cli_spectrum_table(tmp_path, capsys):
    cfg = write(tmp_path, CLI_CFG.replace("domain.modes = [8]", "domain.modes = [16]"))
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "spectrum.csv").read_text().splitlines()
    first = [float(x) for x in rows[1].split(",")[1:7]]
    assert first == pytest.approx([1.0, -1.0, -1.0, 0.0, -1.0, 0.0])
    assert rows[-1] == "# s(A) = -5.000000000000000e-01"
    assert "passed = true" in capsys.readouterr().out


def test_cli_simulate_linear_decay(tmp_path):
    cfg = write(tmp_path, CLI_CFG)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_energies_csv(tmp_path / "energies.csv")
    assert len(rows) == 400 // 10 + 1
    e1 = np.array([r.E1 for r in rows])
    t = np.array([r.t for r in rows])
    assert np.all(np.diff(e1[t >= 2.0]) <= 0)
    report = (tmp_path / "simulate_report.txt").read_text()
    assert "check.completed.passed = true" in report


def test_cli_verify_bounds(tmp_path):
    cfg = write(tmp_path, CLI_CFG)
    assert main(["verify-bounds", "--config", str(cfg), "--out", str(tmp_path)]) == 0


def test_cli_decay_report_fails_on_short_horizon(tmp_path):
    # a 4 s run has not reached the asymptotic rate, so the check fails honestly
    cfg = write(tmp_path, CLI_CFG)
    assert main(["decay-report", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "warning: t_end" in (tmp_path / "decay-report_report.txt").read_text()


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["explode", "--config", "x"]) == 2
    assert main(["spectrum"]) == 2
    assert main(["spectrum", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = write(tmp_path, MINIMAL.replace("medium.b = 2.0", "medium.b = -1"))
    assert main(["spectrum", "--config", str(bad)]) == 2
    assert "medium.b" in capsys.readouterr().err


def test_cli_failed_run_exits_one(tmp_path):
    text = MINIMAL + "medium.sigma = 50\ntime.dt = 1e-2\ninit.psi0 = [0.3]\ninit.psi1 = [0.5]\nsolver.picard_max_iter = 8\n"
    assert main(["simulate", "--config", str(write(tmp_path, text)), "--out", str(tmp_path)]) == 1
