import json
import subprocess
import sys

import pytest

from unruh_fluid import cli
from unruh_fluid.dispersion import R0_MAX, CondensateParams
from unruh_fluid.response import DetectorOrbit, rate_pair

ROTON = ["--r0", repr(R0_MAX), "--a", "3"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# unruh-fluid ")
    assert not any(line.startswith("#") for line in lines[1:])
    header = lines[1].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[2:]]


def test_dispersion_table(capsys):
    code, out, _ = run(["dispersion", "--r0", repr(R0_MAX), "--a", "3.6", "--zeta", "0:2:41"], capsys)
    assert code == 0
    header, rows = csv_rows(out)
    assert header == ["zeta", "f_squared", "f", "flag"]
    assert len(rows) == 41
    assert rows[0]["f"] == "1.0000000000000000e+00"
    unstable = [r for r in rows if r["flag"] == "UNSTABLE"]
    assert unstable and all(float(r["f_squared"]) < 0 and r["f"] == "" for r in unstable)


def test_single_point_rate_is_bitwise_library_value(capsys):
    code, out, _ = run(["rate", *ROTON, "--mtilde", "10", "--v", "0.7", "--etilde", "1.5"], capsys)
    assert code == 0
    _, rows = csv_rows(out)
    up, down = rate_pair(CondensateParams(R0_MAX, 3.0), DetectorOrbit(10.0, 1.5, 0.7))
    assert float(rows[0]["rate_excite"]) == up.value
    assert float(rows[0]["rate_deexcite"]) == down.value
    assert int(rows[0]["m_min"]) == up.m_min
    assert rows[0]["multi_root"] in ("0", "1")


def test_omega0_sweep_uses_mstar_units(capsys):
    code, out, _ = run(["rate", "--r0", "0", "--a", "1", "--mtilde", "4", "--v", "0.5",
                        "--sweep", "omega0=0.5:1:2"], capsys)
    assert code == 0
    _, rows = csv_rows(out)
    up, _ = rate_pair(CondensateParams(0.0, 1.0), DetectorOrbit(4.0, 4.0, 0.5))
    assert float(rows[1]["rate_excite"]) == up.value


@pytest.mark.parametrize("argv", [
    ["rate", "--r0", "0", "--a", "1", "--v", "0.5", "--etilde", "1"],                       # no --mtilde
    ["rate", "--r0", "0", "--a", "1", "--mtilde", "2", "--v", "0.5", "--sweep", "v=0.5:0.5:3"],
    ["rate", "--r0", "0", "--a", "1", "--mtilde", "2", "--v", "0.5", "--sweep", "zeta=0:1:3"],
    ["rate", "--r0", "0", "--a", "1", "--mtilde", "2", "--sweep", "omega0=0:1:1", "--v", "0.5"],
    ["rate", "--r0", "0", "--a", "1", "--mtilde", "2", "--v", "0.5", "--etilde", "1", "--omega0-mstar", "1"],
    ["rate", "--r0", "3", "--a", "1", "--mtilde", "2", "--v", "0.5", "--etilde", "1"],     # r0 out of range
    ["dispersion", "--r0", "0", "--a", "1", "--threads", "0"],
    ["temperature", "--r0", "0", "--a", "1", "--mtilde", "2", "--v", "0.5", "--etilde", "1"],
    ["nonsense"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_unstable_rows_are_marked_not_fatal(capsys):
    argv = ["rate", "--r0", repr(R0_MAX), "--a", "3", "--mtilde", "3", "--v", "0.5", "--etilde", "1",
            "--sweep", "a_chem=3:4:3"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["rate_excite"] != "error:instability"
    assert rows[1]["rate_excite"] == "error:instability"
    assert rows[2]["rate_excite"] == "error:instability"


def test_all_rows_failing_exits_nonzero(capsys):
    argv = ["rate", "--r0", repr(R0_MAX), "--a", "4", "--mtilde", "3", "--v", "0.5", "--etilde", "1"]
    code, out, err = run(argv, capsys)
    assert code == 1
    assert "error:instability" in out and "no row" in err


def test_temperature_output_has_no_nan(capsys):
    code, out, _ = run(["temperature", "--r0", "0", "--a", "1", "--mtilde", "10",
                        "--sweep", "v=0.1:0.3:5"], capsys)
    assert code == 0
    header, rows = csv_rows(out)
    assert header == ["v", "temperature", "status"]
    assert "nan" not in out.lower()
    assert rows[0]["status"] == "underflow" and rows[0]["temperature"] == ""
    assert rows[-1]["status"] == "ok" and float(rows[-1]["temperature"]) > 0


def test_provenance_ignores_threads_and_out(tmp_path, capsys):
    base = ["dispersion", "--r0", "0.5", "--a", "1", "--zeta", "0:1:3"]
    run(base, capsys)
    code = cli.main(base + ["--threads", "3", "--out", str(tmp_path / "x.csv")])
    assert code == 0
    first = capsys.readouterr()
    line = (tmp_path / "x.csv").read_text().splitlines()[0]
    run(base, capsys)
    assert "--threads" not in line and "x.csv" not in line
    assert "params-sha256=" in line and first.out == ""
    code, out, _ = run(base, capsys)
    assert out.splitlines()[0] == line


def test_thread_env_variable(monkeypatch, tmp_path):
    argv = ["temperature", "--r0", "0", "--a", "1", "--mtilde", "2", "--sweep", "v=0.2:0.9:8"]
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    assert cli.main(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert cli.main(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert cli.main(argv + ["--out", str(tmp_path / "c.csv")]) == 2


def test_config_file_key_value_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# roton medium\nr0 = 1.2\na = 2.5\nmtilde = 10\nv = 0.7\netilde = 1.5\n")
    code, from_file, _ = run(["rate", "--config", str(cfg)], capsys)
    assert code == 0
    code, direct, _ = run(["rate", "--r0", "1.2", "--a", "2.5", "--mtilde", "10", "--v", "0.7",
                           "--etilde", "1.5"], capsys)
    assert from_file.splitlines()[2] == direct.splitlines()[2]
    code, overridden, _ = run(["rate", "--config", str(cfg), "--v", "0.5"], capsys)
    assert overridden.splitlines()[2] != direct.splitlines()[2]


def test_config_json_and_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"r0": 0.0, "a": 1.0, "zeta": "0:1:3"}))
    assert run(["dispersion", "--config", str(cfg)], capsys)[0] == 0
    cfg.write_text(json.dumps({"r0": 0.0, "a": 1.0, "colour": "red"}))
    code, _, err = run(["dispersion", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_map_physical_roundtrip(tmp_path, capsys):
    first = tmp_path / "scales.json"
    assert cli.main(["map-physical", "--radius", "2e-5", "--out", str(first)]) == 0
    data = json.loads(first.read_text())
    keys = list(data)
    assert keys[0] == "m_b [kg]" and "d_z [m]" in keys and "rate_unit [1/s]" in keys
    assert data["radius [m]"] == 2e-5
    second = tmp_path / "again.json"
    assert cli.main(["map-physical", "--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_map_physical_constraint_violation(capsys):
    code, out, _ = run(["map-physical", "--omega-orbit", "5000"], capsys)
    assert code == 3
    err = json.loads(out)
    assert err["error"] == "superluminal_orbit" and err["value"] > 1.0
    code, out, _ = run(["map-physical", "--rho0", "-1"], capsys)
    assert code == 3 and "error" in json.loads(out)


def test_verify_lorentz_invariant_point(capsys):
    code, out, _ = run(["verify", "--r0", "0", "--a", "1", "--mtilde", "100", "--v", "0.6",
                        "--etilde", "1", "--format", "json"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["passed"]
    assert [c["name"] for c in report["comparisons"]] == ["smeared_delta", "p0"]


def test_verify_roton_point_reports_expected_fail(capsys):
    code, out, _ = run(["verify", *ROTON, "--mtilde", "300", "--v", "0.6", "--etilde", "1"], capsys)
    assert code == 0
    assert "XFAIL" in out and "p0_plus_delta_p" in out


def test_verify_unstable_exits_1(capsys):
    code, _, err = run(["verify", "--r0", repr(R0_MAX), "--a", "5", "--mtilde", "3", "--v", "0.6",
                        "--etilde", "1"], capsys)
    assert code == 1 and "unstable" in err


def test_rate_verify_flag(capsys):
    code, _, _ = run(["rate", "--r0", "0", "--a", "1", "--mtilde", "10", "--v", "0.5", "--etilde", "1",
                      "--verify"], capsys)
    assert code == 0


def test_sweep_parser():
    spec = cli.parse_sweep("v=0.1:0.9:5", "rate")
    assert spec.values().tolist() == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])
    assert cli.parse_sweep("0:2:3", "dispersion").axis == "zeta"
    log = cli.parse_sweep("omega0=0.1:10:3", "rate", log=True)
    assert log.values().tolist() == pytest.approx([0.1, 1.0, 10.0])
    for bad in ("v=0.1:0.9", "v=a:b:c", "v=0.1:0.9:1"):
        with pytest.raises(cli.UsageError):
            cli.parse_sweep(bad, "rate")
    with pytest.raises(cli.UsageError):
        cli.parse_sweep("omega0=0:1:3", "rate", log=True)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "unruh_fluid.cli", "--version"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "unruh-fluid" in res.stdout
