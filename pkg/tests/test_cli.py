"""End-to-end command line tests driven through cli.main."""

import csv
import json
import math

import pytest

from delaylab.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def parse_values(out):
    """Collect `name = number` lines printed by the exit command."""
    vals = {}
    for line in out.splitlines():
        if " = " in line:
            name, _, raw = line.partition(" = ")
            try:
                vals[name.strip()] = float(raw)
            except ValueError:
                pass
    return vals


def read_csv_rows(path):
    comments, rows = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                rows.append(line.rstrip("\n"))
    header = rows[0].split(",")
    data = list(csv.DictReader(rows[1:], fieldnames=header))
    return comments, header, data


def bisect60(func, lo, hi):
    flo = func(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if (func(mid) > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_exit_linear(capsys, tmp_path):
    rc, out, _ = run(capsys, "exit", "--model", "linear", "--x0", "-1",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    vals = parse_values(out)
    assert abs(vals["x1"] - 1.0) <= 1e-8
    assert abs(vals["zeta0"] - 0.5) <= 1e-10
    assert abs(vals["tau1"] - 2.0) <= 1e-10
    assert abs(vals["dx1_dx0"] + 1.0) <= 1e-10
    assert abs(vals["residual"]) <= 1e-10
    payload = json.loads((tmp_path / "exit.json").read_text())
    assert payload["meta"]["command"] == "exit"
    assert abs(payload["x1"] - 1.0) <= 1e-8
    assert payload["evaluations"] > 0


def test_exit_custom_expressions_and_curves(capsys, tmp_path):
    rc, out, _ = run(capsys, "exit", "--f", "1", "--g", "x + x^2",
                     "--window", "-0.8", "0.8", "--x0", "-0.5",
                     "--curves-csv", "curves.csv", "--curves-n", "64",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    oracle = bisect60(lambda s: s * s / 2.0 + s ** 3 / 3.0 - 1.0 / 12.0,
                      0.2, 0.6)
    assert abs(parse_values(out)["x1"] - oracle) <= 1e-8
    comments, header, data = read_csv_rows(tmp_path / "curves.csv")
    assert comments and comments[0].startswith("# delaylab")
    assert header == ["x", "zeta_minus", "tau_minus", "zeta_plus", "tau_plus"]
    assert len(data) == 64


def test_exit_error_codes(capsys, tmp_path):
    od = str(tmp_path)
    # entry point on the wrong side of the turning point
    rc, _, err = run(capsys, "exit", "--model", "linear", "--x0", "0.5",
                     "--out-dir", od)
    assert rc == 1 and "error:" in err
    # window too short for the slow segment to balance the loss
    rc, _, err = run(capsys, "exit", "--f", "1", "--g", "x",
                     "--window", "-1.2", "0.5", "--x0", "-1",
                     "--out-dir", od)
    assert rc == 2 and "short by" in err
    # unknown builtin lists the alternatives
    rc, _, err = run(capsys, "exit", "--model", "cubic", "--x0", "-1",
                     "--out-dir", od)
    assert rc == 1 and "linear" in err


def test_usage_errors_exit_64(capsys, tmp_path):
    od = str(tmp_path)
    cases = (
        ("exit", "--model", "linear"),                        # missing --x0
        ("exit", "--x0", "-1"),                               # no model
        ("exit", "--model", "linear", "--f", "1", "--g", "x",
         "--x0", "-1"),                                       # both styles
        ("exit", "--f", "2x", "--g", "x", "--x0", "-1"),      # bad syntax
        ("exit", "--f", "1", "--x0", "-1"),                   # --g missing
    )
    for argv in cases:
        rc, _, err = run(capsys, *argv, "--out-dir", od)
        assert rc == 64, argv
        assert "usage error" in err, argv
    rc = main([])  # no command at all
    capsys.readouterr()
    assert rc == 64


def test_simulate_default_stop(capsys, tmp_path):
    rc, out, _ = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0.05",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    assert "chart=zeta" in out
    assert "stop:" in out
    comments, header, data = read_csv_rows(tmp_path / "trajectory.csv")
    assert comments[0].startswith("# delaylab")
    assert header == ["t", "tau", "x", "z", "zeta", "event"]
    last = data[-1]
    assert last["event"] == "1"
    assert abs(float(last["x"]) - 1.0) <= 1e-6
    assert abs(float(last["z"]) - 0.1) <= 1e-6


def test_simulate_eps_zero_uses_xz_chart(capsys, tmp_path):
    rc, out, _ = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    assert "chart=xz" in out
    stop_line = next(l for l in out.splitlines() if l.startswith("stop:"))
    fields = dict(p.split("=") for p in stop_line.split()[1:])
    # default stop: three decades of fast decay with x frozen
    assert abs(float(fields["t"]) - math.log(1000.0)) <= 1e-6
    assert abs(float(fields["x"]) + 1.0) <= 1e-12
    assert abs(float(fields["z"]) - 1e-4) <= 1e-12
    # the zeta chart is undefined at eps = 0
    rc, _, err = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0", "--chart", "zeta",
                     "--out-dir", str(tmp_path))
    assert rc == 64 and "--chart xz" in err


def test_simulate_deep_eps_needs_zeta_chart(capsys, tmp_path):
    rc, out, _ = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "1e-4",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    _, _, data = read_csv_rows(tmp_path / "trajectory.csv")
    assert any(row["z"] == "" for row in data)  # below double precision
    rc, _, err = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "1e-4", "--chart", "xz",
                     "--out-dir", str(tmp_path))
    assert rc == 1 and "integrate_zeta" in err


def test_simulate_stop_flags(capsys, tmp_path):
    od = str(tmp_path)
    rc, _, err = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0.1", "--stop-z", "0.5",
                     "--stop-x", "0", "--out-dir", od)
    assert rc == 64 and "at most one" in err
    rc, out, _ = run(capsys, "simulate", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0.1", "--stop-zeta", "0.4",
                     "--stop-direction", "up", "--out-dir", od)
    assert rc == 0
    stop_line = next(l for l in out.splitlines() if l.startswith("stop:"))
    fields = dict(p.split("=") for p in stop_line.split()[1:])
    assert abs(float(fields["zeta"]) - 0.4) <= 1e-9


def test_sweep_cli_outputs(capsys, tmp_path):
    rc, out, _ = run(capsys, "sweep", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0.1,0.05",
                     "--hausdorff-n", "256", "--out-dir", str(tmp_path))
    assert rc == 0
    assert "richardson_minz" in out
    payload = json.loads((tmp_path / "sweep.json").read_text())
    assert payload["meta"]["command"] == "sweep"
    assert [r["eps"] for r in payload["records"]] == [0.1, 0.05]
    assert all("wall_time_s" not in r for r in payload["records"])
    assert abs(payload["richardson_minz"] - 0.5) <= 1e-2
    comments, header, data = read_csv_rows(tmp_path / "sweep.csv")
    assert header[0] == "eps" and len(data) == 2


def test_sweep_jobs_write_identical_files(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ("sweep", "--model", "linear", "--x0", "-1", "--z0", "0.1",
            "--eps", "0.1,0.05", "--hausdorff-n", "256")
    assert run(capsys, *args, "--jobs", "1", "--out-dir", str(a))[0] == 0
    assert run(capsys, *args, "--jobs", "4", "--out-dir", str(b))[0] == 0
    assert (a / "sweep.json").read_bytes() == (b / "sweep.json").read_bytes()
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_sweep_formats_and_eps_validation(capsys, tmp_path):
    od = str(tmp_path)
    rc, _, _ = run(capsys, "sweep", "--model", "linear", "--x0", "-1",
                   "--z0", "0.1", "--eps", "0.1", "--formats", "json",
                   "--hausdorff-n", "256", "--out-dir", od)
    assert rc == 0
    assert (tmp_path / "sweep.json").exists()
    assert not (tmp_path / "sweep.csv").exists()
    rc, _, err = run(capsys, "sweep", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", "0.1", "--formats", "yaml",
                     "--out-dir", od)
    assert rc == 64 and "formats" in err
    rc, _, err = run(capsys, "sweep", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--eps", ",", "--out-dir", od)
    assert rc == 64 and "empty" in err


def test_out_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DELAYLAB_OUT", str(tmp_path))
    rc, _, _ = run(capsys, "exit", "--model", "linear", "--x0", "-1")
    assert rc == 0
    assert (tmp_path / "exit.json").exists()


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "linear", "x0": -1.0, "z0": 0.1,
                               "eps": 0.1, "out_dir": str(tmp_path)}))
    rc, out, _ = run(capsys, "simulate", "--config", str(cfg))
    assert rc == 0 and (tmp_path / "trajectory.csv").exists()
    # a flag wins over the config value
    rc, out, _ = run(capsys, "exit", "--config", str(cfg), "--x0", "-0.5")
    assert rc == 0
    assert abs(parse_values(out)["x1"] - 0.5) <= 1e-8
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    rc, _, err = run(capsys, "exit", "--config", str(bad), "--x0", "-1")
    assert rc == 64 and "JSON object" in err
    rc, _, err = run(capsys, "exit", "--config", str(tmp_path / "nope.json"),
                     "--x0", "-1")
    assert rc == 64


def test_geometry_cli(capsys, tmp_path):
    rc, out, _ = run(capsys, "geometry", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--n", "17", "--config-n", "65",
                     "--out-dir", str(tmp_path))
    assert rc == 0
    assert "transversality det" in out
    assert "min=-1.0000" in out and "max=-1.0000" in out
    for name in ("gamma0.csv", "configuration.csv", "manifold_left.csv",
                 "manifold_right.csv"):
        assert (tmp_path / name).exists(), name
    _, header, data = read_csv_rows(tmp_path / "gamma0.csv")
    assert header == ["x", "zeta", "tau"]
    assert len(data) == 65
    _, header, data = read_csv_rows(tmp_path / "configuration.csv")
    assert header == ["piece", "x", "z", "zeta", "tau"]
    assert {row["piece"] for row in data} == {"gamma1", "gamma0", "gamma2"}
    rc, _, err = run(capsys, "geometry", "--model", "linear", "--x0", "-1",
                     "--z0", "0.1", "--delta", "0.9",
                     "--out-dir", str(tmp_path))
    assert rc == 1 and "delta" in err


def test_check_cli(capsys, tmp_path):
    rc, out, _ = run(capsys, "check", "--model", "linear", "--grid-n", "64")
    assert rc == 0 and "PASS" in out
    rc, out, _ = run(capsys, "check", "--f", "-1", "--g", "x",
                     "--window", "-1.5", "1.5", "--grid-n", "64")
    assert rc == 1 and "FAIL" in out
