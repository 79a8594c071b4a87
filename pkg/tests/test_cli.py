import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from stopcontest.cli import main


def run(args, **kw):
    return CliRunner().invoke(main, args, catch_exceptions=False, **kw)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_solve_writes_table_and_header(tmp_path):
    res = run(["solve", "--mode", "none", "--n", "2", "--grid", "100",
               "--out", str(tmp_path)])
    assert res.exit_code == 0
    csv = tmp_path / "solve_none_n2_K0.csv"
    data = np.genfromtxt(csv, delimiter=",", names=True)
    # linear law on [0, 2]: G(1) = 0.5
    i = np.argmin(np.abs(data["x"] - 1.0))
    assert data["G"][i] == pytest.approx(0.5, abs=1e-12)
    hdr = json.loads(read(tmp_path / "solve_none_n2_K0.json"))
    assert hdr["r"] == 2.0 and hdr["mode"] == "none"
    assert (tmp_path / "solve_none_n2.manifest.json").exists()


def test_solve_past_header_oracle(tmp_path):
    res = run(["solve", "--mode", "past", "--n", "2", "--k", "1",
               "--grid", "64", "--out", str(tmp_path)])
    assert res.exit_code == 0
    hdr = json.loads(read(tmp_path / "solve_past_n2_K1.json"))
    assert hdr["r"] == pytest.approx(1.6294456766354621, abs=1e-9)
    data = np.genfromtxt(tmp_path / "solve_past_n2_K1.csv",
                         delimiter=",", names=True)
    assert set(data.dtype.names) == {"x", "G", "g", "M_of_x"}
    assert np.all(np.diff(data["G"]) >= 0)


def test_solve_k_sweep(tmp_path):
    res = run(["solve", "--mode", "future", "--n", "3", "--k", "0.5,1",
               "--grid", "32", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert (tmp_path / "solve_future_n3_K0.5.csv").exists()
    assert (tmp_path / "solve_future_n3_K1.csv").exists()


def test_all_mode_table_matches_k_zero(tmp_path):
    run(["solve", "--mode", "all", "--n", "3", "--k", "2", "--out", str(tmp_path)])
    run(["solve", "--mode", "none", "--n", "3", "--k", "0", "--out", str(tmp_path)])
    a = read(tmp_path / "solve_all_n3_K2.csv")
    b = read(tmp_path / "solve_none_n3_K0.csv")
    assert a == b  # the all-regret marginal is the standard K=0 law


def test_outputs_deterministic(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    for d in (d1, d2):
        run(["solve", "--mode", "past", "--n", "2", "--k", "1",
             "--grid", "64", "--out", str(d)])
        run(["plot", "--mode", "none", "--n", "2", "--k", "0,1",
             "--grid", "50", "--out", str(d)])
        run(["simulate", "--mode", "none", "--n", "2", "--paths", "200",
             "--dt", "1e-2", "--seed", "7", "--out", str(d)])
    for name in ("solve_past_n2_K1.csv", "solve_past_n2_K1.json",
                 "plot_none_n2_cdf.svg", "plot_none_n2_density.svg",
                 "simulate_none_n2_K0_seed7.json"):
        assert read(d1 / name) == read(d2 / name), name


def test_verify_pass_and_negative_control(tmp_path):
    res = run(["verify", "--mode", "none", "--n", "2", "--out", str(tmp_path)])
    assert res.exit_code == 0
    assert "PASS" in res.output
    out = json.loads(read(tmp_path / "verify_none_n2_K0.json"))
    assert out["passed"] is True
    bad = run(["verify", "--mode", "none", "--n", "2", "--r-scale", "1.05",
               "--out", str(tmp_path)])
    assert bad.exit_code == 1


def test_verify_candidate_table(tmp_path):
    run(["solve", "--mode", "none", "--n", "3", "--grid", "200",
         "--out", str(tmp_path)])
    csv = tmp_path / "solve_none_n3_K0.csv"
    good = run(["verify", "--mode", "none", "--n", "3",
                "--candidate", str(csv), "--out", str(tmp_path)])
    assert good.exit_code == 0
    # corrupt the table
    lines = read(csv).decode().splitlines()
    x, G, g = lines[50].split(",")
    lines[50] = ",".join([x, str(float(G) + 0.01), g])
    badcsv = tmp_path / "bad.csv"
    badcsv.write_text("\n".join(lines) + "\n")
    bad = run(["verify", "--mode", "none", "--n", "3",
               "--candidate", str(badcsv), "--out", str(tmp_path)])
    assert bad.exit_code == 1


def test_simulate_report(tmp_path):
    res = run(["simulate", "--mode", "none", "--n", "2", "--paths", "2000",
               "--dt", "1e-3", "--seed", "1", "--out", str(tmp_path)])
    assert res.exit_code == 0
    rep = json.loads(read(tmp_path / "simulate_none_n2_K0_seed1.json"))
    assert rep["contests"] == 2000
    assert abs(rep["win_prob"][0] - 0.5) < 0.05
    assert rep["truncation_rate"] == 0.0
    man = json.loads(read(tmp_path / "simulate_none_n2_K0_seed1.manifest.json"))
    assert man["seed"] == 1 and man["command"] == "simulate"


def test_simulate_oracle_rule(tmp_path):
    res = run(["simulate", "--mode", "future", "--n", "2", "--k", "1",
               "--rule", "oracle", "--paths", "5000", "--seed", "2",
               "--out", str(tmp_path)])
    assert res.exit_code == 0
    rep = json.loads(read(tmp_path / "simulate_future_n2_K1_seed2.json"))
    assert rep["ks_distance"] < 0.03


def test_plot_svg(tmp_path):
    res = run(["plot", "--mode", "past", "--n", "2", "--k", "0.5,1",
               "--grid", "60", "--out", str(tmp_path)])
    assert res.exit_code == 0
    svg = read(tmp_path / "plot_past_n2_cdf.svg")
    assert svg.startswith(b"<?xml") and b"K=0.5" in svg


def test_usage_errors():
    assert run(["solve", "--n", "1"]).exit_code == 2
    assert run(["solve", "--k", "abc"]).exit_code == 2
    assert run(["verify", "--mode", "past", "--n", "2", "--k", "-1"]).exit_code == 2


def test_outdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("STOPCONTEST_OUTDIR", str(tmp_path))
    res = run(["solve", "--mode", "none", "--n", "2", "--grid", "16"])
    assert res.exit_code == 0
    assert (tmp_path / "solve_none_n2_K0.csv").exists()
