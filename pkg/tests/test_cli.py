import csv
import json
from pathlib import Path

import pytest

from stablecap.cli import run
from stablecap.config import expand_sweep, parse_scenario, read_scenario
from stablecap.core import ValidationError

from cdp_fixture import write_fixture

SCEN = Path(__file__).resolve().parent.parent / "scenarios"

CYCLING_P3 = """
[params]
kappa_usd = 5.0
b_rate = 2.0
zeta_fraction = 0.2
epsilon_fraction = 0.1
alpha_usd = 1.0
x_bar_usd = 100.0
y_bar_usd = 100.0

[returns]
kind = "two-point"
values_fraction = [-0.2, 0.3]
probabilities = [0.5, 0.5]

[p3]
price_model = "linear"
delta_values_fraction = [0.0, 0.1, 0.2]
alloc_points = 3
n_points = 3
f_points = 3
bribe_values_fraction = [0.0, 0.3, 0.6]
"""


def test_solve_p1_writes_reproducible_json(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["solve-p1", "--scenario", str(SCEN / "p1_benign.toml"), "--out", str(a)]) == 0
    assert run(["solve-p1", "--scenario", str(SCEN / "p1_benign.toml"), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    head = doc["header"]
    assert head["seed"] == 7 and head["version"] and "samples" in head and "grid" in head
    assert doc["result"]["problem"] == "p1"


def test_seed_override_is_recorded(tmp_path):
    out = tmp_path / "r.json"
    assert run(["solve-p2", "--scenario", str(SCEN / "p2_maker.toml"), "--seed", "11",
                "--samples", "500", "--out", str(out)]) == 0
    head = json.loads(out.read_text())["header"]
    assert head["seed"] == 11 and head["samples"] == 500


def test_malformed_scenario_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[params]\nbeta_fraction = 0.0\nkappa_usd = -1.0\nsigma = 3\n")
    out = tmp_path / "r.json"
    assert run(["solve-p1", "--scenario", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert "beta must be > 0" in err and "kappa" in err and "sigma" in err


def test_broken_toml_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[params\n")
    assert run(["solve-p1", "--scenario", str(bad), "--out", str(tmp_path / "o.json")]) == 2


def test_exit_codes_for_usage_and_missing_input(tmp_path):
    assert run(["solve-p9", "--out", "x"]) == 64
    assert run(["solve-p1", "--scenario", str(tmp_path / "nope.toml"),
                "--out", str(tmp_path / "o.json")]) == 66
    assert run(["solve-p1"]) == 2


def test_cycling_p3_exits_3_and_still_writes(tmp_path):
    sc = tmp_path / "cycle.toml"
    sc.write_text(CYCLING_P3)
    out = tmp_path / "p3.json"
    assert run(["solve-p3", "--scenario", str(sc), "--out", str(out)]) == 3
    rep = json.loads(out.read_text())["result"]
    assert rep["diagnostics"]["converged"] is False


def test_solve_p3_default_converges(tmp_path):
    out = tmp_path / "p3.json"
    assert run(["solve-p3", "--scenario", str(SCEN / "p3_default.toml"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["header"]["price_model"] == "fixed-stbl"
    assert doc["result"]["diagnostics"]["termination"] == "fixed_point"


def test_simulate_p4_csv(tmp_path):
    out = tmp_path / "traj.csv"
    assert run(["simulate-p4", "--scenario", str(SCEN / "p4_growth.toml"), "--rounds", "5",
                "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["round", "r", "d", "B", "P1", "y_s", "y_a", "F"] and len(rows) == 6


def test_security_region_csv(tmp_path):
    out = tmp_path / "region.csv"
    code = run(["security-region", "--scenario", str(SCEN / "conjecture_sweep.toml"),
                "--gamma", "0.01,0.05", "--zeta", "0.1", "--delta", "0.1:0.2:2",
                "--beta", "0.66", "--r", "0.05", "--out", str(out)])
    assert code in (0, 3)
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert list(rows[0]) == ["gamma", "zeta", "delta", "beta", "r", "analytic_secure",
                             "empirical_secure"]
    assert run(["security-region", "--scenario", str(SCEN / "conjecture_sweep.toml"),
                "--zeta", "0", "--delta", "0.1", "--out", str(tmp_path / "z.csv")]) == 2


def test_sweep_writes_cells_in_lexicographic_order(tmp_path):
    out = tmp_path / "sweep"
    assert run(["solve-p2", "--scenario", str(SCEN / "conjecture_sweep.toml"), "--workers", "4",
                "--out", str(out)]) == 0
    index = json.loads((out / "sweep.json").read_text())["result"]["cells"]
    assert len(index) == 15
    labels = [(c["sweep"]["beta_fraction"], c["sweep"]["kappa_usd"]) for c in index]
    assert labels == sorted(labels)
    assert all((out / c["file"]).exists() for c in index)


def test_estimate_rho_outputs(tmp_path):
    cdp, prices = write_fixture(tmp_path)
    out = tmp_path / "rho"
    assert run(["estimate-rho", "--cdp-csv", str(cdp), "--prices", str(prices),
                "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"rho_per_cdp.csv", "rho_per_address.csv", "rho_histogram.csv",
            "summary.json"} <= names
    summary = json.loads((out / "summary.json").read_text())
    assert summary["mean_rho_per_cdp"] == pytest.approx(0.001, abs=1e-9)
    assert run(["estimate-rho", "--cdp-csv", str(tmp_path / "missing.csv"), "--prices",
                str(prices), "--out", str(out)]) == 66


def test_price_of_anarchy_command(tmp_path):
    out = tmp_path / "poa.json"
    assert run(["price-of-anarchy", "--scenario", str(SCEN / "p2_maker.toml"),
                "--samples", "500", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["ratio"] >= 0


def test_every_shipped_scenario_parses():
    for path in SCEN.glob("*.toml"):
        read_scenario(path)


def test_unknown_price_model_rejected():
    with pytest.raises(ValidationError):
        parse_scenario({"p3": {"price_model": "cubic"}}, "x")


def test_sweep_expansion_order():
    sc = parse_scenario({"sweep": {"kappa_usd": [2.0, 1.0], "b_rate": [0.1, 0.2]}}, "x")
    cells = expand_sweep(sc)
    assert [(c.params.b, c.params.kappa) for _, c in cells] == \
        [(0.1, 2.0), (0.1, 1.0), (0.2, 2.0), (0.2, 1.0)]
