import csv
import json
import math
import subprocess
import sys

import pytest

from harmonic_mortar.cli import INFSUP_COLUMNS, main
from harmonic_mortar.config import ConfigError, RunConfig, magnet_demo, parse_config


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


SMALL = {"discretization": {"n_theta": {"stator": 24, "rotor": 16}, "n_r": 3,
                            "degrees": [2], "levels": [1]}}


def small(**blocks):
    data = json.loads(json.dumps(SMALL))
    for key, val in blocks.items():
        data.setdefault(key, {}).update(val)
    return data


# -- configuration -----------------------------------------------------------------

def test_defaults_round_trip():
    cfg = RunConfig().validate()
    again = parse_config(json.loads(cfg.dumps()))
    assert again.to_dict() == cfg.to_dict()
    assert cfg.n_theta == {"stator": 144, "rotor": 144}
    assert cfg.c == [0.25, 1 / 3, 0.375, 0.5]


def test_round_trip_with_sources():
    cfg = parse_config(magnet_demo(RunConfig().geometry))
    assert len(cfg.sources["rotor"].magnets) == 6
    assert parse_config(json.loads(cfg.dumps())).to_dict() == cfg.to_dict()


def test_fraction_strings():
    cfg = parse_config({"multiplier": {"c": ["1/3", "3/8", 0.5]}})
    assert cfg.c == [1 / 3, 0.375, 0.5]


@pytest.mark.parametrize("data", [
    {"bogus": {}},
    {"geometry": {"r_gamma": 0.1}},
    {"geometry": {"radius": 0.1}},
    {"discretization": {"n_theta": 2}},
    {"discretization": {"degrees": [0]}},
    {"discretization": {"degrees": [4], "n_theta": 4}},
    {"multiplier": {"c": [1.5]}},
    {"multiplier": {"c": ["x"]}},
    {"multiplier": {"scope": "rotor"}},
    {"sources": {"stator": {"nu": -1}}},
    {"sources": {"rotor": {"magnets": [{"theta0": 1, "theta1": 0, "m": [1, 0]}]}}},
    {"sources": {"rotor": {"magnets": [{"theta0": 0, "theta1": 1, "m": [1]}]}}},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["infsup", "--config", write(tmp_path, {"multiplier": {"c": [2]}})]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["oracle", "--config", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert main(["solve", "--config", str(tmp_path / "broken.json")]) == 2


# -- oracle --------------------------------------------------------------------------

def test_oracle_output(capsys):
    assert main(["oracle", "--n-max", "4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "mode,beta"
    assert out[1] == "0,0.135732,min"
    assert out[-1] == "min beta = 0.135732 at mode 0"
    assert len(out) == 7


# -- infsup --------------------------------------------------------------------------

def test_infsup_csv(tmp_path, capsys):
    out = tmp_path / "beta.csv"
    cfg = write(tmp_path, small(multiplier={"c": [0.25, 0.5]}))
    assert main(["infsup", "--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == INFSUP_COLUMNS
    assert [(r["c"], r["N"], r["stable"]) for r in rows] == [("0.25", "6", "1"), ("0.5", "12", "0")]
    assert float(rows[0]["criterion"]) == pytest.approx(0.25)
    text = capsys.readouterr().out
    assert "1/4 |" in text and "1/2 |" in text


def test_infsup_c_zero_single_row(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["infsup", "--config", write(tmp_path, small(multiplier={"c": [0]})),
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1
    assert rows[0]["N"] == "0" and rows[0]["dim_MN"] == "1" and rows[0]["stable"] == "1"


def test_infsup_full_scope_flag(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["infsup", "--config", write(tmp_path, small(multiplier={"c": [0.25]})),
                 "--scope", "full", "--out", str(out)]) == 0
    assert list(csv.DictReader(out.open()))[0]["scope"] == "full"


def test_infsup_deterministic_across_threads(tmp_path):
    cfg = write(tmp_path, small(discretization={"degrees": [1, 2]}, multiplier={"c": [0.25, 0.375]}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["infsup", "--config", cfg, "--out", str(a)]) == 0
    assert main(["infsup", "--config", cfg, "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


# -- solve ---------------------------------------------------------------------------

def test_solve_zero_sources(tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert main(["solve", "--config", write(tmp_path, small(multiplier={"N": [4]})),
                 "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "energy=0 " in text
    rows = list(csv.DictReader(out.open()))
    assert all(float(r["value"]) == 0.0 for r in rows)
    assert sum(r["block"] == "multiplier" for r in rows) == 9
    assert (tmp_path / "u_grid.csv").exists()


def test_solve_magnet_demo(tmp_path, capsys):
    data = small(multiplier={"N": [6]}, sources={"alpha": [0.0, 0.3]})
    data["sources"].update(magnet_demo(RunConfig().geometry)["sources"])
    out = tmp_path / "m.csv"
    assert main(["solve", "--config", write(tmp_path, data), "--out", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("alpha=")]
    assert len(lines) == 2
    for line in lines:
        fields = dict(kv.split("=") for kv in line.replace("max|jump moment|", "jump").split()
                      if "=" in kv)
        assert float(fields["energy"]) > 0
        assert float(fields["jump"]) <= 1e-10
    assert (tmp_path / "m_grid0.csv").exists() and (tmp_path / "m_grid1.csv").exists()


def test_solve_manufactured_reports_error(tmp_path, capsys):
    data = small(multiplier={"N": [4]}, sources={"manufactured": True})
    assert main(["solve", "--config", write(tmp_path, data)]) == 0
    text = capsys.readouterr().out
    assert "H1 error=" in text and "lambda_cos3=" in text


def test_solve_too_rich_multiplier_fails(tmp_path, capsys):
    data = small(multiplier={"N": [12]})
    data["discretization"]["n_theta"] = 12
    with pytest.warns(RuntimeWarning):
        assert main(["solve", "--config", write(tmp_path, data)]) == 3
    assert "too rich" in capsys.readouterr().out


def test_dump_matrices(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["solve", "--config", write(tmp_path, small(multiplier={"N": [3]})),
                 "--out", str(out), "--dump-matrices"]) == 0
    A = (tmp_path / "s_A.txt").read_text().splitlines()
    B = (tmp_path / "s_B.txt").read_text().splitlines()
    assert A and B
    i, j, v = A[0].split()
    assert int(i) >= 0 and int(j) >= 0 and math.isfinite(float(v))
    assert max(int(l.split()[0]) for l in B) == 6


# -- convergence ---------------------------------------------------------------------

def test_convergence_table(tmp_path, capsys):
    data = {"discretization": {"n_theta": {"stator": 12, "rotor": 8}, "n_r": 2,
                               "degrees": [2], "levels": [1, 2, 3]},
            "multiplier": {"N": [3]}}
    assert main(["convergence", "--config", write(tmp_path, data)]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 3
    assert float(rows[-1]["rate"]) == pytest.approx(2.0, abs=0.3)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "harmonic_mortar", "oracle", "--n-max", "1"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("mode,beta")
