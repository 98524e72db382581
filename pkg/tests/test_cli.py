import csv
import json

import numpy as np
import pytest

from obsentropy.cli import main, worked_examples
from obsentropy.io import write_operator_file


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_oe_uniform_computational(capsys):
    code, out, _ = run(capsys, "oe", "--state", "uniform:4", "--povm", "computational")
    assert code == 0
    assert "S_P      = 1.386294361" in out and "S        = 1.386294361" in out
    assert "macroscopic (S_P = S): yes" in out


def test_oe_pure_pm_basis(capsys):
    code, out, _ = run(capsys, "oe", "--state", "pure0:2", "--povm", "pm-basis")
    assert code == 0
    assert "S_P      = 0.6931471806" in out and "S        = 0\n" in out


def test_oe_base_two(capsys):
    code, out, _ = run(capsys, "oe", "--state", "uniform:8", "--povm", "balanced:2", "--base", "two")
    assert "S_P      = 3 (two)" in out


def test_malformed_file_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dimension": 2, "matrices": [[[1, 0], [0, 0]]]}')
    code, _, err = run(capsys, "oe", "--state", str(bad), "--povm", "computational")
    assert code == 1 and "2 entries, expected d*d = 4" in err
    write_operator_file(bad, [np.diag([0.7, 0.7])])
    code, _, err = run(capsys, "oe", "--state", str(bad), "--povm", "computational")
    assert code == 2 and "trace" in err


def test_macro_worked_example_from_files(capsys, tmp_path):
    state = tmp_path / "m.json"
    povm = tmp_path / "p.json"
    write_operator_file(state, [np.diag([0.15, 0.15, 0.35, 0.35])])
    write_operator_file(povm, [np.diag([1, 0, 0, 0]), np.diag([0, 1, 0, 0]), np.diag([0, 0, 1, 1])],
                        labels=["0", "1", "23"])
    code, out, _ = run(capsys, "macro", "--state", str(state), "--povm", str(povm))
    assert code == 0
    assert "outcomes ['0']  rank 1  c = 0.15" in out
    assert "outcomes ['23']  rank 2  c = 0.35" in out
    assert "commutes with all effects: yes" in out


def test_macro_uniform_and_non_macroscopic(capsys):
    code, out, _ = run(capsys, "macro", "--state", "uniform:4", "--povm", "ranks:1,3")
    assert code == 0 and out.count("c = 0.25") == 2
    code, _, err = run(capsys, "macro", "--state", "pure0:2", "--povm", "pm-basis")
    assert code == 3 and "NotMacroscopic, residual=5.000000e-01" in err


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "oe", "--state", "uniform:2")[0] == 1
    assert run(capsys, "oe", "--state", "nowhere", "--povm", "computational")[0] == 1


def _rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_tail_three_rows(capsys, tmp_path):
    out_csv, out_json = tmp_path / "t.csv", tmp_path / "t.json"
    code, out, _ = run(capsys, "tail", "--dims", "8,16,32", "--ensembles", "haar", "--deltas", "0.3",
                       "--samples", "10000", "--seed", "1", "--out-csv", str(out_csv), "--out-json", str(out_json))
    assert code == 0
    rows = _rows(out_csv)
    assert len(rows) == 3 and [r["d"] for r in rows] == ["8", "16", "32"]
    doc = json.loads(out_json.read_text())
    assert doc["config"]["samples"] == 10000 and doc["seed"] == 1
    assert open(out_csv).readline().startswith("# config: {")


def test_tail_uniform_state_never_hits(capsys, tmp_path):
    out_csv = tmp_path / "u.csv"
    code, _, _ = run(capsys, "tail", "--dims", "8,16,32", "--state", "uniform", "--samples", "2000",
                     "--out-csv", str(out_csv))
    assert code == 0
    assert all(r["n_hits"] == "0" for r in _rows(out_csv))


def test_tail_corrupted_bound_exit_code(capsys):
    code, _, err = run(capsys, "tail", "--dims", "8", "--samples", "200", "--bound-scale", "0")
    assert code == 4 and "soundness" in err


def test_tail_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('dims = [8]\nensembles = ["haar", "clifford"]\ndeltas = [0.2]\nsamples = 50\n')
    out_json = tmp_path / "c.json"
    code, _, _ = run(capsys, "tail", "--config", str(cfg), "--samples", "70", "--out-json", str(out_json))
    assert code == 0
    doc = json.loads(out_json.read_text())
    assert [r["n_samples"] for r in doc["rows"]] == [70, 70]
    assert doc["config"]["ensembles"] == ["haar", "clifford"]


def test_tail_bad_config(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("dims = [8\n")
    assert run(capsys, "tail", "--config", str(cfg))[0] == 1
    cfg.write_text("colour = 'red'\n")
    assert run(capsys, "tail", "--config", str(cfg))[0] == 1
    cfg.write_text("povm = 'ranks:1,2'\ndims = [8]\n")
    assert run(capsys, "tail", "--config", str(cfg))[0] == 2


def test_worked_examples(capsys):
    code, out, _ = run(capsys, "worked-examples")
    assert code == 0
    assert "with C -> 2^-10: 2^44\n" in out
    assert "prefactor 4/kappa: 2^40\n" in out
    assert "design bound <= 2^-11: yes" in out
    assert "exact value at eps = 1: 2^-13\n" in out
    assert worked_examples() == out.strip("\n").split("\n")


def test_design_quality(capsys):
    code, out, _ = run(capsys, "design-quality", "--ensemble", "clifford-group:1")
    assert code == 0
    lo, hi = (float(x) for x in out.splitlines()[1].split()[1:3])
    assert abs(lo) <= 1e-9 and abs(hi) <= 1e-9
    code, out, _ = run(capsys, "design-quality", "--ensemble", "identity:2")
    assert float(out.splitlines()[1].split()[1]) > 0
    code, _, err = run(capsys, "design-quality", "--ensemble", "identity:4", "--cap", "64")
    assert code == 2 and "cap" in err


@pytest.mark.slow
def test_design_quality_brickwork(capsys):
    code, out, _ = run(capsys, "design-quality", "--ensemble", "brickwork:3", "--depths", "1,2,4")
    assert code == 0
    ups = [float(line.split()[2]) for line in out.splitlines()[1:]]
    assert len(ups) == 3 and ups[0] >= ups[1] >= ups[2]
