import json
import subprocess
import sys

import numpy as np
import pytest

from vgpdiag.cli import main
from vgpdiag.io import emit_report, format_float, to_csv, to_json


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 123456789.123456789):
        assert float(format_float(x)) == x
    assert to_json({"a": float("nan")}).strip() == '{\n  "a": null\n}'


def test_json_and_csv_share_numbers(tmp_path):
    rows = [{"N": 6, "beta": 0.1, "avg_sign": 0.99231234, "flag": True},
            {"N": 8, "beta": 0.5, "avg_sign": np.float64(0.61578), "flag": False}]
    j = emit_report(rows, "json", str(tmp_path / "r.json"))
    c = emit_report(rows, "csv", str(tmp_path / "r.csv"))
    parsed = json.loads(j)
    lines = c.strip().splitlines()
    assert lines[0] == "N,beta,avg_sign,flag"
    for row, line in zip(parsed, lines[1:]):
        vals = line.split(",")
        assert float(vals[2]) == row["avg_sign"] and int(vals[0]) == row["N"]
    with pytest.raises(ValueError):
        emit_report(rows, "xml")


def test_csv_quotes_nested_values():
    text = to_csv([{"a": [1, 2], "b": "x,y"}])
    assert text.splitlines()[1] == '"[1, 2]","x,y"'


def test_diagnose_h1(capsys):
    code, out, _ = run(["diagnose", "--model", "h1", "--lattice", "2x2", "--eta", "1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["vgp"] is True and rep["f_stoq"] > 0


def test_witness_serialised(capsys):
    code, out, _ = run(["diagnose", "--model", "unit_cell_2local", "--N", "3", "--edges", "0-1,1-2,0-2",
                        "--param", "h0=1", "--param", "h1=0.3", "--param", "h2=0.5"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["vgp"] is False
    assert rep["witness"]["indices"] and len(rep["witness"]["weight"]) == 2


def test_missing_file_is_validation_error(capsys):
    code, _, err = run(["diagnose", "--hamiltonian", "missing.txt"], capsys)
    assert code == 1 and json.loads(err)["error"] == "validation"


def test_unknown_flag_and_missing_seed(capsys):
    assert run(["describe", "--bogus"], capsys)[0] == 1
    assert run(["qmc", "--model", "heisenberg_ladder", "--N", "6", "--beta", "0.1"], capsys)[0] == 1
    assert run(["diagnose", "--model", "h_hard", "--lattice", "2x2", "--param", "a"], capsys)[0] == 1


def test_size_guard_exit_code(capsys):
    code, _, err = run(["diagnose", "--model", "h1", "--lattice", "4x4"], capsys)
    assert code == 2
    assert json.loads(err)["type"] == "SizeCapError"


def test_hamiltonian_file_and_check(tmp_path, capsys):
    path = tmp_path / "tri.txt"
    path.write_text("N=3\n1 X0 X1\n1 Y0 Y1\n1 X1 X2\n1 Y1 Y2\n1 X0 X2\n1 Y0 Y2\n")
    code, out, _ = run(["check", "--hamiltonian", str(path)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["method"] == "two_local_triangle"
    code, out, _ = run(["check", "--hamiltonian", str(path), "--method", "spectral"], capsys)
    assert json.loads(out)["vgp"] == rep["vgp"]


def test_check_falls_back_on_dependent_masks(tmp_path, capsys):
    path = tmp_path / "dep.txt"
    path.write_text("N=4\n-1 X0 X1\n-1 X1 X2\n-1 X0 X2\n-1 X3\n")
    code, out, _ = run(["check", "--hamiltonian", str(path)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["method"] == "spectral_fallback" and "precondition" in rep
    code, _, _ = run(["check", "--hamiltonian", str(path), "--method", "dx"], capsys)
    assert code == 1


def test_qmc_row_is_reproducible(tmp_path, capsys):
    argv = ["qmc", "--model", "heisenberg_ladder", "--N", "8", "--defects", "1", "--beta", "0.1",
            "--sweeps", "3000", "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, row = a.read_text().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert float(fields["avg_sign"]) > 0.9 and float(fields["exact_avg_sign"]) > 0.99


def test_scan_and_random_basis(capsys):
    code, out, _ = run(["scan", "--model", "heisenberg_ladder", "--sizes", "6,8", "--betas", "0.1",
                        "--defects", "1", "--sweeps", "500", "--seed", "1", "--format", "json"], capsys)
    assert code == 0 and len(json.loads(out)) == 2
    code, out, _ = run(["random-basis", "--sizes", "3", "--samples", "4", "--seed", "2"], capsys)
    assert code == 0 and out.startswith("N,dim,samples,formula")
    code, out, _ = run(["random-basis", "--pauli", "--N", "6", "--samples", "20", "--seed", "2"], capsys)
    assert code == 0 and "rel_error" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "vgpdiag", "describe", "--model", "heisenberg_ladder",
                          "--N", "4"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["N"] == 4
